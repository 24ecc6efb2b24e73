"""How fast can eight agents agree? It depends on one number per network.

The optimal memoryless and one-tap rates are functions of the eigenratio
lambda2 / lambdaN alone. This script computes that ratio for five small
networks and the rates it buys.
"""

from memconsensus import generate_graph, laplacian_spectrum, parse_graph_spec, r0_star, r1_star

networks = {
    # random stand-ins: seeds picked so the ratios land near the usual values
    "small world (ws, seed 22)": parse_graph_spec("ws:8:k=2,p=0.3,seed=22"),
    "scale free (ba, seed 9)": parse_graph_spec("ba:8:m=1,seed=9"),
    "path P8": generate_graph("path", 8),
    "cycle C8": generate_graph("cycle", 8),
    "bipartite K3,5": generate_graph("cbp", parts=(3, 5)),
}

print(f"{'network':<28}{'lambda2':>10}{'lambdaN':>10}{'ratio':>9}{'r0*':>9}{'r1*':>9}")
for name, g in networks.items():
    s = laplacian_spectrum(g)
    ratio = s.lambda2 / s.lambdaN
    print(
        f"{name:<28}{s.lambda2:>10.4f}{s.lambdaN:>10.4f}{ratio:>9.3f}"
        f"{r0_star(s.lambda2, s.lambdaN):>9.4f}{r1_star(s.lambda2, s.lambdaN):>9.4f}"
    )

# A bigger ratio means faster consensus, and one memory tap always helps.
# The gain is largest on poorly connected graphs such as the path.
