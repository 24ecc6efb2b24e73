"""Deeper memory by gradient descent.

No closed form exists beyond one tap, so the free gains are tuned by
forward-difference descent on the worst mode's spectral radius,
warm-started from the one-tap optimum. The last tap is always set so the
taps sum to zero.
"""

from memconsensus import OptimizerConfig, laplacian_spectrum, optimize, parse_graph_spec, r0_star, r1_star

g = parse_graph_spec("ws:8:k=2,p=0.3,seed=22")
s = laplacian_spectrum(g)
tau = 0.1

print(f"M=0  r*={r0_star(s.lambda2, s.lambdaN):.4f}  (closed form)")
print(f"M=1  r*={r1_star(s.lambda2, s.lambdaN):.4f}  (closed form)")

for M in (2, 3):
    result = optimize(None, s, OptimizerConfig(memory=M, tau=tau))
    p = result.control_params(tau)
    taps = ", ".join(f"{t:.3f}" for t in p.theta)
    print(f"M={M}  r*={result.rate:.4f}  eps1={p.eps1:.3f} eps2={p.eps2:.3f} theta=({taps})")

# Each extra tap buys a little more speed, with diminishing returns.
