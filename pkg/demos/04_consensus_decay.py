"""Watch the consensus error shrink at the predicted rate.

Eight agents on a path start at random positions and velocities in
[-10, 10]. With the one-tap optimal gains the error should decay roughly
like r1*^k.
"""

import numpy as np

from memconsensus import SimConfig, estimate_rate, gains_m1, generate_graph, laplacian_spectrum, simulate_consensus

g = generate_graph("path", 8)
s = laplacian_spectrum(g)
rep = gains_m1(s.lambda2, s.lambdaN, tau=0.1)

cfg = SimConfig.random(g.n, horizon=400, seed=1)
traj = simulate_consensus(g, rep.params, cfg)

for k in (0, 50, 100, 200, 300, 400):
    print(f"k={k:<4} e_norm={traj.e_norm[k]:.3e}   r1*^k * e_norm(0)={rep.r_star**k * traj.e_norm[0]:.3e}")

print("fitted rate over the last 100 steps:", round(estimate_rate(traj.e_norm, 100), 6))
print("closed-form r1*:                    ", round(rep.r_star, 6))

# The average velocity never moves, because the memory taps sum to zero.
drift = np.abs(traj.mean_velocity() - cfg.v0.mean(axis=0)).max()
print("largest change in mean velocity:", drift)
