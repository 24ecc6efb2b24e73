"""Fly a circle, then a square.

The shipped scenario starts eight agents on a line, asks for a circle of radius 3,
and switches to a square of side 4 after step 250. Formation control is
consensus on the shifted positions x - p, so the one-tap gains carry over.
"""

from pathlib import Path

import numpy as np

from memconsensus import simulate_formation
from memconsensus.scenario import load_scenario

sc = load_scenario(Path(__file__).resolve().parents[1] / "scenarios" / "formation_circle_square.json")
g = sc.build_graph()
p, _ = sc.build_params(g)
plan = sc.formation_plan()
traj = simulate_formation(g, p, plan, sc.sim_config(g.n))

for k in (0, 50, 100, 250, 251, 260, 300, 400, 500):
    print(f"k={k:<4} formation error {traj.formation_error[k]:.3e}")

# Relative positions at the end, measured from agent 1, should read off the square.
final = traj.x[-1] - traj.x[-1][0]
print(np.round(final, 6))
