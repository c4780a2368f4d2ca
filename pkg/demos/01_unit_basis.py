"""
Equilateral sets from the unit vector basis
===========================================

In ``l_p`` the unit vectors are already equilateral with common distance
``2^(1/p)``.  The builder should find that fixed point: every Newton solve
starts at zero and stays there, so the defect is zero to machine precision.
"""

import numpy as np

from equilex import build, parse_config

# a config is a small YAML mapping; dotted keys and nested sections both work
for p in (1.5, 2.0, 3.0):
    cfg = parse_config(f"{{space: lp, p: {p}, dim: 64, n_points: 8}}")
    res = build(cfg)
    print(f"p = {p}: lambda = {res.lam:.15f} (2^(1/p) = {2 ** (1 / p):.15f}), defect = {res.defect:.1e}")

# the points are the first eight unit vectors, taken in the order the builder chose them
K = [log["K"] for log in res.state.logs]
print("chosen sequence indices:", K)
print("support of each point:", [int(np.flatnonzero(x)[0]) for x in res.points])

# each step records the size of its correction and the property checks
for log in res.state.logs[1:4]:
    slack = min(v["slack"] for v in log["properties"].values())
    print(f"step {log['step']}: K = {log['K']}, |a| = {log['a_norm']:.1e}, smallest property slack = {slack:.2e}")
