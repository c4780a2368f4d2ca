"""
A sequence that needs real corrections
======================================

The perturbed basis ``x_i = e_i + beta^i e_0`` is not equilateral: its tail
distances differ from one index to the next.  Stabilization rescales each
vector so the tail distance matches a common ``lambda``, and each new point
then needs a small but nonzero Newton correction.
"""

import numpy as np

from equilex import ExhaustedPool, build, parse_config
from equilex.norms import LpNorm
from equilex.sources import perturbed_basis
from equilex.stabilizer import rescale_to_common_lambda
from equilex.tails import TailPolicy

# in l_2 the rescaling scalars have a closed form: (1 + 4^-k)^(-1/2) for beta = 1/2
r = rescale_to_common_lambda(perturbed_basis(64, 0.5), LpNorm(2, 64), TailPolicy(34, 5, 1e-8))
for k in (1, 2, 3, 6, 12):
    print(f"a_{k:<2d} = {r.scalar(k):.12f}   closed form {(1 + 4.0**-k) ** -0.5:.12f}")

# the automatic tail start is pushed out far enough for beta^i to fall below the tail tolerance
doc = "{space: lp, p: 2, dim: 64, n_points: 8, sequence: perturbed-basis, builder.gate: measured}"
cfg = parse_config(doc)
print("tail.start resolved to", cfg.tail_start)
res = build(cfg)
print(f"lambda = {res.lam:.15f}, defect = {res.defect:.2e}")

# every step's Newton trace: residuals shrink by far more than the required factor 4
for log in res.state.logs[1:]:
    nt = log["newton"]
    decay = max(nt["decay"], default=0.0)
    print(f"step {log['step']}: K = {log['K']:2d}  |a| = {log['a_norm']:.2e}  iterations = {nt['iterations']}  worst decay = {decay:.1e}")

# the fixed epsilon schedule is far too strict for this family: the tail row of the
# Jacobian carries entries of order beta^K while epsilon is of order 1e-16
try:
    build(cfg.replace(**{"builder.gate": "class"}))
except ExhaustedPool as exc:
    print(f"class gate: {type(exc).__name__} at step {exc.step_index}, {len(exc.attempts)} candidates rejected")

D = np.array([[np.linalg.norm(x - y) for y in res.points] for x in res.points])
print("distance matrix minus lambda (max abs off-diagonal):", np.max(np.abs(D - res.lam * (1 - np.eye(8)))))
