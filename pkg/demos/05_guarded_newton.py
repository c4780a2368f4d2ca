"""
Newton's method with certified radii
====================================

Before iterating, the solver checks on a ball that the preconditioned map
stays close to the identity and that its Taylor remainder is small.  If the
check fails the radius is halved and the check repeated.
"""

import numpy as np

from equilex import DifferentiableMap, GuardFailed, guard_check, solve

u = np.array([1.0, 0.0])


def bump(c):
    # x + c |x|^2 u has derivative Id at 0 and curvature growing with c
    return DifferentiableMap(2, lambda x: x + c * (x @ x) * u, lambda x: np.eye(2) + 2 * c * np.outer(u, x))


f = bump(0.2)
for radius in (10.0, 1.0, 0.3):
    cert = guard_check(f, radius)
    print(f"radius {radius:5.2f}: |Dg - Id| <= {cert.max_id_deviation:.3f}, taylor ratio <= {cert.max_taylor_ratio:.3f}, passed = {cert.passed}")

target = np.array([0.02, 0.0])
try:
    solve(f, target, radius=10.0, max_halvings=0)
except GuardFailed as exc:
    print("without halving:", exc)

r = solve(f, target, radius=10.0)
print(f"with halving: radius {r.radius}, {r.iterations} iterations, residual {r.residual:.1e}")
for t in r.trace:
    print("  ", {k: f"{v:.2e}" for k, v in t.items() if isinstance(v, float)})

# a linear map needs exactly one step
A = np.array([[2.0, 0.3], [-0.1, 0.5]])
print("affine iterations:", solve(DifferentiableMap(2, lambda x: A @ x, lambda x: A), np.array([0.1, 0.2])).iterations)
