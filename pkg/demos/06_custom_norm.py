"""
A norm given only as a function
===============================

Any smooth norm can be supplied as a Python function.  Its duality map is
then computed by central differences and rescaled so it norms the point
exactly.  Here ``||x|| = sqrt(|x|_2^2 + |x|_4^2)``, which is not an ``l_p``
norm but is smooth away from zero.
"""

import numpy as np

from equilex import BuildSettings, CustomNorm, TailPolicy, construct, stabilize, unit_basis


def mixed(x):
    return np.sqrt(np.sum(x**2, axis=-1) + np.sqrt(np.sum(x**4, axis=-1)))


dim = 40
oracle = CustomNorm(mixed, dim, gradient_step=1e-6, vectorized=True, name="l2+l4")
policy = TailPolicy(16, 5, 1e-8)
stab = stabilize(unit_basis(dim), oracle, policy)
# unit vectors have norm sqrt 2 and are normalized first, so lambda = sqrt(2 + sqrt 2) / sqrt 2
print(f"lambda = {stab.lam:.12f}, exact {np.sqrt(1 + 1 / np.sqrt(2)):.12f}")

res = construct(oracle, stab, policy, BuildSettings(4))
print(f"{len(res.points)} points, defect = {res.defect:.1e}")

x = np.random.default_rng(0).standard_normal(dim)
phi = oracle.support(x)
print(f"phi_x(x) - ||x|| = {phi(x) - oracle.norm(x):+.1e}, sampled dual norm = {oracle.dual_norm(phi.coeffs, base=x):.9f}")
