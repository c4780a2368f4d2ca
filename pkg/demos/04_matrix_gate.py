"""
The uniformly invertible matrix class
=====================================

Matrices with entries at most 2, diagonal at least ``C`` and tiny entries
above the diagonal are invertible with a norm bound depending only on
``C`` and the size.  The epsilon schedule fixes how tiny "tiny" must be.
"""

import numpy as np

from equilex import eps_schedule, in_class, inverse_norm_check
from equilex.gate import sample_class_member, verify_schedule

C = (np.sqrt(2) - 1) / 8
sched = eps_schedule(C, 8)
print(f"C = {C:.6f}")
for N in range(1, 9):
    eps = f"{sched.eps_at(N):.3e}" if N >= 2 else "    -    "
    print(f"N = {N}: eps_N = {eps}, R_N = {sched.R_at(N):.3e}")

# sampled members, including ones pushed to the edges of the class
rows = verify_schedule(C, 8, samples=500, seed=1)
for r in rows:
    print(f"N = {r['N']}: worst ||A^-1|| = {r['max_inverse_norm']:.3e} <= R_N = {r['R_N']:.3e}, failures = {r['failures']}")

# an above-diagonal entry larger than eps leaves the class
A = sample_class_member(np.random.default_rng(2), C, sched, 3)
B = A.copy()
B[0, 2] = 10 * sched.eps_at(3)
print("member:", in_class(A, C, sched), " with a large upper entry:", in_class(B, C, sched))
print("inverse norm check on the member:", inverse_norm_check(A, sched.R_at(3)))
