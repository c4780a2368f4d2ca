"""Uniformly invertible matrix classes and an explicit epsilon schedule.

``A_{NxN}(C, eps)`` is the set of ``N x N`` matrices with

1. ``|a_ij| <= 2`` everywhere,
2. ``|a_ii| >= C`` on the diagonal,
3. ``|a_ij| <= eps_j`` above the diagonal (``i < j``).

:func:`eps_schedule` produces ``eps_j`` and bounds ``R_N`` with
``||A^{-1}||_2 <= R_N`` for every member.  Write ``A = B + E`` with ``B``
the lower triangle including the diagonal.  Forward substitution gives
``||B^{-1}||_2 <= beta_N = (sqrt(N)/C) (1 + 2/C)^(N-1)`` and the schedule
keeps ``||B^{-1} E||_2 <= 1/2``, so a Neumann series yields
``||A^{-1}||_2 <= 2 beta_N``.
"""

from dataclasses import dataclass
import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import InvariantViolation, SingularMatrix

PIVOT_FLOOR = 1e-14


@dataclass(frozen=True)
class EpsSchedule:
    """``eps[j]`` for ``2 <= j <= N_max`` and ``R[N]`` for ``1 <= N <= N_max``.

    Both arrays are indexed by the mathematical index; slots below the
    first valid index hold NaN.
    """

    C: float
    N_max: int
    eps: np.ndarray
    R: np.ndarray

    def eps_at(self, j: int) -> float:
        if not 2 <= j <= self.N_max:
            raise IndexError(f"eps_j defined for 2 <= j <= {self.N_max}, got {j}")
        return float(self.eps[j])

    def R_at(self, n: int) -> float:
        if not 1 <= n <= self.N_max:
            raise IndexError(f"R_N defined for 1 <= N <= {self.N_max}, got {n}")
        return float(self.R[n])

    def as_dict(self):
        return {
            "C": self.C,
            "N_max": self.N_max,
            "eps": [float(e) for e in self.eps[2:]],
            "R": [float(r) for r in self.R[1:]],
        }


def triangular_inverse_bound(C: float, N: int) -> float:
    """``(sqrt(N)/C) (1 + 2/C)^(N-1)``: bound on ``||B^{-1}||_2`` for the lower part."""
    return np.sqrt(N) / C * (1.0 + 2.0 / C) ** (N - 1)


def eps_schedule(C: float, N_max: int) -> EpsSchedule:
    """Explicit Neumann-series schedule for ``A_{NxN}(C, eps)``, ``N <= N_max``.

    Examples
    --------
    >>> s = eps_schedule(1.0, 1)
    >>> s.R_at(1)
    1.0
    """
    if not (0.0 < C < 1.0):
        raise ValueError(f"C must lie in (0, 1), got {C}")
    if int(N_max) != N_max or N_max < 1:
        raise ValueError(f"N_max must be a positive integer, got {N_max}")
    N_max = int(N_max)
    beta = np.array([np.nan] + [triangular_inverse_bound(C, n) for n in range(1, N_max + 1)])
    eps = np.full(N_max + 1, np.nan)
    top = np.sqrt(N_max) * beta[N_max]
    for j in range(2, N_max + 1):
        eps[j] = min(C * 2.0 ** (-(j + 2)) / top, np.nextafter(1.0, 0.0))
    R = 2.0 * beta
    # N = 1 has no upper part: the inverse is 1/a_11 exactly
    R[1] = 1.0 / C
    eps.setflags(write=False)
    R.setflags(write=False)
    return EpsSchedule(float(C), N_max, eps, R)


def in_class(A, C: float, sched: EpsSchedule) -> bool:
    """Exact membership test for ``A_{NxN}(C, eps)``; no tolerance is applied."""
    A = np.asarray(A, dtype=float)
    N = A.shape[0]
    if A.shape != (N, N) or N > sched.N_max:
        return False
    absA = np.abs(A)
    if np.any(absA > 2.0):
        return False
    if np.any(np.diag(absA) < C):
        return False
    for j in range(1, N):
        if np.any(absA[:j, j] > sched.eps[j + 1]):
            return False
    return True


def inverse_norm_check(A, bound: float) -> tuple[bool, float]:
    """Spectral norm of ``A^{-1}`` via partially pivoted LU.

    Returns ``(measured <= bound, measured)``.

    Raises
    ------
    SingularMatrix
        If a pivot falls below ``1e-14`` in magnitude.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"square matrix required, got shape {A.shape}")
    with warnings.catch_warnings():
        # an exactly zero pivot is reported below as SingularMatrix
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(A, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if np.any(pivots < PIVOT_FLOOR):
        raise SingularMatrix(f"pivot {pivots.min():.3e} below {PIVOT_FLOOR}")
    inv = lu_solve((lu, piv), np.eye(A.shape[0]))
    measured = float(np.linalg.norm(inv, 2))
    return measured <= bound, measured


def sample_class_member(rng, C: float, sched: EpsSchedule, N: int, extreme: float = 0.25) -> np.ndarray:
    """Draw a random member of ``A_{NxN}(C, eps)``.

    With probability ``extreme`` each entry is pushed to its bound
    (``|a_ii| = C``, lower entries ``+-2``, upper entries ``+-eps_j``), which
    is where inverses are largest.
    """
    A = np.empty((N, N))
    for i in range(N):
        for j in range(N):
            edge = rng.random() < extreme
            sign = rng.choice((-1.0, 1.0))
            if i == j:
                A[i, j] = sign * (C if edge else rng.uniform(C, 2.0))
            elif i > j:
                A[i, j] = sign * 2.0 if edge else rng.uniform(-2.0, 2.0)
            else:
                e = sched.eps[j + 1]
                A[i, j] = sign * e if edge else rng.uniform(-e, e)
    return A


def verify_schedule(C: float, N_max: int, samples: int = 1000, seed: int = 0) -> list[dict]:
    """Sample class members for every ``N <= N_max`` and compare ``||A^{-1}||_2`` with ``R_N``."""
    sched = eps_schedule(C, N_max)
    rng = np.random.default_rng(seed)
    rows = []
    for N in range(1, N_max + 1):
        worst, failures = 0.0, 0
        for _ in range(samples):
            A = sample_class_member(rng, C, sched, N)
            if not in_class(A, C, sched):
                raise InvariantViolation(f"sampled matrix left the class at N = {N}")
            try:
                ok, measured = inverse_norm_check(A, sched.R_at(N))
            except SingularMatrix:
                ok, measured = False, np.inf
            failures += not ok
            worst = max(worst, measured)
        rows.append({"N": N, "R_N": sched.R_at(N), "max_inverse_norm": worst, "failures": failures, "samples": samples})
    return rows
