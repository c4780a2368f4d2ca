"""Asymptotic stabilization of a sequence before the induction starts.

Two passes are applied to a raw source ``x_i``:

1. every ``x_n`` is rescaled by ``a_n`` so that all tail distances
   ``lim_i ||a_n x_n - x_i||`` agree with one common value ``lambda``;
2. if the iterated limits ``b_l = lim_k lim_i phi_{x_k - x_i}(x_l)`` do not
   vanish, the pairs ``x_{2l}, x_{2l+1}`` are differenced to kill them and
   the result is rescaled again.

All limits are tail windows (:mod:`equilex.tails`); nothing is extracted
by Ramsey-type subsequence arguments.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import itertools

import numpy as np
from scipy.optimize import brentq

from .errors import DivisionGuard, InvariantViolation, LambdaTooSmall, NonStabilizing, RootBracketError
from .norms import apply_functional
from .sources import SequenceSource
from .tails import TailPolicy, double_tail_limit, tail_limit

DEFAULT_MARGIN = 0.05
GUARD_ZERO = 1e-12


@dataclass
class Rescaling:
    """Result of the common-lambda rescaling.

    ``source`` yields ``a_n x_n``; ``scalar(n)`` is ``a_n`` and
    ``tail_distance(n)`` is the unscaled ``lambda_n``.
    """

    source: SequenceSource
    lam: float
    scalar: callable
    tail_distance: callable
    tail_norm: float = 1.0


@dataclass
class StabilizedSequence:
    source: SequenceSource
    lam: float
    C: float
    scalars: callable
    b_values: dict = field(default_factory=dict)
    differenced: bool = False
    rescalings: list = field(default_factory=list)

    def __post_init__(self):
        if not (1.0 < self.lam < 2.0):
            raise InvariantViolation(f"lambda={self.lam} outside (1, 2)", prop="lambda", measured=self.lam)


def _normalized(src: SequenceSource, oracle, policy: TailPolicy):
    t = tail_limit(lambda i: oracle.norm(src(i)), policy, what="tail norm")
    if t == 0.0:
        raise LambdaTooSmall("source tail vanishes")
    if t == 1.0:
        return src, 1.0
    out = SequenceSource(lambda i: src(i) / t, src.dim, src.max_index, kind=src.kind, params=src.params)
    return out, t


def rescale_to_common_lambda(src: SequenceSource, oracle, policy: TailPolicy, margin: float = DEFAULT_MARGIN) -> Rescaling:
    """Find scalars ``a_n`` with ``lim_i ||a_n x_n - x_i|| = lambda`` for every ``n``.

    The source is first divided by its tail norm.  ``lambda`` is the tail
    limit of ``lambda_n = lim_i ||x_n - x_i||``.  Each ``a_n`` is a bracketed
    root of ``a -> lim_i ||a x_n - x_i|| - lambda`` on
    ``[0, 1 + max(0, lambda - lambda_n)/eps + 1/2]`` with ``eps = (lambda-1)/4``;
    both cases ``lambda_n < lambda`` and ``lambda_n > lambda`` are handled by
    the same solve.  ``a_n = 1`` exactly when ``lambda_n`` already matches.

    Raises
    ------
    LambdaTooSmall
        If ``lambda <= 1 + margin``.
    RootBracketError
        If no sign change is found.
    """
    src, tnorm = _normalized(src, oracle, policy)

    @lru_cache(maxsize=None)
    def lam_n(n):
        xn = src(n)
        return tail_limit(lambda i: oracle.norm(xn - src(i)), policy, after=n, what=f"lambda_{n}")

    lam = tail_limit(lam_n, policy, what="lambda")
    if lam <= 1.0 + margin:
        raise LambdaTooSmall(f"common tail distance {lam:.6g} is not above 1 + {margin}")
    eps = (lam - 1.0) / 4.0

    @lru_cache(maxsize=None)
    def scalar(n):
        ln = lam_n(n)
        if abs(ln - lam) <= policy.tol:
            return 1.0
        xn = src(n)

        def h(a):
            return tail_limit(lambda i: oracle.norm(a * xn - src(i)), policy, after=n, what=f"rescale_{n}") - lam

        lo, hi = 0.0, 1.0 + max(0.0, lam - ln) / eps + 0.5
        h_lo = h(lo)
        if h_lo >= 0:
            raise RootBracketError(f"index {n}: tail norm {h_lo + lam:.6g} already exceeds lambda")
        for _ in range(8):
            if h(hi) > 0:
                break
            hi *= 2.0
        else:
            raise RootBracketError(f"index {n}: no sign change on [0, {hi}]")
        return float(brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))

    out = SequenceSource(
        lambda n: scalar(n) * src(n),
        src.dim,
        src.max_index - policy.window,
        kind=f"rescaled({src.kind})",
        params=src.params,
    )
    return Rescaling(out, lam, scalar, lam_n, tnorm)


def functional_limit(src: SequenceSource, oracle, policy: TailPolicy, ell: int) -> float:
    """``b_l = lim_k lim_i phi_{x_k - x_i}(x_l)`` with both windows past ``l``."""
    x_ell = src(ell)

    def f(k, i):
        return apply_functional(oracle.support(src(k) - src(i)), x_ell)

    return double_tail_limit(f, policy, after=ell, what=f"b_{ell}")


def kill_functional_limits(
    src: SequenceSource,
    oracle,
    policy: TailPolicy,
    probe: int | None = None,
    margin: float = DEFAULT_MARGIN,
    lam: float | None = None,
    check: bool = True,
) -> StabilizedSequence:
    """Make ``lim_k lim_i phi_{z_k - z_i}(z_l)`` vanish for probed ``l``.

    ``src`` must already be rescaled.  When every probed ``|b_l| <= tol``
    the source is returned unchanged; otherwise
    ``v_l = x_{2l+1} - (b_{2l+1}/b_{2l}) x_{2l}`` is formed, normalized,
    rescaled once more, and the probe is repeated on the output.

    Parameters
    ----------
    probe : int, optional
        Highest ``l`` probed; defaults to ``policy.start - 1``.
    lam : float, optional
        Common tail distance of ``src`` if already known.
    """
    probe = policy.start - 1 if probe is None else int(probe)
    probe = min(probe, src.max_index)
    b = {ell: functional_limit(src, oracle, policy, ell) for ell in range(1, probe + 1)}
    if lam is None:
        lam = rescale_to_common_lambda(src, oracle, policy, margin).lam

    if all(abs(v) <= policy.tol for v in b.values()):
        stab = StabilizedSequence(src, lam, (lam - 1.0) / 8.0, lambda n: 1.0, b_values=b)
        if check:
            check_stabilized(stab, oracle, policy)
        return stab

    @lru_cache(maxsize=None)
    def b_at(m):
        return b[m] if m in b else functional_limit(src, oracle, policy, m)

    @lru_cache(maxsize=None)
    def ratio(ell):
        lo, hi = b_at(2 * ell), b_at(2 * ell + 1)
        if abs(lo) < GUARD_ZERO:
            if abs(hi) > policy.tol:
                raise DivisionGuard(f"b_{2 * ell} vanishes while b_{2 * ell + 1} = {hi:.3e}")
            return 0.0
        return hi / lo

    def v(ell):
        return src(2 * ell + 1) - ratio(ell) * src(2 * ell)

    vsrc = SequenceSource(v, src.dim, (src.max_index - 1) // 2, kind=f"differenced({src.kind})")
    resc = rescale_to_common_lambda(vsrc, oracle, policy, margin)
    z = resc.source
    probe_out = min(probe, z.max_index)
    b_out = {ell: functional_limit(z, oracle, policy, ell) for ell in range(1, probe_out + 1)}
    bad = {ell: val for ell, val in b_out.items() if abs(val) > policy.tol}
    if bad:
        ell, val = next(iter(bad.items()))
        raise NonStabilizing(f"functional limit b_{ell} = {val:.3e} survives differencing", spread=abs(val))
    stab = StabilizedSequence(
        z,
        resc.lam,
        (resc.lam - 1.0) / 8.0,
        resc.scalar,
        b_values=b_out,
        differenced=True,
        rescalings=[resc],
    )
    stab.b_raw = b
    if check:
        check_stabilized(stab, oracle, policy)
    return stab


def usable_indices(stab: StabilizedSequence, policy: TailPolicy, head: int = 16) -> list[int]:
    idx = list(range(1, min(head, policy.start - 1, stab.source.max_index) + 1))
    idx += [j for j in policy.indices() if j <= stab.source.max_index]
    return idx


def check_stabilized(stab: StabilizedSequence, oracle, policy: TailPolicy, head: int = 16) -> dict:
    """Verify the separation inequalities the induction relies on.

    For sampled ``k != i``: ``||z_k - z_i|| > (1+lambda)/2``,
    ``||z_i|| < (3+lambda)/4`` and ``phi_{z_k - z_i}(z_k) > (lambda-1)/4``.
    Returns the worst slacks; raises :class:`InvariantViolation` otherwise.
    """
    lam, z = stab.lam, stab.source
    idx = usable_indices(stab, policy, head)
    sep = min(oracle.norm(z(k) - z(i)) for k, i in itertools.combinations(idx, 2)) - (1 + lam) / 2
    size = (3 + lam) / 4 - max(oracle.norm(z(i)) for i in idx)
    low = min(
        apply_functional(oracle.support(z(k) - z(i)), z(k))
        for k, i in itertools.permutations(idx, 2)
    ) - (lam - 1) / 4
    slacks = {"separation": sep, "size": size, "lower_bound": low}
    for name, s in slacks.items():
        if not s > 0:
            raise InvariantViolation(f"stabilized sequence fails {name} check (slack {s:.3e})", prop=name, measured=s)
    return slacks


def stabilize(src: SequenceSource, oracle, policy: TailPolicy, margin: float = DEFAULT_MARGIN, probe: int | None = None) -> StabilizedSequence:
    """Rescale to a common tail distance, then kill the functional limits."""
    resc = rescale_to_common_lambda(src, oracle, policy, margin)
    stab = kill_functional_limits(resc.source, oracle, policy, probe=probe, margin=margin, lam=resc.lam)
    if not stab.differenced:
        stab.scalars = resc.scalar
    stab.rescalings.insert(0, resc)
    return stab
