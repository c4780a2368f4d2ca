"""Tail windows: the numerical stand-in for limits along a sequence index."""

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NonStabilizing


@dataclass(frozen=True)
class TailPolicy:
    """Where a tail window starts, how long it is, and how flat it must be.

    A limit ``lim_j f(j)`` is declared to be the mean of ``f`` over the
    first ``window`` admissible indices ``j >= start``, provided the spread
    (max - min) over that window is at most ``tol``.
    """

    start: int
    window: int = 5
    tol: float = 1e-8

    def __post_init__(self):
        if int(self.start) != self.start or self.start < 1:
            raise ValueError(f"tail start must be a positive integer, got {self.start!r}")
        if int(self.window) != self.window or self.window < 3:
            raise ValueError(f"tail window must be an integer >= 3, got {self.window!r}")
        if not (self.tol > 0):
            raise ValueError(f"tail tol must be positive, got {self.tol!r}")

    def indices(self, after: int = 0, pool: Iterable[int] | None = None) -> list[int]:
        """First ``window`` indices strictly after ``after`` and at least ``start``.

        When ``pool`` is given, only its members are admissible (it is
        assumed sorted increasingly).
        """
        lo = max(self.start, after + 1)
        if pool is None:
            return list(range(lo, lo + self.window))
        out = []
        for m in pool:
            if m >= lo:
                out.append(int(m))
                if len(out) == self.window:
                    break
        if len(out) < self.window:
            raise NonStabilizing(
                f"pool has only {len(out)} admissible indices >= {lo}; "
                f"window needs {self.window}"
            )
        return out

    def nested(self, after: int = 0, pool=None) -> tuple[list[int], list[int]]:
        """Outer and inner index windows for an iterated limit."""
        outer = self.indices(after=after, pool=pool)
        inner = self.indices(after=max(outer), pool=pool)
        return outer, inner


def _settle(values: Sequence[float], tol: float, what: str) -> float:
    vals = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonStabilizing(f"{what}: non-finite value in tail window", values=vals)
    hi, lo = float(vals.max()), float(vals.min())
    spread = hi - lo
    if spread > tol:
        raise NonStabilizing(
            f"{what}: tail spread {spread:.3e} exceeds tol {tol:.1e}",
            spread=spread,
            values=vals,
        )
    if spread == 0.0:
        return float(vals[0])
    return float(vals.mean())


def tail_limit(
    f: Callable[[int], float],
    policy: TailPolicy,
    after: int = 0,
    pool=None,
    what: str = "tail_limit",
) -> float:
    """Stabilized limit of ``f(j)`` as ``j`` runs through the tail window.

    Raises
    ------
    NonStabilizing
        If the values over the window spread by more than ``policy.tol``.

    Examples
    --------
    >>> tail_limit(lambda j: 3.0, TailPolicy(start=10))
    3.0
    """
    idx = policy.indices(after=after, pool=pool)
    return _settle([f(j) for j in idx], policy.tol, what)


def double_tail_limit(
    f: Callable[[int, int], float],
    policy: TailPolicy,
    after: int = 0,
    pool=None,
    what: str = "double_tail_limit",
) -> float:
    """``lim_k lim_i f(k, i)`` with the inner window placed past the outer one."""
    outer, inner = policy.nested(after=after, pool=pool)
    inner_limits = [_settle([f(k, i) for i in inner], policy.tol, what) for k in outer]
    return _settle(inner_limits, policy.tol, what)
