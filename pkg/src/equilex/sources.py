"""Deterministic vector sequences that play the role of weakly null sequences.

In a finite-dimensional section nothing is truly weakly null; the sources
here have coordinates that vanish pointwise as the index grows (disjoint
unit vectors, geometrically decaying perturbations, disjoint blocks), which
is all the tail-limit machinery ever looks at.
"""

from typing import Callable

import numpy as np

from .errors import DimensionError


class SequenceSource:
    """An indexed family ``i -> x_i`` of points in ``R^dim``, ``1 <= i <= max_index``.

    Values are memoized; the returned arrays are read-only so that the
    memo cannot be corrupted by callers.
    """

    def __init__(
        self,
        generate: Callable[[int], np.ndarray],
        dim: int,
        max_index: int,
        kind: str = "composed",
        params: dict | None = None,
    ):
        self._generate = generate
        self.dim = int(dim)
        self.max_index = int(max_index)
        self.kind = kind
        self.params = dict(params or {})
        self._memo: dict[int, np.ndarray] = {}

    def __call__(self, i: int) -> np.ndarray:
        i = int(i)
        if i < 1 or i > self.max_index:
            raise IndexError(f"{self.kind} source has indices 1..{self.max_index}, got {i}")
        x = self._memo.get(i)
        if x is None:
            x = np.array(self._generate(i), dtype=float)
            if x.shape != (self.dim,):
                raise DimensionError(f"source produced shape {x.shape}, expected ({self.dim},)")
            x.setflags(write=False)
            self._memo[i] = x
        return x

    def __repr__(self):
        return f"SequenceSource(kind={self.kind!r}, dim={self.dim}, max_index={self.max_index}, params={self.params})"


def unit_basis(dim: int) -> SequenceSource:
    """``x_i = e_i`` (coordinate ``i - 1``)."""

    def gen(i):
        x = np.zeros(dim)
        x[i - 1] = 1.0
        return x

    return SequenceSource(gen, dim, dim, kind="unit-basis")


def perturbed_basis(dim: int, beta: float) -> SequenceSource:
    """``x_i = e_i + beta**i * e_0``; coordinate 0 is reserved for the perturbation."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")

    def gen(i):
        x = np.zeros(dim)
        x[i] = 1.0
        x[0] = beta**i
        return x

    return SequenceSource(gen, dim, dim - 1, kind="perturbed-basis", params={"beta": beta})


def block_basis(dim: int, block: int, profile=None, oracle=None) -> SequenceSource:
    """Disjoint blocks of length ``block`` carrying a fixed profile.

    The profile is normalized in ``oracle``'s norm when one is supplied,
    otherwise in the Euclidean norm.
    """
    block = int(block)
    if block < 1:
        raise ValueError("block length must be positive")
    prof = np.ones(block) if profile is None else np.asarray(profile, dtype=float)
    if prof.shape != (block,):
        raise ValueError(f"profile must have length {block}")
    if oracle is not None:
        padded = np.zeros(dim)
        padded[:block] = prof
        prof = prof / oracle.norm(padded)
    else:
        prof = prof / np.linalg.norm(prof)

    def gen(i):
        x = np.zeros(dim)
        x[(i - 1) * block : i * block] = prof
        return x

    return SequenceSource(
        gen, dim, dim // block, kind="block", params={"block": block, "profile": prof.tolist()}
    )


def composed(fn: Callable[[int], np.ndarray], dim: int, max_index: int, kind="composed", **params):
    return SequenceSource(fn, dim, max_index, kind=kind, params=params)
