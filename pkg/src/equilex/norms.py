"""Smooth norms, their duality maps, and the modulus of smoothness.

A norm oracle evaluates ``||x||`` on ``R^dim`` and returns the support
functional ``phi_x``: the unique functional of dual norm one with
``phi_x(x) = ||x||``.  For a uniformly smooth norm this is the gradient of
the norm away from the origin.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NonFiniteError, NonSmoothPoint, NonStabilizing, ZeroVectorError
from .tails import TailPolicy, tail_limit

P_MIN, P_MAX = 1.01, 100.0


def _check_point(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (dim,):
        raise DimensionError(f"expected a vector of length {dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("point has non-finite coordinates")
    return x


class NormOracle:
    """Common interface; see :class:`LpNorm` and :class:`CustomNorm`."""

    kind = "abstract"
    dim: int

    def norm(self, x) -> np.ndarray | float:
        raise NotImplementedError

    def support(self, x) -> "SupportFunctional":
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}


class LpNorm(NormOracle):
    """The ``l_p`` norm on ``R^dim`` for ``1.01 <= p <= 100``.

    ``p = 1`` and ``p = inf`` are rejected: neither norm is uniformly smooth.
    The upper cap keeps ``|x_i|**(p-1)`` inside floating-point range.

    Examples
    --------
    >>> LpNorm(2, 2).norm([3.0, 4.0])
    5.0
    """

    kind = "lp"

    def __init__(self, p: float, dim: int):
        p = float(p)
        if p == 1.0 or np.isinf(p):
            raise ValueError(f"p={p} is not uniformly smooth")
        if not (P_MIN <= p <= P_MAX):
            raise ValueError(f"p must lie in [{P_MIN}, {P_MAX}], got {p}")
        if int(dim) != dim or dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim}")
        self.p = p
        self.q = p / (p - 1.0)
        self.dim = int(dim)

    def __repr__(self):
        return f"LpNorm(p={self.p}, dim={self.dim})"

    def norm(self, x):
        x = _check_point(x, self.dim)
        return lp_norm(x, self.p)

    def support(self, x):
        x = _check_point(x, self.dim)
        nx = lp_norm(x, self.p)
        if nx == 0.0:
            raise ZeroVectorError("support functional of the zero vector is undefined")
        coeffs = np.sign(x) * (np.abs(x) / nx) ** (self.p - 1.0)
        return SupportFunctional(coeffs, nx)

    def dual_norm(self, coeffs):
        return lp_norm(np.asarray(coeffs, dtype=float), self.q)

    def describe(self):
        return {"kind": self.kind, "p": self.p, "dim": self.dim}


def lp_norm(x, p):
    """Overflow-safe ``l_p`` norm along the last axis."""
    a = np.abs(np.asarray(x, dtype=float))
    m = a.max(axis=-1, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    s = np.sum((a / safe) ** p, axis=-1) ** (1.0 / p)
    out = np.where(m[..., 0] > 0, m[..., 0] * s, 0.0)
    return float(out) if out.ndim == 0 else out


class CustomNorm(NormOracle):
    """A user-supplied smooth norm with a finite-difference duality map.

    Parameters
    ----------
    func : callable
        Maps a 1-D array of length ``dim`` to its norm.  If ``vectorized``
        is true it must also accept stacked arrays and reduce the last axis.
    dim : int
    gradient_step : float
        Step of the central differences used for the gradient.
    """

    kind = "custom-smooth"

    def __init__(self, func, dim, gradient_step=1e-6, vectorized=False, name="custom", dual_samples=64):
        if gradient_step <= 0:
            raise ValueError("gradient_step must be positive")
        self.func = func
        self.dim = int(dim)
        self.gradient_step = float(gradient_step)
        self.vectorized = vectorized
        self.name = name
        self.dual_samples = int(dual_samples)

    def __repr__(self):
        return f"CustomNorm(name={self.name!r}, dim={self.dim}, gradient_step={self.gradient_step})"

    def norm(self, x):
        x = _check_point(x, self.dim)
        if x.ndim == 1:
            return float(self.func(x))
        if self.vectorized:
            return np.asarray(self.func(x), dtype=float)
        return np.apply_along_axis(lambda v: float(self.func(v)), -1, x)

    def support(self, x):
        x = _check_point(x, self.dim)
        nx = float(self.func(x))
        if nx == 0.0:
            raise ZeroVectorError("support functional of the zero vector is undefined")
        h = self.gradient_step
        eye = np.eye(self.dim) * h
        fwd = np.array([self.func(x + e) for e in eye])
        bwd = np.array([self.func(x - e) for e in eye])
        grad = (fwd - bwd) / (2 * h)
        kink = np.max(np.abs((fwd - nx) - (nx - bwd))) / h
        if kink > np.sqrt(h) * max(1.0, 1.0 / nx):
            raise NonSmoothPoint(f"one-sided derivatives differ by {kink:.3e} at this point")
        val = float(grad @ x)
        if val <= 0:
            raise NonSmoothPoint("finite-difference gradient does not norm the point")
        coeffs = grad * (nx / val)
        phi = SupportFunctional(coeffs, nx)
        dn = self.dual_norm(coeffs, base=x)
        if dn > 1.0 + 1e-6:
            raise NonSmoothPoint(f"sampled dual norm {dn:.9f} exceeds 1")
        return phi

    def dual_norm(self, coeffs, base=None, samples=None, seed=0):
        """Sampled lower estimate of the dual norm of ``coeffs``.

        Probes the coordinate axes, seeded Gaussian directions and, when
        given, the point the functional was built at.
        """
        coeffs = np.asarray(coeffs, dtype=float)
        rng = np.random.default_rng(seed)
        n = self.dual_samples if samples is None else samples
        dirs = [np.eye(self.dim), -np.eye(self.dim), rng.standard_normal((n, self.dim))]
        if base is not None:
            dirs.append(np.asarray(base, dtype=float)[None, :])
        u = np.vstack(dirs)
        norms = self.norm(u)
        return float(np.max((u @ coeffs) / norms))

    def describe(self):
        return {"kind": self.kind, "name": self.name, "dim": self.dim, "gradient_step": self.gradient_step}


@dataclass(frozen=True)
class SupportFunctional:
    """Coordinate representation of ``phi_x``; ``base_norm`` is ``||x||``."""

    coeffs: np.ndarray
    base_norm: float

    def __call__(self, y):
        return apply_functional(self, y)


def norm(oracle: NormOracle, x) -> float:
    return oracle.norm(x)


def support_functional(oracle: NormOracle, x) -> SupportFunctional:
    """The duality map at ``x != 0``.

    For ``l_p`` the closed form ``sign(x_i)|x_i|^(p-1) / ||x||^(p-1)`` is
    used; custom norms go through central differences followed by an exact
    rescaling so that ``phi_x(x) = ||x||``.
    """
    return oracle.support(x)


def apply_functional(phi: SupportFunctional, y) -> float:
    y = np.asarray(y, dtype=float)
    if y.shape != phi.coeffs.shape:
        raise DimensionError(f"functional of length {phi.coeffs.shape[0]} applied to shape {y.shape}")
    return float(phi.coeffs @ y)


def dual_norm(oracle: NormOracle, phi: SupportFunctional) -> float:
    """Dual norm of a functional: exact conjugate norm for ``l_p``, sampled otherwise."""
    return oracle.dual_norm(phi.coeffs)


def _unit_pairs(oracle, rng, n):
    x = rng.standard_normal((n, oracle.dim))
    y = rng.standard_normal((n, oracle.dim))
    x /= oracle.norm(x)[:, None]
    y /= oracle.norm(y)[:, None]
    return x, y


def modulus_of_smoothness(oracle: NormOracle, tau: float, samples: int = 100_000, seed: int = 0, batch: int = 8192, pairs=None) -> float:
    """Sampled lower estimate of ``rho(tau) = sup ½||x+tau y|| + ½||x-tau y|| - 1``.

    ``x`` and ``y`` are drawn as normalized Gaussian vectors from a
    generator seeded with ``seed``; the result is reproducible and never
    exceeds the true modulus.  Extra pairs ``(X, Y)`` (rows, any nonzero
    scale) are normalized and included in the maximum.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    best = -np.inf
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        x, y = _unit_pairs(oracle, rng, n)
        vals = 0.5 * oracle.norm(x + tau * y) + 0.5 * oracle.norm(x - tau * y) - 1.0
        best = max(best, float(vals.max()))
        done += n
    if pairs is not None:
        X, Y = (np.atleast_2d(np.asarray(a, dtype=float)) for a in pairs)
        X = X / oracle.norm(X)[:, None]
        Y = Y / oracle.norm(Y)[:, None]
        vals = 0.5 * oracle.norm(X + tau * Y) + 0.5 * oracle.norm(X - tau * Y) - 1.0
        best = max(best, float(vals.max()))
    return best


def extended_norm(oracle: NormOracle, y, a: float, tail, policy: TailPolicy, after: int = 0, pool=None) -> float:
    """``|||(y, a)||| = lim_j ||y - a x_j||`` along the tail of ``tail``."""
    y = _check_point(y, oracle.dim)
    return tail_limit(lambda j: oracle.norm(y - a * tail(j)), policy, after=after, pool=pool, what="extended_norm")


def extended_support_apply(oracle: NormOracle, y, a: float, z, b: float, tail, policy: TailPolicy, after: int = 0, pool=None) -> float:
    """``phi_(y,a)((z,b)) = lim_j phi_{y - a x_j}(z - b x_j)``."""
    y = _check_point(y, oracle.dim)
    z = _check_point(z, oracle.dim)
    if extended_norm(oracle, y, a, tail, policy, after=after, pool=pool) <= 1e-14:
        raise ZeroVectorError("extended norm of (y, a) vanishes")

    def term(j):
        xj = tail(j)
        return apply_functional(oracle.support(y - a * xj), z - b * xj)

    return tail_limit(term, policy, after=after, pool=pool, what="extended_support_apply")


def extended_modulus_of_smoothness(
    oracle: NormOracle,
    tail,
    policy: TailPolicy,
    tau: float,
    subspace_dim: int,
    samples: int = 20_000,
    seed: int = 0,
    batch: int = 4096,
    return_pairs: bool = False,
):
    """Sampled modulus of smoothness of ``|||.|||`` on ``Y + R``.

    ``Y`` is spanned by the first ``subspace_dim`` coordinates; pairs
    ``(y, a), (z, b)`` are Gaussian, normalized in the extended norm.
    The tail window must be flat for every sampled vector.

    With ``return_pairs`` the sampled pairs are also returned mapped into
    the base space as ``y - a x_J`` and ``z - b x_J`` (``J`` the first tail
    index), so the base estimate can be taken over the same draws.
    """
    if not 1 <= subspace_dim <= oracle.dim:
        raise ValueError("subspace_dim out of range")
    T = np.array([tail(j) for j in policy.indices()])

    def ext(Y, A):
        diffs = Y[:, None, :] - A[:, None, None] * T[None, :, :]
        vals = oracle.norm(diffs)
        spread = vals.max(axis=1) - vals.min(axis=1)
        if np.any(spread > policy.tol):
            raise NonStabilizing(f"extended norm tail spread {spread.max():.3e} exceeds tol", spread=float(spread.max()))
        return vals.mean(axis=1)

    rng = np.random.default_rng(seed)
    best = -np.inf
    done = 0
    mapped_x, mapped_y = [], []
    while done < samples:
        n = min(batch, samples - done)
        Y = np.zeros((n, oracle.dim))
        Z = np.zeros((n, oracle.dim))
        Y[:, :subspace_dim] = rng.standard_normal((n, subspace_dim))
        Z[:, :subspace_dim] = rng.standard_normal((n, subspace_dim))
        A = rng.standard_normal(n)
        B = rng.standard_normal(n)
        ny, nz = ext(Y, A), ext(Z, B)
        Y, A = Y / ny[:, None], A / ny
        Z, B = Z / nz[:, None], B / nz
        vals = 0.5 * ext(Y + tau * Z, A + tau * B) + 0.5 * ext(Y - tau * Z, A - tau * B) - 1.0
        best = max(best, float(vals.max()))
        if return_pairs:
            mapped_x.append(Y - A[:, None] * T[0])
            mapped_y.append(Z - B[:, None] * T[0])
        done += n
    if return_pairs:
        return best, (np.vstack(mapped_x), np.vstack(mapped_y))
    return best
