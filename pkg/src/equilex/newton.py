"""Guarded Newton iteration for maps with ``f(0) = 0`` and invertible ``Df(0)``.

The map is preconditioned to ``g = Df(0)^{-1} o f`` so that ``Dg(0) = Id``.
On a ball of radius ``rho`` a sampled certificate checks

* ``||Dg(x) - Id||_2 <= 1/2`` and ``||Dg(x)^{-1} - Id||_2 <= 1/2``,
* ``||g(z) - g(x) - Dg(x)(z - x)||_2 <= ||z - x||_2 / 8``,

and only then is ``x_{m+1} = x_m + Dg(x_m)^{-1}(y - g(x_m))`` run from
``x_1 = y``.  Under these conditions the residual shrinks by at least a
factor 4 per step; the solver checks that on every step.
"""

from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np

from .errors import GuardFailed, LeftDomain, NoConvergence

ID_DEV_MAX = 0.5
TAYLOR_MAX = 0.125
DECAY_MAX = 0.25
FD_TOL = 1e-6
ZERO_TOL = 1e-12


@dataclass
class DifferentiableMap:
    """A map ``R^dim -> R^dim`` with its Jacobian, trusted on ``domain_radius``."""

    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    domain_radius: float = np.inf


@dataclass
class GuardCertificate:
    radius: float
    precondition_ok: bool
    max_id_deviation: float
    max_inverse_deviation: float
    max_taylor_ratio: float
    max_fd_error: float
    zero_value: float
    sample_count: int

    @property
    def passed(self) -> bool:
        return (
            self.precondition_ok
            and self.max_id_deviation <= ID_DEV_MAX
            and self.max_inverse_deviation <= ID_DEV_MAX
            and self.max_taylor_ratio <= TAYLOR_MAX
        )

    def summary(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual: float
    radius: float
    trace: list = field(default_factory=list)
    certificates: list = field(default_factory=list)

    @property
    def decay_factors(self) -> list[float]:
        r = [t["precond_residual"] for t in self.trace]
        return [b / a for a, b in zip(r, r[1:]) if a > 0]


def _ball_points(rng, n, dim, radius):
    d = rng.standard_normal((n, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / dim)
    return d * r[:, None]


def fd_jacobian(f, x, h=1e-5):
    """Central-difference Jacobian, one column per coordinate."""
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.column_stack(cols)


def guard_check(g: DifferentiableMap, radius: float, samples: int = 200, seed: int = 0, fd_samples: int = 3) -> GuardCertificate:
    """Sampled certificate of the Newton guards on the ball of ``radius``.

    ``g`` is expected to be already preconditioned.  The preconditions
    are ``g(0) = 0`` and agreement of ``jacobian`` with central differences
    (checked at the origin and ``fd_samples - 1`` sampled points).
    """
    if radius > g.domain_radius:
        raise ValueError(f"radius {radius} exceeds the domain radius {g.domain_radius}")
    rng = np.random.default_rng(seed)
    d = g.dim
    xs = _ball_points(rng, samples, d, radius)
    zs = _ball_points(rng, samples, d, radius)
    I = np.eye(d)

    zero_value = float(np.linalg.norm(g.eval(np.zeros(d))))
    fd_err = 0.0
    h = min(1e-5, radius / 4) if radius > 0 else 1e-5
    for x in [np.zeros(d)] + list(xs[: max(fd_samples - 1, 0)] * (1 - 2 * h / max(radius, h))):
        fd_err = max(fd_err, float(np.max(np.abs(fd_jacobian(g.eval, x, h) - g.jacobian(x)))))
    precondition_ok = zero_value <= ZERO_TOL and fd_err <= FD_TOL

    id_dev = inv_dev = taylor = 0.0
    for x, z in zip(xs, zs):
        J = np.asarray(g.jacobian(x))
        id_dev = max(id_dev, float(np.linalg.norm(J - I, 2)))
        try:
            inv_dev = max(inv_dev, float(np.linalg.norm(np.linalg.inv(J) - I, 2)))
        except np.linalg.LinAlgError:
            inv_dev = np.inf
        step = z - x
        sn = np.linalg.norm(step)
        if sn > 0:
            rem = np.asarray(g.eval(z)) - np.asarray(g.eval(x)) - J @ step
            taylor = max(taylor, float(np.linalg.norm(rem) / sn))
    return GuardCertificate(radius, precondition_ok, id_dev, inv_dev, taylor, fd_err, zero_value, samples)


def precondition(f: DifferentiableMap) -> tuple[DifferentiableMap, np.ndarray]:
    """``g = Df(0)^{-1} o f`` together with ``Df(0)^{-1}``."""
    J0 = np.asarray(f.jacobian(np.zeros(f.dim)), dtype=float)
    try:
        P = np.linalg.inv(J0)
    except np.linalg.LinAlgError as exc:
        raise GuardFailed("Df(0) is singular") from exc
    if not np.all(np.isfinite(P)):
        raise GuardFailed("Df(0) is singular")
    g = DifferentiableMap(
        f.dim,
        lambda x: P @ np.asarray(f.eval(x)),
        lambda x: P @ np.asarray(f.jacobian(x)),
        f.domain_radius,
    )
    return g, P


def _iterate(f, g, P, target, y, rho, max_iter, res_tol):
    trace = []
    x = y.copy()
    for m in range(1, max_iter + 1):
        if np.linalg.norm(x) > rho:
            raise LeftDomain(f"iterate {m} has norm {np.linalg.norm(x):.3e} > rho = {rho:.3e}", trace)
        fx = np.asarray(f.eval(x))
        res = float(np.linalg.norm(fx - target))
        pres = float(np.linalg.norm(P @ fx - y))
        rec = {"iter": m, "residual": res, "precond_residual": pres, "x_norm": float(np.linalg.norm(x))}
        if trace:
            prev = trace[-1]
            rec["step"] = float(np.linalg.norm(x - prev["_x"]))
            if prev["precond_residual"] > 0 and pres > 1e-14:
                rec["decay"] = pres / prev["precond_residual"]
        rec["_x"] = x.copy()
        trace.append(rec)
        if res <= res_tol:
            return x, m, res, trace
        if rec.get("decay", 0.0) > DECAY_MAX:
            raise GuardFailed(f"residual decay {rec['decay']:.3f} > 1/4 at iteration {m}")
        J = np.asarray(g.jacobian(x))
        x = x + np.linalg.solve(J, y - P @ fx)
    raise NoConvergence(f"residual {res:.3e} after {max_iter} iterations", trace)


def _clean(trace):
    return [{k: v for k, v in t.items() if k != "_x"} for t in trace]


def solve(
    f: DifferentiableMap,
    target,
    radius: float | None = None,
    max_iter: int = 60,
    res_tol: float = 1e-11,
    guard_samples: int = 200,
    seed: int = 0,
    max_halvings: int = 6,
) -> NewtonResult:
    """Solve ``f(a) = target`` near the origin.

    The working radius starts at ``radius`` (if given) or at
    ``min(domain_radius, 4 ||Df(0)^{-1} target||)``, and is halved whenever
    the guard certificate fails, at most ``max_halvings`` times.

    Raises
    ------
    GuardFailed
        No certified radius was found.
    NoConvergence
        ``max_iter`` reached.
    LeftDomain
        An iterate left the working ball.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (f.dim,):
        raise ValueError(f"target must have shape ({f.dim},)")
    zero = np.zeros(f.dim)
    f0 = np.asarray(f.eval(zero))
    if np.linalg.norm(f0) > ZERO_TOL:
        raise GuardFailed(f"f(0) = {np.linalg.norm(f0):.3e} is not zero")
    res0 = float(np.linalg.norm(target))
    if res0 <= res_tol:
        return NewtonResult(zero, 0, res0, 0.0, [])

    g, P = precondition(f)
    y = P @ target
    rho = min(f.domain_radius, 4.0 * np.linalg.norm(y)) if radius is None else min(radius, f.domain_radius)
    certs = []
    for attempt in range(max_halvings + 1):
        cert = guard_check(g, rho, samples=guard_samples, seed=seed + attempt)
        certs.append(cert.summary())
        if cert.passed:
            try:
                x, m, res, trace = _iterate(f, g, P, target, y, rho, max_iter, res_tol)
            except GuardFailed:
                pass
            else:
                return NewtonResult(x, m, res, rho, _clean(trace), certs)
        if attempt < max_halvings:
            rho /= 2.0
    err = GuardFailed(f"no certified radius after {max_halvings} halvings (last rho = {rho:.3e})", certs[-1])
    err.certificates = certs
    raise err
