"""Inductive construction of an equilateral set.

Starting from ``x_1 = z_1`` and the index pool ``M_1 = (2, 3, ...)``, each
step picks a pool index ``K`` and solves

    f^K(a) = (lambda, ..., lambda),
    g^K(a) = (1 + a_{N+1}) z_K + sum_{i<=N} a_i x_i,
    f^K(a) = (||g^K(a) - x_1||, ..., ||g^K(a) - x_N||, lim_m ||g^K(a) - z_m||),

for a small ``a``; then ``x_{N+1} = g^K(a)`` and the pool is cut to
``{L > K}``.  Before solving, ``Df^K(0)`` is gated: its transpose must lie in
the class ``A_{(N+1)x(N+1)}(C, eps)`` of :mod:`equilex.gate` (``gate="class"``),
or, with ``gate="measured"``, it must satisfy the entry and diagonal
bounds and have a measured inverse norm below ``R_{N+1}``.
"""

from dataclasses import dataclass, field
import itertools
import logging

import numpy as np

from . import newton
from .errors import EquilexError, ExhaustedPool, InvariantViolation, NonStabilizing, SingularMatrix
from .gate import EpsSchedule, eps_schedule, in_class, inverse_norm_check
from .norms import apply_functional, extended_support_apply
from .stabilizer import StabilizedSequence
from .tails import TailPolicy, tail_limit

log = logging.getLogger(__name__)

GATES = ("class", "measured")


@dataclass
class BuildSettings:
    n_points: int
    prop_tol: float = 1e-7
    final_tol: float = 1e-8
    delta_cap: float = 0.1
    k_retries: int = 8
    gate: str = "class"
    max_iter: int = 60
    res_tol: float = 1e-11
    guard_samples: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.gate not in GATES:
            raise ValueError(f"gate must be one of {GATES}, got {self.gate!r}")
        if self.n_points < 1:
            raise ValueError("n_points must be positive")


@dataclass
class ConstructionState:
    """Everything the induction carries from one step to the next."""

    oracle: object
    stab: StabilizedSequence
    policy: TailPolicy
    sched: EpsSchedule
    settings: BuildSettings
    points: list = field(default_factory=list)
    pool: list = field(default_factory=list)
    logs: list = field(default_factory=list)

    @property
    def lam(self) -> float:
        return self.stab.lam

    @property
    def C(self) -> float:
        return self.stab.C

    @property
    def N(self) -> int:
        return len(self.points)

    def z(self, i: int) -> np.ndarray:
        return self.stab.source(i)

    def tail(self, after: int = 0) -> list[int]:
        return self.policy.indices(after=after, pool=self.pool)

    def copy(self, **changes):
        fields = dict(
            oracle=self.oracle,
            stab=self.stab,
            policy=self.policy,
            sched=self.sched,
            settings=self.settings,
            points=list(self.points),
            pool=list(self.pool),
            logs=list(self.logs),
        )
        fields.update(changes)
        return ConstructionState(**fields)


@dataclass
class EquilateralSet:
    points: list
    lam: float
    defect: float
    provenance: dict
    state: ConstructionState = None


def initial_state(oracle, stab: StabilizedSequence, policy: TailPolicy, settings: BuildSettings, sched=None) -> ConstructionState:
    """Base case: ``x_1 = z_1`` and pool ``(2, 3, ..., max_index)``."""
    if sched is None:
        sched = eps_schedule(stab.C, max(settings.n_points, 1))
    return ConstructionState(
        oracle,
        stab,
        policy,
        sched,
        settings,
        points=[np.array(stab.source(1))],
        pool=list(range(2, stab.source.max_index + 1)),
    )


def _g(state, K, a):
    a = np.asarray(a, dtype=float)
    out = (1.0 + a[-1]) * state.z(K)
    for ai, xi in zip(a[:-1], state.points):
        out = out + ai * xi
    return out


def residual_map(state: ConstructionState, K: int, radius: float = np.inf) -> newton.DifferentiableMap:
    """``a -> f^K(a) - f^K(0)`` on ``R^{N+1}`` with its Jacobian.

    Row ``j <= N`` of the Jacobian is ``phi_{g - x_j}`` applied to
    ``(x_1, ..., x_N, z_K)``; the last row is the tail limit of
    ``phi_{g - z_m}`` applied to the same vectors.
    """
    oracle, N = state.oracle, state.N
    cols = list(state.points) + [state.z(K)]
    tail_idx = state.tail(after=K)
    tails = [state.z(m) for m in tail_idx]
    tol = state.policy.tol

    def raw(a):
        g = _g(state, K, a)
        vals = [oracle.norm(g - xj) for xj in state.points]
        vals.append(tail_limit(lambda m: oracle.norm(g - state.z(m)), state.policy, after=K, pool=state.pool, what="f_{N+1}"))
        return np.array(vals)

    f0 = raw(np.zeros(N + 1))

    def jac(a):
        g = _g(state, K, a)
        J = np.empty((N + 1, N + 1))
        for j, xj in enumerate(state.points):
            phi = oracle.support(g - xj)
            J[j] = [apply_functional(phi, c) for c in cols]
        rows = np.array([[apply_functional(oracle.support(g - zm), c) for c in cols] for zm in tails])
        spread = rows.max(axis=0) - rows.min(axis=0)
        if np.any(spread > tol):
            raise NonStabilizing(f"Jacobian tail row spread {spread.max():.3e} exceeds tol", spread=float(spread.max()))
        J[N] = np.where(spread == 0.0, rows[0], rows.mean(axis=0))
        return J

    m = newton.DifferentiableMap(N + 1, lambda a: raw(a) - f0, jac, radius)
    m.f0 = f0
    m.K = K
    return m


def jacobian_at_zero(state: ConstructionState, K: int) -> np.ndarray:
    """``Df^K(0)`` assembled entry by entry from the duality-map formulas.

    ``(j, n)``: ``phi_{z_K - x_j}(x_n)``; ``(j, N+1)``: ``phi_{z_K - x_j}(z_K)``;
    ``(N+1, n)``: ``lim_m phi_{z_K - z_m}(x_n)``; ``(N+1, N+1)``:
    ``lim_m phi_{z_K - z_m}(z_K)``.  The last row goes through the extended
    support functional of ``(z_K, 1)``.
    """
    oracle, N = state.oracle, state.N
    zK = state.z(K)
    cols = list(state.points) + [zK]
    J = np.empty((N + 1, N + 1))
    for j, xj in enumerate(state.points):
        phi = oracle.support(zK - xj)
        J[j] = [apply_functional(phi, c) for c in cols]
    for n, c in enumerate(cols):
        J[N, n] = extended_support_apply(oracle, zK, 1.0, c, 0.0, state.stab.source, state.policy, after=K, pool=state.pool)
    return J


def gate_check(state: ConstructionState, J: np.ndarray) -> tuple[bool, str, float]:
    """Admit or reject a Jacobian; returns ``(ok, reason, measured inverse norm)``."""
    N1 = J.shape[0]
    C, sched = state.C, state.sched
    if state.settings.gate == "class":
        if not in_class(J.T, C, sched):
            return False, "not in class A(C, eps)", np.nan
        if N1 >= 2:
            eps = sched.eps_at(N1)
            if not np.all(np.abs(J[-1, :-1]) < eps):
                return False, f"tail row exceeds eps_{N1}", np.nan
    else:
        if np.any(np.abs(J) > 2.0):
            return False, "entry above 2", np.nan
        if np.any(np.abs(np.diag(J)) < C):
            return False, "diagonal below C", np.nan
    try:
        ok, measured = inverse_norm_check(J, sched.R_at(N1))
    except SingularMatrix as exc:
        return False, str(exc), np.inf
    if not ok:
        return False, f"||J^-1|| = {measured:.3e} > R_{N1}", measured
    return True, "ok", measured


def solver_radius(state: ConstructionState) -> float:
    cap = state.settings.delta_cap
    if state.settings.gate == "class" and state.N + 1 >= 2:
        return min(state.sched.eps_at(state.N + 1) / 4.0, cap)
    return cap


def extend_one(state: ConstructionState) -> ConstructionState:
    """One induction step; returns a new state with ``N + 1`` points.

    Raises
    ------
    ExhaustedPool
        No candidate ``K`` passed the gate and the solver.
    InvariantViolation
        The accepted point breaks one of the induction properties.
    """
    s = state.settings
    N = state.N
    if N + 1 > state.sched.N_max:
        raise ValueError(f"schedule horizon N_max={state.sched.N_max} reached")
    attempts = []
    failures = 0
    candidates = [K for K in state.pool if K < state.policy.start]
    for K in candidates:
        try:
            J = jacobian_at_zero(state, K)
        except EquilexError as exc:
            attempts.append({"K": K, "stage": "jacobian", "reason": f"{type(exc).__name__}: {exc}"})
            continue
        ok, reason, inv_norm = gate_check(state, J)
        if not ok:
            attempts.append({"K": K, "stage": "gate", "reason": reason})
            continue
        delta = solver_radius(state)
        fmap = residual_map(state, K, radius=delta)
        target = state.lam - fmap.f0
        try:
            res = newton.solve(
                fmap,
                target,
                max_iter=s.max_iter,
                res_tol=s.res_tol,
                guard_samples=s.guard_samples,
                seed=s.seed + 7919 * N + K,
            )
        except EquilexError as exc:
            failures += 1
            attempts.append({"K": K, "stage": "newton", "reason": f"{type(exc).__name__}: {exc}"})
            if failures > s.k_retries:
                break
            continue
        x_new = _g(state, K, res.x)
        new = state.copy(points=state.points + [x_new], pool=[L for L in state.pool if L > K])
        report = verify_properties(new)
        step = {
            "step": N + 1,
            "K": K,
            "a": res.x.tolist(),
            "a_norm": float(np.linalg.norm(res.x)),
            "inverse_norm": inv_norm,
            "radius": res.radius,
            "attempts": attempts,
            "newton": {
                "iterations": res.iterations,
                "residuals": [t["residual"] for t in res.trace],
                "precond_residuals": [t["precond_residual"] for t in res.trace],
                "decay": res.decay_factors,
                "steps": [t["step"] for t in res.trace if "step" in t],
                "certificates": res.certificates,
            },
            "properties": report,
        }
        new.logs = state.logs + [step]
        for name, r in report.items():
            if r["enforced"] and not r["ok"]:
                err = InvariantViolation(
                    f"property {name} violated after step {N + 1}: measured {r['measured']:.3e}, bound {r['bound']:.3e}",
                    prop=name,
                    measured=r["measured"],
                )
                err.step = step
                raise err
        log.debug("step %d: K=%d, |a|=%.3e, %d Newton iterations", N + 1, K, step["a_norm"], res.iterations)
        return new
    raise ExhaustedPool(f"no admissible K for step {N + 1} ({len(attempts)} candidates tried)", attempts)


def _prop(ok, measured, bound, slack, enforced=True):
    return {"ok": bool(ok), "measured": float(measured), "bound": float(bound), "slack": float(slack), "enforced": enforced}


def verify_properties(state: ConstructionState) -> dict:
    """Recompute the six induction properties from scratch.

    Returns a mapping ``"1".."6"`` to ``{ok, measured, bound, slack, enforced}``.
    Vacuous properties report ``measured = 0``.  Property 5 is enforced
    only under the class gate; the measured gate replaces it by a direct
    inverse-norm certificate.
    """
    oracle, pts, lam, tol = state.oracle, state.points, state.lam, state.settings.prop_tol
    pol, pool = state.policy, state.pool
    N = len(pts)
    out = {}

    dev = max((abs(oracle.norm(pts[i] - pts[j]) - lam) for i, j in itertools.combinations(range(N), 2)), default=0.0)
    out["1"] = _prop(dev <= tol, dev, tol, tol - dev)

    dev2 = 0.0
    for x in pts:
        vals = [oracle.norm(x - state.z(m)) for m in pol.indices(pool=pool)]
        spread = max(vals) - min(vals)
        dev2 = max(dev2, abs(float(np.mean(vals)) - lam), spread)
    out["2"] = _prop(dev2 <= tol, dev2, tol, tol - dev2)

    big = max(oracle.norm(x) for x in pts)
    out["3"] = _prop(big <= 2.0, big, 2.0, 2.0 - big)

    outer, inner = pol.nested(pool=pool)
    dev4 = 0.0
    for x in pts:
        vals = [[apply_functional(oracle.support(state.z(l) - state.z(k)), x) for k in inner] for l in outer]
        dev4 = max(dev4, float(np.max(np.abs(vals))))
    out["4"] = _prop(dev4 <= tol, dev4, tol, tol - dev4)

    Ls = sorted(set(pool[: pol.window]) | set(pol.indices(pool=pool)))
    slack5, worst5 = np.inf, 0.0
    slack6, worst6 = np.inf, np.inf
    for L in Ls:
        zL = state.z(L)
        for k in range(N):
            phi = oracle.support(zL - pts[k])
            v6 = abs(apply_functional(phi, pts[k]))
            worst6 = min(worst6, v6)
            slack6 = min(slack6, v6 - state.C)
            if k >= 1:
                eps_k = state.sched.eps_at(k + 1)
                for i in range(k):
                    v5 = abs(apply_functional(phi, pts[i]))
                    worst5 = max(worst5, v5)
                    slack5 = min(slack5, eps_k - v5)
    if N < 2:
        out["5"] = _prop(True, 0.0, np.nan, np.inf, state.settings.gate == "class")
    else:
        out["5"] = _prop(slack5 > 0, worst5, worst5 + slack5, slack5, state.settings.gate == "class")
    out["6"] = _prop(slack6 > 0, worst6, state.C, slack6)
    return out


def pairwise_defect(oracle, points, lam) -> tuple[float, np.ndarray]:
    n = len(points)
    D = np.zeros((n, n))
    for i, j in itertools.combinations(range(n), 2):
        D[i, j] = D[j, i] = oracle.norm(points[i] - points[j])
    off = D[~np.eye(n, dtype=bool)]
    return (float(np.max(np.abs(off - lam))) if n > 1 else 0.0), D


def construct(oracle, stab: StabilizedSequence, policy: TailPolicy, settings: BuildSettings, sched=None) -> EquilateralSet:
    """Run the induction up to ``settings.n_points`` points.

    Errors from a step carry ``err.step_index``.
    """
    state = initial_state(oracle, stab, policy, settings, sched)
    base = verify_properties(state)
    for name, r in base.items():
        if r["enforced"] and not r["ok"]:
            raise InvariantViolation(f"base case breaks property {name}", prop=name, measured=r["measured"])
    state.logs = [{"step": 1, "K": 1, "properties": base}]
    while state.N < settings.n_points:
        try:
            state = extend_one(state)
        except EquilexError as exc:
            exc.step_index = state.N + 1
            exc.state = state
            raise
    defect, _ = pairwise_defect(oracle, state.points, state.lam)
    if defect > settings.final_tol:
        raise InvariantViolation(f"final defect {defect:.3e} exceeds {settings.final_tol:.1e}", prop="defect", measured=defect)
    return EquilateralSet(list(state.points), state.lam, defect, {"logs": state.logs}, state)


def build(config, seed: int | None = None) -> EquilateralSet:
    """Stabilize the configured source and run the induction.

    Errors carry ``step_index`` (the point being added) and ``state``.
    """
    from .config import make_oracle, make_policy, make_settings, make_source
    from .stabilizer import stabilize

    oracle = make_oracle(config)
    source = make_source(config, oracle)
    policy = make_policy(config)
    settings = make_settings(config, seed)
    try:
        stab = stabilize(source, oracle, policy)
    except EquilexError as exc:
        exc.step_index = 0
        exc.state = None
        raise
    result = construct(oracle, stab, policy, settings)
    result.provenance["config"] = config.as_dict()
    result.provenance["seed"] = settings.seed
    return result
