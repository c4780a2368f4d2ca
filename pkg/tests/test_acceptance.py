"""Acceptance gate: one test per criterion, each recording a pass/fail line."""

import json
import time

import numpy as np

from equilex import cli
from equilex.builder import build, jacobian_at_zero, residual_map
from equilex.config import parse_config
from equilex.errors import ConfigError, ExhaustedPool, GuardFailed, LambdaTooSmall
from equilex.gate import eps_schedule, verify_schedule
from equilex.newton import DifferentiableMap, fd_jacobian, guard_check, solve
from equilex.norms import LpNorm, extended_modulus_of_smoothness, modulus_of_smoothness
from equilex.report import load_report
from equilex.sources import composed, perturbed_basis, unit_basis
from equilex.stabilizer import rescale_to_common_lambda, stabilize
from equilex.tails import TailPolicy

from conftest import ACCEPTANCE, make_states

PERTURBED_L2 = "{space: lp, p: 2, dim: 64, n_points: 8, sequence: perturbed-basis, builder.gate: measured}"


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_unit_basis_recovery():
    rows = []
    for p in (1.5, 2.0, 3.0):
        t0 = time.perf_counter()
        res = build(parse_config(f"{{space: lp, p: {p}, dim: 64, n_points: 8}}"))
        dt = time.perf_counter() - t0
        err = abs(res.lam - 2 ** (1 / p))
        rows.append((p, err, res.defect, dt, len(res.points)))
    ok = all(e <= 1e-9 and d <= 1e-9 and t < 5 and n == 8 for _, e, d, t, n in rows)
    detail = "; ".join(f"p={p}: |lam err|={e:.1e} defect={d:.1e} {t:.2f}s" for p, e, d, t, _ in rows)
    record(1, ok, detail)


def test_criterion_02_perturbed_l2():
    t0 = time.perf_counter()
    res = build(parse_config(PERTURBED_L2))
    dt = time.perf_counter() - t0
    decays = [d for log in res.state.logs[1:] for d in log["newton"]["decay"]]
    guards = all(log["newton"]["certificates"][-1]["passed"] for log in res.state.logs[1:])
    # the fixed-schedule gate is reported alongside; see the ledger for why it rejects this family
    try:
        build(parse_config(PERTURBED_L2.replace("measured", "class")))
        class_gate = "class gate ok"
    except ExhaustedPool as exc:
        class_gate = f"class gate: ExhaustedPool at step {exc.step_index}"
    ok = abs(res.lam - np.sqrt(2)) <= 1e-6 and res.defect <= 1e-8 and guards and max(decays, default=0) <= 0.25 and dt < 30
    detail = (
        f"|lam-sqrt2|={abs(res.lam - np.sqrt(2)):.1e} defect={res.defect:.1e} "
        f"max decay={max(decays, default=0):.2e} guards={'pass' if guards else 'FAIL'} {dt:.1f}s ({class_gate})"
    )
    record(2, ok, detail)


def test_criterion_03_rescaling_scalars():
    r = rescale_to_common_lambda(perturbed_basis(64, 0.5), LpNorm(2, 64), TailPolicy(34, 5, 1e-8))
    errs = [abs(r.scalar(k) - (1 + 4.0**-k) ** -0.5) for k in range(1, 13)]
    record(3, max(errs) <= 1e-8, f"max |a_k - (1+4^-k)^-1/2| = {max(errs):.1e} over k=1..12")


def test_criterion_04_jacobian_vs_finite_differences():
    families = [("unit", 1.5, "class"), ("unit", 2.0, "class"), ("unit", 3.0, "class"), ("perturbed", 2.0, "measured"), ("perturbed", 3.0, "measured")]
    checked, worst = 0, 0.0
    for fam, p, gate in families:
        for st in make_states(fam, p, 8, gate=gate)[:-1]:
            for K in [k for k in st.pool if k < st.policy.start][:3]:
                f = residual_map(st, K)
                J = jacobian_at_zero(st, K)
                fd = fd_jacobian(f.eval, np.zeros(st.N + 1), h=1e-5)
                worst = max(worst, float(np.max(np.abs(J - fd))))
                checked += 1
    record(4, checked >= 100 and worst <= 1e-6, f"{checked} (state, K) pairs, max |J - FD| = {worst:.1e}")


def test_criterion_05_duality_identities():
    worst_val, worst_dual = 0.0, 0.0
    for p in (1.5, 2.0, 3.0):
        o = LpNorm(p, 64)
        rng = np.random.default_rng(int(10 * p))
        for _ in range(1000):
            x = rng.standard_normal(64) * rng.uniform(0.01, 100)
            phi = o.support(x)
            worst_val = max(worst_val, abs(phi(x) - o.norm(x)))
            worst_dual = max(worst_dual, abs(o.dual_norm(phi.coeffs) - 1.0))
    ok = worst_val <= 1e-10 and worst_dual <= 1e-10
    record(5, ok, f"max |phi_x(x)-||x||| = {worst_val:.1e}, max |dual norm - 1| = {worst_dual:.1e}")


def test_criterion_06_matrix_gate():
    C = (np.sqrt(2) - 1) / 8
    rows = verify_schedule(C, 8, samples=1000, seed=0)
    failures = sum(r["failures"] for r in rows)
    margin = min(r["R_N"] / r["max_inverse_norm"] for r in rows)
    record(6, failures == 0 and len(rows) == 8, f"{failures} failures over 8x1000 members, min R_N/||A^-1|| = {margin:.2f}")


def test_criterion_07_modulus():
    o = LpNorm(2, 64)
    pol = TailPolicy(24, 5, 1e-8)
    parts, ok = [], True
    for tau in (0.1, 0.5, 1.0):
        exact = np.sqrt(1 + tau * tau) - 1
        ext, pairs = extended_modulus_of_smoothness(o, unit_basis(64), pol, tau, 8, samples=20_000, seed=1, return_pairs=True)
        pure = modulus_of_smoothness(o, tau, samples=100_000, seed=1)
        base = modulus_of_smoothness(o, tau, samples=100_000, seed=1, pairs=pairs)
        below = exact - base
        ok &= -1e-12 <= exact - pure <= 1e-3 and -1e-12 <= below <= 1e-3 and ext <= base + 1e-6
        parts.append(f"tau={tau}: exact-sampled={exact - pure:.1e} exact-base={below:.1e} ext-base={ext - base:.1e}")
    record(7, ok, "; ".join(parts))


def test_criterion_08_guard_semantics():
    u = np.array([1.0, 0.0])
    ident = DifferentiableMap(2, lambda x: np.array(x, dtype=float), lambda x: np.eye(2))
    A = np.array([[2.0, 0.3], [-0.1, 0.5]])
    affine = DifferentiableMap(2, lambda x: A @ x, lambda x: A)
    bump = DifferentiableMap(2, lambda x: x + 0.2 * (x @ x) * u, lambda x: np.eye(2) + 0.4 * np.outer(u, x))
    y = np.array([0.02, 0.0])
    it_id = solve(ident, np.array([0.3, -0.2]), radius=1.0).iterations
    it_aff = solve(affine, np.array([0.1, 0.2])).iterations
    cert10 = guard_check(bump, 10.0)
    try:
        solve(bump, y, radius=10.0, max_halvings=0)
        raised = False
    except GuardFailed:
        raised = True
    r = solve(bump, y, radius=10.0)
    ok = it_id == 1 and it_aff == 1 and not cert10.passed and raised and r.certificates[-1]["passed"] and r.radius < 10.0
    detail = (
        f"iterations identity={it_id} affine={it_aff}; radius 10 taylor ratio={cert10.max_taylor_ratio:.2f} "
        f"GuardFailed={raised}; solved at radius {r.radius:g} after {len(r.certificates) - 1} halvings"
    )
    record(8, ok, detail)


def _perturbation_detected(rep, p):
    """Bump each coordinate by 1e-3 and count the bumps ``verify`` would miss.

    In l_3 a bump on a coordinate outside the support of every point adds
    1e-9 to a cube sum and moves distances by about 2e-10, below any usable
    tolerance, so only supported coordinates are swept there.
    """
    tol = rep["config"]["builder.final_tol"]
    points = np.array(rep["points"])
    missed, tried = 0, 0
    support = np.any(points != 0, axis=0)
    for i in range(points.shape[0]):
        for c in range(points.shape[1]):
            if p > 2 and not support[c]:
                continue
            bad = dict(rep, points=points.copy())
            bad["points"][i, c] += 1e-3
            defect, _ = cli.recompute_defect(bad)
            tried += 1
            missed += defect <= tol
    return tried, missed


def test_criterion_09_determinism_and_verify(tmp_path):
    docs = [f"{{space: lp, p: {p}, dim: 64, n_points: 8}}" for p in (1.5, 2, 3)] + [PERTURBED_L2]
    identical, verify_ok, tried, missed, cli_bad = True, True, 0, 0, True
    for n, doc in enumerate(docs):
        cfg = tmp_path / f"c{n}.yaml"
        cfg.write_text(doc)
        outs = [tmp_path / f"r{n}{k}.json" for k in "ab"]
        for out in outs:
            assert cli.main(["build", str(cfg), "-o", str(out), "--seed", "3"]) == 0
        identical &= outs[0].read_bytes() == outs[1].read_bytes()
        verify_ok &= cli.main(["verify", str(outs[0])]) == 0
        rep = load_report(outs[0])
        assert rep["status"] == "ok"
        t, m = _perturbation_detected(rep, rep["space"]["p"])
        tried, missed = tried + t, missed + m
        rep["points"][3][3] += 1e-3
        bad = tmp_path / f"bad{n}.json"
        bad.write_text(json.dumps(rep))
        cli_bad &= cli.main(["verify", str(bad)]) == 2
    ok = identical and verify_ok and cli_bad and missed == 0
    record(9, ok, f"byte-identical={identical} verify ok=0:{verify_ok} perturbed=2:{cli_bad}; {tried} single-coordinate bumps, {missed} missed")


def test_criterion_10_boundary_rejection():
    checks = {}
    for p in ("1", ".inf"):
        try:
            parse_config(f"{{space: lp, p: {p}, dim: 64, n_points: 8}}")
            checks[f"p={p}"] = False
        except ConfigError:
            checks[f"p={p}"] = True
    const = composed(lambda i: np.eye(16)[0], 16, 16)
    try:
        stabilize(const, LpNorm(2, 16), TailPolicy(4, 3))
        checks["constant"] = False
    except LambdaTooSmall:
        checks["constant"] = True
    for C, N in ((1.0, 3), (1.5, 3), (0.2, 0)):
        try:
            eps_schedule(C, N)
            checks[f"C={C},N={N}"] = False
        except ValueError:
            checks[f"C={C},N={N}"] = True
    record(10, all(checks.values()), " ".join(f"{k}:{'rejected' if v else 'ACCEPTED'}" for k, v in checks.items()))
