import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import bisect

from equilex.errors import GuardFailed, LeftDomain, NoConvergence
from equilex.newton import DECAY_MAX, DifferentiableMap, fd_jacobian, guard_check, precondition, solve

U = np.array([1.0, 0.0])


def identity(d=2):
    return DifferentiableMap(d, lambda x: np.array(x, dtype=float), lambda x: np.eye(d))


def affine(A):
    A = np.asarray(A, dtype=float)
    return DifferentiableMap(A.shape[0], lambda x: A @ x, lambda x: A)


def quad_bump(c):
    """``x + c ||x||^2 u``: Dg(0) = Id, curvature grows with ``c``."""
    return DifferentiableMap(2, lambda x: x + c * (x @ x) * U, lambda x: np.eye(2) + 2 * c * np.outer(U, x))


def taylor_ratio_dense(c, radius, n=400, seed=11):
    """Worst Taylor ratio over a dense independent sample, written out directly."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        x, z = (radius * rng.uniform(-1, 1, 2) / np.sqrt(2) for _ in range(2))
        rem = c * (z @ z - x @ x - 2 * x @ (z - x))
        worst = max(worst, abs(rem) / np.linalg.norm(z - x))
    return worst


class TestGuardCheck:
    def test_identity(self):
        cert = guard_check(identity(), 5.0)
        assert cert.passed and cert.max_id_deviation == 0 and cert.max_taylor_ratio == 0

    def test_quadratic_small_and_large_radius(self):
        g = quad_bump(0.4)
        small, large = guard_check(g, 0.1), guard_check(g, 10.0)
        assert small.passed and not large.passed
        assert small.max_taylor_ratio <= taylor_ratio_dense(0.4, 0.1) * 1.5 + 1e-12
        assert taylor_ratio_dense(0.4, 10.0) > 0.125 and large.max_taylor_ratio > 0.125

    def test_wrong_jacobian(self):
        g = DifferentiableMap(2, lambda x: x, lambda x: np.eye(2) + 0.2)
        cert = guard_check(g, 0.1)
        assert not cert.precondition_ok and not cert.passed
        assert cert.max_fd_error == pytest.approx(0.2, abs=1e-8)

    def test_nonzero_at_origin(self):
        g = DifferentiableMap(2, lambda x: x + 1.0, lambda x: np.eye(2))
        assert not guard_check(g, 0.1).passed

    def test_radius_beyond_domain(self):
        g = DifferentiableMap(2, lambda x: x, lambda x: np.eye(2), domain_radius=1.0)
        with pytest.raises(ValueError):
            guard_check(g, 2.0)

    def test_summary(self):
        s = guard_check(identity(), 1.0, samples=10).summary()
        assert s["passed"] is True and s["sample_count"] == 10


class TestSolve:
    def test_identity_one_iteration(self):
        y = np.array([0.3, -0.2])
        r = solve(identity(), y, radius=1.0)
        assert r.iterations == 1 and np.array_equal(r.x, y)

    def test_affine_one_iteration(self):
        A = np.diag([2.0, 0.5])
        y = np.array([0.1, 0.2])
        r = solve(affine(A), y)
        assert r.iterations == 1
        np.testing.assert_allclose(r.x, np.linalg.solve(A, y), atol=1e-15)
        assert r.residual <= 1e-12

    def test_against_bisection_oracle(self):
        c = 0.05
        f = DifferentiableMap(2, lambda x: x + c * x**2, lambda x: np.eye(2) + np.diag(2 * c * x))
        target = np.array([0.1, 0.1])
        r = solve(f, target)
        ref = bisect(lambda t: t + c * t * t - 0.1, 0.0, 1.0, xtol=1e-15)
        np.testing.assert_allclose(r.x, [ref, ref], atol=1e-10)
        assert np.linalg.norm(f.eval(r.x) - target) <= 1e-11

    def test_halving_recovers(self):
        r = solve(quad_bump(0.2), np.array([0.02, 0.0]), radius=10.0)
        passed = [c["passed"] for c in r.certificates]
        assert passed[0] is False and passed[-1] is True
        assert r.radius == pytest.approx(10.0 / 2 ** (len(passed) - 1))
        assert r.residual <= 1e-11

    def test_guard_failed_when_no_radius(self):
        # strong curvature everywhere; the target pins the radius too large
        with pytest.raises(GuardFailed) as ei:
            solve(quad_bump(50.0), np.array([0.5, 0.0]), radius=10.0, max_halvings=2)
        assert len(ei.value.certificates) == 3

    def test_left_domain(self):
        f = DifferentiableMap(2, lambda x: x, lambda x: np.eye(2), domain_radius=0.1)
        with pytest.raises(LeftDomain):
            solve(f, np.array([1.0, 0.0]))

    def test_no_convergence(self):
        with pytest.raises((NoConvergence, GuardFailed)):
            solve(quad_bump(0.4), np.array([0.05, 0.02]), max_iter=1, res_tol=1e-30)

    def test_zero_target(self):
        r = solve(quad_bump(0.4), np.zeros(2))
        assert r.iterations == 0 and np.all(r.x == 0)

    def test_requires_zero_at_origin(self):
        with pytest.raises(GuardFailed):
            solve(DifferentiableMap(2, lambda x: x + 1, lambda x: np.eye(2)), np.ones(2) * 0.1)

    def test_singular_derivative(self):
        with pytest.raises(GuardFailed):
            solve(affine([[1.0, 1.0], [1.0, 1.0]]), np.array([0.1, 0.1]))

    def test_target_shape(self):
        with pytest.raises(ValueError):
            solve(identity(), np.zeros(3))

    @given(
        st.integers(0, 2**32 - 1),
        st.floats(0.0, 0.5),
        st.floats(1e-4, 0.05),
    )
    def test_trace_properties(self, seed, curvature, size):
        rng = np.random.default_rng(seed)
        A = np.eye(3) + 0.3 * rng.uniform(-1, 1, (3, 3))
        w = rng.standard_normal(3)

        def ev(x):
            return A @ x + curvature * np.sin(x) * (w @ x)

        def jac(x):
            return A + curvature * (np.diag(np.cos(x)) * (w @ x) + np.outer(np.sin(x), w))

        f = DifferentiableMap(3, ev, jac)
        target = size * rng.standard_normal(3)
        try:
            r = solve(f, target, guard_samples=60)
        except (GuardFailed, LeftDomain):
            # no certified ball large enough to contain the first iterate
            return
        assert np.linalg.norm(f.eval(r.x) - target) <= 1e-11
        for prev, cur in zip(r.trace, r.trace[1:]):
            if "decay" in cur:
                assert cur["decay"] <= DECAY_MAX
            assert cur["step"] <= 1.5 * prev["precond_residual"] + 1e-15

    @given(st.integers(0, 2**32 - 1))
    def test_affine_property(self, seed):
        rng = np.random.default_rng(seed)
        A = np.eye(4) + 0.4 * rng.uniform(-1, 1, (4, 4))
        if np.linalg.cond(A) > 1e6:
            return
        y = 0.1 * rng.standard_normal(4)
        r = solve(affine(A), y, res_tol=1e-12)
        assert r.iterations == 1 and r.residual <= 1e-12


def test_precondition_gives_identity_derivative():
    A = np.array([[2.0, 1.0], [0.0, 3.0]])
    g, P = precondition(affine(A))
    np.testing.assert_allclose(g.jacobian(np.zeros(2)), np.eye(2), atol=1e-15)


def test_fd_jacobian():
    f = lambda x: np.array([x[0] ** 2, x[0] * x[1]])
    np.testing.assert_allclose(fd_jacobian(f, np.array([1.0, 2.0])), [[2, 0], [2, 1]], atol=1e-9)
