import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from equilex.builder import BuildSettings, extend_one, initial_state
from equilex.norms import LpNorm
from equilex.sources import perturbed_basis, unit_basis
from equilex.stabilizer import stabilize
from equilex.tails import TailPolicy

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def make_states(family, p, n_points, gate="class", dim=64, start=None):
    """States of a construction after 1, 2, ..., n_points points."""
    if family == "unit":
        src = unit_basis(dim)
        start = start or 2 * n_points + 8
    else:
        src = perturbed_basis(dim, 0.5)
        start = start or 34
    oracle = LpNorm(p, dim)
    pol = TailPolicy(start, 5, 1e-8)
    stab = stabilize(src, oracle, pol)
    st = initial_state(oracle, stab, pol, BuildSettings(n_points, gate=gate))
    states = [st]
    while st.N < n_points:
        st = extend_one(st)
        states.append(st)
    return states


@pytest.fixture(scope="session")
def perturbed_states():
    return make_states("perturbed", 2.0, 8, gate="measured")


@pytest.fixture(scope="session")
def unit_states():
    return make_states("unit", 3.0, 6)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
