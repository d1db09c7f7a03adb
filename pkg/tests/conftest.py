import warnings

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from eigenbundle import MarketSpec, decompose, normalize, solve_equilibrium
from eigenbundle.families import g_triangle, hub_triangle
from eigenbundle.market import InteriorityWarning

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ROOT = __import__("pathlib").Path(__file__).resolve().parents[1]
DATA = ROOT / "data"


def random_normalized_d(rng, n, eps=0.05):
    """Random normalized strictly negative definite matrix (diagonal -1)."""
    a = rng.normal(size=(n, n))
    d = -(a @ a.T + eps * n * np.eye(n))
    r = 1.0 / np.sqrt(-np.diag(d))
    d = r[:, None] * d * r[None, :]
    np.fill_diagonal(d, -1.0)
    return d


def random_interior_market(rng, n, max_tries=200):
    """Random market (unnormalized D) whose untaxed equilibrium is interior."""
    for _ in range(max_tries):
        a = rng.normal(size=(n, n))
        d = -(a @ a.T + 0.3 * n * np.eye(n))
        spec = MarketSpec(beta=rng.uniform(5.0, 15.0, n), cost=rng.uniform(0.0, 2.0, n), d_matrix=d)
        m = normalize(spec)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InteriorityWarning)
            eq = solve_equilibrium(m)
        if np.all(eq.quantity > 0.2):
            return spec
    raise RuntimeError("no interior market found")


@st.composite
def normalized_matrices(draw, min_n=1, max_n=6):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_normalized_d(np.random.default_rng(seed), n)


@pytest.fixture
def triangle():
    m = normalize(hub_triangle())
    q0 = solve_equilibrium(m).quantity
    return m, decompose(m.d_norm, q0), q0


@pytest.fixture
def g_half():
    m = normalize(g_triangle(0.5))
    q0 = solve_equilibrium(m).quantity
    return m, decompose(m.d_norm, q0), q0


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
