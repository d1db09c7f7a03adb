import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from eigenbundle import (
    decompose,
    eigenvalue_variance,
    normalize,
    optimal_small_taxes,
    pigouvian_leverage,
    restricted_shadow_price,
    scaled_revenue_targets,
    shadow_price_small,
    solve_equilibrium,
)
from eigenbundle.errors import InvalidRiskAversion
from eigenbundle.market import InteriorityWarning
from eigenbundle.families import G_MAX, calibrated_g_triangle, g_triangle, independent

from conftest import normalized_matrices

G_GRID = [round(0.1 * k, 10) for k in range(8)]


def _dec(spec):
    m = normalize(spec)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InteriorityWarning)
        q0 = solve_equilibrium(m).quantity
    return decompose(m.d_norm, q0)


def leading_order_oracle(q, lam):
    """Numerically maximize -sum(lam y) - 1/2 sum(lam^2 y^2) s.t. sum(y) = 0, y = a q tau."""
    res = optimize.minimize(
        lambda y: np.sum(lam * y) + 0.5 * np.sum(lam**2 * y**2),
        np.zeros(len(q)),
        constraints=[{"type": "eq", "fun": np.sum}],
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 500},
    )
    assert res.success
    return res.x


@pytest.mark.parametrize("g", G_GRID)
def test_g_triangle_shadow_price(g):
    if g > G_MAX:
        pytest.skip("outside the valid range")
    dec = _dec(g_triangle(g))
    assert shadow_price_small(dec) == pytest.approx(3 / (6 + 2 * g**2), abs=1e-12)
    var = 4 * g**2 / 3
    assert pigouvian_leverage(dec) == pytest.approx(3 * var / (4 + var), abs=1e-12)


def test_boundary_triangle_shadow_price():
    dec = _dec(g_triangle(G_MAX))
    assert shadow_price_small(dec) == pytest.approx(3 / 7, abs=1e-12)


def test_independent_market_has_no_scope():
    dec = _dec(independent(3, beta=[10.0, 10.0, 15.0], cost=[0.0, 0.0, 0.0]))
    assert shadow_price_small(dec) == 0.5
    plan = optimal_small_taxes(dec, 1e3)
    assert np.all(plan.tau_eigen == 0.0)
    assert pigouvian_leverage(dec) == 0.0


@given(normalized_matrices(min_n=2))
def test_shadow_price_forms_agree(d):
    dec = decompose(d, np.ones(d.shape[0]))
    full = np.ones(dec.n, dtype=bool)
    assert restricted_shadow_price(dec, full) == pytest.approx(shadow_price_small(dec), rel=1e-10)


@given(normalized_matrices(min_n=2), st.integers(0, 2**32 - 1))
def test_closed_form_matches_numerical_oracle(d, seed):
    q = np.random.default_rng(seed).uniform(0.5, 5.0, d.shape[0])
    dec = decompose(d, dec_q(d, q))
    a = 1e3
    plan = optimal_small_taxes(dec, a)
    y = leading_order_oracle(dec.q_eigen, np.asarray(dec.lam))
    assert np.allclose(a * dec.q_eigen * plan.tau_eigen, y, atol=1e-6 * max(1.0, np.abs(y).max()))


def dec_q(d, q_eigen):
    """Product-space quantities with the given eigen-quantities."""
    _, v = np.linalg.eigh(d)
    return v @ q_eigen


@given(normalized_matrices(min_n=2), st.integers(0, 2**32 - 1), st.floats(1.0, 1e6))
def test_budget_pattern_and_homogeneity(d, seed, a):
    n = d.shape[0]
    q0 = np.random.default_rng(seed).uniform(0.5, 5.0, n)
    dec = decompose(d, q0)
    plan = optimal_small_taxes(dec, a)
    q = np.asarray(dec.q_eigen)
    active = q > 1e-9 * q.max()
    # budget balance at first order
    revenue = np.abs(q * plan.tau_eigen)
    assert abs(np.sum(q * plan.tau_eigen)) <= 1e-10 * max(revenue.sum(), 1e-300)
    # tax bundles with pass-through below z, subsidize above
    lam = np.asarray(dec.lam)
    assert np.all(plan.tau_eigen[active & (lam < plan.z - 1e-12)] > 0)
    assert np.all(plan.tau_eigen[active & (lam > plan.z + 1e-12)] < 0)
    # a * q * tau does not depend on a
    twice = optimal_small_taxes(dec, 2 * a)
    assert np.allclose(2 * twice.tau_eigen, plan.tau_eigen, rtol=1e-12, atol=0)
    if active.all():
        assert np.allclose(a * q * plan.tau_eigen, scaled_revenue_targets(dec, plan.z), rtol=1e-9, atol=1e-12)


@given(normalized_matrices(min_n=2))
def test_leverage_is_sum_of_pass_through_gaps(d):
    # sum(1 - z mu) = N var / (4 + var) with z the full-support shadow price
    dec = decompose(d, np.ones(d.shape[0]))
    z = shadow_price_small(dec)
    assert np.sum(1.0 - z * np.asarray(dec.mu)) == pytest.approx(pigouvian_leverage(dec), abs=1e-10)
    var = eigenvalue_variance(dec)
    assert 0.0 <= pigouvian_leverage(dec) < dec.n
    assert z <= 0.5 + 1e-15 and z == pytest.approx(1 / (2 + var / 2))


@pytest.mark.parametrize("g", G_GRID)
def test_leverage_sign_invariant(g):
    if g > G_MAX:
        pytest.skip("outside the valid range")
    plus = pigouvian_leverage(_dec(g_triangle(g, "substitutes")))
    minus = pigouvian_leverage(_dec(g_triangle(g, "complements")))
    assert plus == pytest.approx(minus, abs=1e-12)


def test_zero_quantity_bundle_is_excluded(g_half):
    _, dec, _ = g_half
    plan = optimal_small_taxes(dec, 1e3)
    assert plan.degenerate and plan.excluded == (1,)
    assert plan.tau_eigen[1] == 0.0
    mu = np.asarray(dec.mu)[[0, 2]]
    assert plan.z == pytest.approx(mu.sum() / (mu**2).sum(), rel=1e-12)
    assert plan.z_full == pytest.approx(3 / 6.5, rel=1e-12)


def test_calibrated_market_has_full_support():
    dec = _dec(calibrated_g_triangle(0.5, [2.0, 1.5, 4.2]))
    assert not optimal_small_taxes(dec, 10.0).degenerate


@pytest.mark.parametrize("a", [0.0, -1.0, np.inf, np.nan])
def test_invalid_risk_aversion(g_half, a):
    with pytest.raises(InvalidRiskAversion):
        optimal_small_taxes(g_half[1], a)
