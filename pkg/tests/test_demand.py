import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from gelab.demand import (
    agent_demand,
    economy_demand,
    future_demand,
    marginal_expenditure_shares,
    wealth_derivative,
)
from gelab.economy import DiscountStructure, UtilityKernel
from gelab.errors import LengthMismatch, NonPositiveConsumption, NonPositivePrice, WealthNonPositive
from oracles import cobb_douglas_demand


def _kernel(rng, N, sigma):
    fam = "log" if sigma == 1.0 else "isoelastic"
    return UtilityKernel(fam, np.exp(0.5 * rng.standard_normal(N + 1)), sigma)


@pytest.mark.parametrize("sigma", [0.2, 0.5, 1.0, 2.0, 5.0])
def test_first_order_conditions_and_budget(rng, sigma):
    N = 10
    d = DiscountStructure(0.9, N)
    k = _kernel(rng, N, sigma)
    p = d.powers[1:] * np.exp(0.3 * rng.standard_normal(N))
    r = agent_demand(k, d, p, endowment=rng.uniform(0.5, 2, N + 1))
    pf = np.concatenate(([1.0], p))
    lhs = d.powers * k.marginal_utility(np.arange(N + 1), r.consumption)
    assert_allclose(lhs, r.shadow_value * pf, rtol=1e-10)
    assert abs(r.budget_residual) <= 1e-10 * r.wealth


def test_autarky_at_discount_prices():
    d = DiscountStructure(0.9, 6)
    k = UtilityKernel("isoelastic", np.ones(7), 0.4)
    omega = np.full(7, 2.0)
    r = agent_demand(k, d, d.powers[1:], endowment=omega)
    assert_allclose(r.consumption, omega, rtol=1e-13)


def test_log_demand_matches_cobb_douglas(rng):
    N = 8
    d = DiscountStructure(0.85, N)
    k = _kernel(rng, N, 1.0)
    p = rng.uniform(0.1, 2.0, N)
    omega = rng.uniform(0.5, 2, N + 1)
    r = agent_demand(k, d, p, endowment=omega)
    assert_allclose(r.consumption, cobb_douglas_demand(0.85, k.taste, omega, p), rtol=1e-12)
    T = d.powers @ k.taste
    pf = np.concatenate(([1.0], p))
    assert_allclose(pf * r.consumption * T, d.powers * k.taste * r.wealth, rtol=1e-10)


@given(st.floats(0.05, 20), st.floats(0.2, 4), st.integers(0, 2**32 - 1))
def test_homogeneity(c, sigma, seed):
    rng = np.random.default_rng(seed)
    N = 5
    d = DiscountStructure(0.9, N)
    k = _kernel(rng, N, sigma)
    p = rng.uniform(0.2, 3, N)
    w = rng.uniform(0.5, 5)
    # scaling every price, date 0 included, and wealth by c: the date-0 numeraire
    # convention means we compare the future-only problem where all prices are free
    x1 = future_demand(k, d, p, w)
    x2 = future_demand(k, d, c * p, c * w)
    assert_allclose(x1, x2, rtol=1e-10)


def test_extreme_prices_stay_finite():
    d = DiscountStructure(0.95, 160)
    k = UtilityKernel("isoelastic", np.ones(161), 0.2)
    p = d.powers[1:] * 1e-6
    r = agent_demand(k, d, p, endowment=np.ones(161))
    assert np.all(np.isfinite(r.consumption)) and np.all(r.consumption > 0)
    assert abs(r.budget_residual) <= 1e-10 * r.wealth


def test_demand_errors():
    d = DiscountStructure(0.9, 3)
    k = UtilityKernel("log", np.ones(4))
    with pytest.raises(NonPositivePrice):
        agent_demand(k, d, [1.0, 0.0, 1.0], endowment=np.ones(4))
    with pytest.raises(LengthMismatch):
        agent_demand(k, d, [1.0, 1.0], endowment=np.ones(4))
    with pytest.raises(WealthNonPositive):
        agent_demand(k, d, [1.0, 1.0, 1.0], wealth=0.0)
    with pytest.raises(NonPositiveConsumption):
        marginal_expenditure_shares(k, d, [1.0, -1.0, 1.0])


def test_economy_demand_matches_agentwise(mixed):
    e, _ = mixed
    p = e.discount.powers[1:] * 1.1
    x, lam, w = economy_demand(e, p)
    for i, a in enumerate(e.agents):
        r = agent_demand(a.kernel, e.discount, p, endowment=a.endowment)
        assert_allclose(x[i], r.consumption, rtol=1e-13)
        assert lam[i] == pytest.approx(r.shadow_value, rel=1e-13)


def test_log_shares_independent_of_bundle(rng):
    d = DiscountStructure(0.9, 6)
    k = _kernel(rng, 6, 1.0)
    expected = d.powers[1:] * k.taste[1:] / (d.powers[1:] @ k.taste[1:])
    for _ in range(3):
        m = marginal_expenditure_shares(k, d, rng.uniform(0.1, 10, 6))
        assert_allclose(m, expected, rtol=1e-13)


def test_uniform_tastes_give_discount_weights():
    d = DiscountStructure(0.8, 9)
    k = UtilityKernel("isoelastic", np.full(10, 2.0), 0.6)
    m = marginal_expenditure_shares(k, d, np.full(9, 1.3))
    assert_allclose(m, d.weights, rtol=1e-13)
    assert m.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("sigma", [0.2, 0.7, 1.0, 3.0])
def test_shares_equal_engel_slopes(rng, sigma):
    N = 7
    d = DiscountStructure(0.9, N)
    k = _kernel(rng, N, sigma)
    p = d.powers[1:] * rng.uniform(0.7, 1.4, N)
    for w in (0.5, 2.0, 9.0):
        h = 1e-5 * w
        slope = p * (future_demand(k, d, p, w + h) - future_demand(k, d, p, w - h)) / (2 * h)
        m = marginal_expenditure_shares(k, d, future_demand(k, d, p, w))
        assert_allclose(m, slope, rtol=1e-4)


@pytest.mark.parametrize("sigma", [0.3, 1.0, 2.5])
def test_wealth_derivative(rng, sigma):
    N = 6
    d = DiscountStructure(0.9, N)
    k = _kernel(rng, N, sigma)
    p = rng.uniform(0.3, 1.5, N)
    w = 3.0
    dx = wealth_derivative(k, d, p, w)
    pf = np.concatenate(([1.0], p))
    assert pf @ dx == pytest.approx(1.0, abs=1e-10)
    h = 1e-5 * w
    fd = (agent_demand(k, d, p, wealth=w + h).consumption - agent_demand(k, d, p, wealth=w - h).consumption) / (2 * h)
    assert_allclose(dx, fd, rtol=1e-4)
    if sigma == 1.0:
        T = d.powers @ k.taste
        assert_allclose(dx, d.powers * k.taste / (T * pf), rtol=1e-12)
