import numpy as np
import pytest
from numpy.testing import assert_allclose

from gelab.analysis import (
    _Point,
    agent_slutsky,
    aggregate_jacobian,
    decompose_perturbation,
    fd_jacobian,
    jacobian_at,
    normalized_weights,
    odd_even_distortion,
    odd_even_pattern,
    psi,
    quadratic_terms,
    random_distortion,
    rate_ratios,
    substitution_graph_form,
)
from gelab.corpus import random_economy
from gelab.demand import agent_demand
from gelab.equilibrium import isoelastic_example_oracle, solve_equilibrium
from gelab.errors import ZeroDistortion
from gelab.scenarios import ScenarioSpec, generate, isoelastic_params


def _solved(fam, N=12, beta=0.9, I=8, seed=0):
    e = generate(ScenarioSpec(fam, {}, seed), N, beta, I)
    return e, solve_equilibrium(e)


def _fd_total_demand(e, p, i, rel=1e-6):
    a = e.agents[i]
    N = e.horizon
    out = np.empty((N, N))
    for m in range(N):
        h = rel * max(1.0, p[m])
        up, dn = p.copy(), p.copy()
        up[m] += h
        dn[m] -= h
        xu = agent_demand(a.kernel, e.discount, up, endowment=a.endowment).consumption[1:]
        xd = agent_demand(a.kernel, e.discount, dn, endowment=a.endowment).consumption[1:]
        out[m] = (xu - xd) / (2 * h)
    return out


@pytest.mark.parametrize("i", range(4))
def test_agent_slutsky_matches_fd(mixed, i):
    e, eq = mixed
    s = agent_slutsky(e, eq.prices, eq.allocation, i)
    fd = _fd_total_demand(e, eq.prices, i)
    total = s.substitution + s.income
    assert np.max(np.abs(total - fd)) <= 1e-4 * np.max(np.abs(total))


@pytest.mark.parametrize("i", range(4))
def test_substitution_matrix_structure(mixed, rng, i):
    e, eq = mixed
    s = agent_slutsky(e, eq.prices, eq.allocation, i)
    assert_allclose(s.substitution, s.substitution.T, rtol=1e-14)
    assert np.linalg.eigvalsh(s.substitution).max() < 0
    p = eq.prices
    r0, rf = s.risk_tolerances[0], s.risk_tolerances[1:]
    for _ in range(10):
        q = rng.standard_normal(e.horizon) * p
        lam = rf @ q / s.r_bar_future
        explicit = -np.sum(rf / p * (q - p * lam) ** 2) - r0 * s.r_bar_future / s.r_bar * lam**2
        assert q @ s.substitution @ q == pytest.approx(explicit, rel=1e-10)
        assert q @ s.substitution @ q < 0


def test_identical_agents_income_terms_vanish(identical, rng):
    eq = solve_equilibrium(identical)
    for i in range(identical.n_agents):
        assert np.max(np.abs(agent_slutsky(identical, eq.prices, eq.allocation, i).income)) <= 1e-12
    dz = aggregate_jacobian(identical, eq)
    assert_allclose(dz, dz.T, atol=1e-12)
    assert np.linalg.eigvalsh(dz).max() < 0
    u = decompose_perturbation(identical, eq, rng.standard_normal(6))[1]
    t = quadratic_terms(identical, eq, u)
    assert abs(t.R_of_u) <= 1e-12 and abs(t.M_of_u) <= 1e-12
    assert rate_ratios(identical, eq, u).m_ratio <= 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_aggregate_jacobian_matches_fd(seed):
    e = random_economy(seed, 10, 5)
    eq = solve_equilibrium(e)
    dz = aggregate_jacobian(e, eq)
    fd = fd_jacobian(e, eq.prices)
    assert np.max(np.abs(dz - fd)) <= 1e-4 * np.max(np.abs(dz))


def test_jacobian_off_equilibrium(mixed):
    e, eq = mixed
    p = eq.prices * 1.3
    dz = jacobian_at(e, p)
    assert np.max(np.abs(dz - fd_jacobian(e, p))) <= 1e-4 * np.max(np.abs(dz))


def test_closed_form_jacobian_entries():
    # at p_n = beta**n, r_in / r_i = (1 + delta eps_in) / (1 + N_beta), so
    # Dz[m, n] = sum_i (omega_im - (1 - sigma) x_im) (1 + delta eps_in) / (1 + N_beta) for m != n
    spec = ScenarioSpec("isoelastic", {"delta": 0.5}, 2)
    p = isoelastic_params(spec, 16, 0.9, 8)
    e = p.economy()
    ref = isoelastic_example_oracle(p)
    dz = aggregate_jacobian(e, ref)
    x, omega = ref.allocation[:, 1:], e.endowment[:, 1:]
    expected = (omega - (1 - p.sigma) * x).T @ (1 + p.delta * p.eps) / (1 + e.discount.n_beta)
    off = ~np.eye(16, dtype=bool)
    assert_allclose(dz[off], expected[off], rtol=1e-10)


def test_gross_substitutes_fails_for_low_elasticity():
    e = generate(ScenarioSpec("isoelastic", {"delta": 0.5}, 0), 20, 0.9, 8)
    dz = aggregate_jacobian(e, solve_equilibrium(e))
    assert dz[~np.eye(e.horizon, dtype=bool)].min() < 0


def test_log_economy_is_gross_substitutes(dispersed):
    e, eq = dispersed
    dz = aggregate_jacobian(e, eq)
    assert dz[~np.eye(e.horizon, dtype=bool)].min() >= -1e-12


def test_decompose_trivial_cases(mixed, rng):
    e, eq = mixed
    a, u = decompose_perturbation(e, eq, eq.prices)
    assert a == pytest.approx(1.0, rel=1e-13)
    assert np.max(np.abs(u)) <= 1e-13 * np.max(eq.prices)
    q0 = decompose_perturbation(e, eq, rng.standard_normal(e.horizon))[1]
    a, u = decompose_perturbation(e, eq, q0)
    assert abs(a) <= 1e-13
    assert_allclose(u, q0, atol=1e-13)
    q = rng.standard_normal(e.horizon)
    a, u = decompose_perturbation(e, eq, q)
    assert_allclose(a * eq.prices + u, q, atol=1e-12)
    assert abs(psi(e, eq, u)) <= 1e-10 * abs(psi(e, eq, q)) + 1e-12


def test_lambda_of_equilibrium_prices_is_one(mixed, iso):
    for e, eq in (mixed, iso):
        pt = _Point(e, eq.prices, eq.allocation)
        assert_allclose(pt.lam(eq.prices), 1.0, atol=1e-12)


def test_pure_scaling_gives_minus_a(mixed):
    e, eq = mixed
    t = quadratic_terms(e, eq, 2.5 * eq.prices)
    assert t.qform == pytest.approx(-t.A * 2.5**2, rel=1e-10)


@pytest.mark.parametrize("fixture", ["dispersed", "mixed", "iso"])
def test_identity_residual(request, rng, fixture):
    e, eq = request.getfixturevalue(fixture)
    for _ in range(20):
        q = eq.prices * rng.standard_normal(e.horizon)
        t = quadratic_terms(e, eq, q)
        assert t.S_of_u >= 0
        assert abs(t.identity_residual) <= 1e-8 * (1 + abs(t.qform))


@pytest.mark.parametrize("fixture", ["dispersed", "mixed", "iso"])
def test_graph_form_equals_direct(request, rng, fixture):
    e, eq = request.getfixturevalue(fixture)
    for _ in range(10):
        u = random_distortion(e, eq, rng)
        s_graph, w = substitution_graph_form(e, eq, u)
        assert np.all(w > 0)
        assert s_graph == pytest.approx(quadratic_terms(e, eq, u).S_of_u, rel=1e-10)
    s_const, _ = substitution_graph_form(e, eq, 3.0 * eq.prices)
    assert abs(s_const) <= 1e-12 * np.abs(w).sum()


@pytest.mark.parametrize("fam", ["dispersed", "sparse", "two-type", "isoelastic"])
def test_normalized_weights_band(fam):
    lows, highs = [], []
    for N in (20, 40, 80):
        e, eq = _solved(fam, N=N, beta=0.95, I=12)
        w = normalized_weights(e, eq)
        lows.append(w.min())
        highs.append(w.max())
    # two-sided bound: the band neither collapses nor widens as the horizon grows
    assert 0.1 < min(lows) and max(highs) < 10.0
    assert lows[-1] > 0.5 * lows[0] and highs[-1] < 2.0 * highs[0]


def test_rate_ratios_zero_distortion(mixed):
    e, eq = mixed
    with pytest.raises(ZeroDistortion):
        rate_ratios(e, eq, np.zeros(e.horizon))


def test_odd_even_pattern():
    assert_allclose(odd_even_pattern(4), [1, -1, 1, -1])


def test_two_type_lambda_formula():
    delta = 0.5
    for N, beta in ((2, 0.5), (9, 0.9), (40, 0.95)):
        e, eq = _solved("two-type", N=N, beta=beta, I=4)
        eps = odd_even_pattern(N)
        nb = e.discount.n_beta
        E = e.discount.powers[1:] @ eps
        pt = _Point(e, eq.prices, eq.allocation)
        lam = pt.lam(eps * eq.prices)
        assert lam[0] == pytest.approx((E + delta * nb) / (nb + delta * E), rel=1e-10)
        assert lam[-1] == pytest.approx((E - delta * nb) / (nb - delta * E), rel=1e-10)


def test_two_type_income_term_persists():
    ratios = []
    for N in (20, 80):
        e, eq = _solved("two-type", N=N, beta=0.95, I=12)
        ratios.append(rate_ratios(e, eq, odd_even_distortion(e, eq)).m_ratio)
    assert ratios[1] >= 0.5 * ratios[0] > 0
