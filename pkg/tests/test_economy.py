import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from gelab.economy import (
    AuditThresholds,
    DiscountStructure,
    UtilityKernel,
    audit_assumptions,
    beta_inner_product,
    beta_norm,
    economy_from_dict,
    effective_commodity_count,
    load_economy,
    make_economy,
    risk_tolerance,
)
from gelab.errors import LengthMismatch, NonPositiveConsumption, ValidationError
from gelab.scenarios import ScenarioSpec, generate, isoelastic_params
from oracles import fd_second_derivative_rt, inner_loop


@pytest.mark.parametrize("N, beta, expected", [(2, 0.5, 0.75), (1, 0.9, 0.9)])
def test_effective_count_small(N, beta, expected):
    assert effective_commodity_count(DiscountStructure(beta, N)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("beta", [0.5, 0.8, 0.95, 0.99])
def test_effective_count_closed_form(beta):
    for N in (1, 7, 100, 200):
        d = DiscountStructure(beta, N)
        assert d.n_beta == pytest.approx(beta * (1 - beta**N) / (1 - beta), rel=1e-12)


@pytest.mark.parametrize("beta", [0.5, 0.8, 0.95, 0.99])
def test_weights_form_distribution(beta):
    for N in range(1, 201):
        w = DiscountStructure(beta, N).weights
        assert abs(w.sum() - 1.0) <= 1e-12
        assert np.all(w > 0)


@pytest.mark.parametrize("beta, N", [(0.0, 3), (1.0, 3), (0.5, 0), (0.5, 2.5)])
def test_discount_rejects_bad_input(beta, N):
    with pytest.raises(ValidationError):
        DiscountStructure(beta, N)


def test_inner_product_trivial_cases():
    d = DiscountStructure(0.8, 7)
    assert beta_inner_product(np.ones(7), np.ones(7), d) == pytest.approx(1.0, abs=1e-15)
    assert beta_inner_product(np.arange(7.0), np.zeros(7), d) == 0.0


def test_inner_product_matches_loop(rng):
    d = DiscountStructure(0.8, 7)
    x, y = rng.standard_normal((2, 7))
    assert beta_inner_product(x, y, d) == pytest.approx(inner_loop(x, y, 0.8), abs=1e-14)
    assert beta_norm(x, d) ** 2 == pytest.approx(inner_loop(x, x, 0.8), rel=1e-14)


def test_inner_product_length_mismatch():
    with pytest.raises(LengthMismatch):
        beta_inner_product(np.ones(3), np.ones(4), DiscountStructure(0.9, 3))


vec = st.lists(st.floats(-10, 10), min_size=6, max_size=6).map(np.array)


@given(vec, vec, vec, st.floats(-3, 3))
def test_inner_product_symmetric_bilinear(x, y, z, a):
    d = DiscountStructure(0.9, 6)
    ip = lambda u, v: beta_inner_product(u, v, d)
    scale = 1 + np.abs(x).max() * (np.abs(y).max() + np.abs(z).max()) * (1 + abs(a))
    assert ip(x, y) == pytest.approx(ip(y, x), abs=1e-13 * scale)
    assert ip(x, a * y + z) == pytest.approx(a * ip(x, y) + ip(x, z), abs=1e-13 * scale)


def test_risk_tolerance_examples():
    log = UtilityKernel("log", [1.0, 3.0])
    assert risk_tolerance(log, 1, 2.5) == 2.5
    assert risk_tolerance(UtilityKernel("isoelastic", [1.0, 1.0], 0.5), 1, 3.0) == 1.5
    with pytest.raises(NonPositiveConsumption):
        risk_tolerance(log, 0, 0.0)


@pytest.mark.parametrize("sigma", [0.2, 0.5, 1.0, 1.7, 4.0])
@pytest.mark.parametrize("x", [0.01, 1.0, 37.0])
def test_risk_tolerance_fd(sigma, x):
    k = UtilityKernel("isoelastic", [1.0, 2.0, 0.3], sigma)
    for n in range(3):
        fd = fd_second_derivative_rt(lambda y: k.marginal_utility(n, y), x)
        assert risk_tolerance(k, n, x) == pytest.approx(fd, rel=1e-5)
        assert risk_tolerance(k, n, x) == sigma * x


def test_log_kernel_forces_unit_sigma():
    assert UtilityKernel("log", [1.0, 1.0], sigma=3.0).sigma == 1.0


@pytest.mark.parametrize("sigma", [0.3, 1.0, 2.0])
def test_marginal_utility_is_derivative_of_utility(sigma):
    k = UtilityKernel("isoelastic", [1.0, 2.0], sigma)
    x, h = 1.7, 1e-6
    fd = (k.utility(1, x + h) - k.utility(1, x - h)) / (2 * h)
    assert k.marginal_utility(1, x) == pytest.approx(fd, rel=1e-8)
    assert k.second_derivative(1, x) < 0


def test_audit_identical_agents():
    e = make_economy(0.9, np.ones((4, 6)), np.full((4, 6), 2.0))
    a = audit_assumptions(e, AuditThresholds(c_u=0.5, C_u=1.0, c_omega=1.0, C_omega=3.0, c_w=1.0, C_w=3.0))
    assert a.marginal_ratio_bounds == (1.0, 1.0)
    assert all(a.flags.values())


def test_audit_isoelastic_ratio_bounds():
    spec = ScenarioSpec("isoelastic", {"delta": 0.3, "sigma": 0.2}, 4)
    e = generate(spec, 20, 0.9, 8)
    p = isoelastic_params(spec, 20, 0.9, 8)
    vals = (1 + 0.3 * p.eps) ** (1 / 0.2)
    lo, hi = audit_assumptions(e).marginal_ratio_bounds
    assert lo == pytest.approx(min(vals.min(), 1.0), rel=1e-12)
    assert hi == pytest.approx(max(vals.max(), 1.0), rel=1e-12)


def test_audit_wealth_flag_fails_for_date_zero_endowment():
    omega = np.ones((2, 5))
    omega[0, 1:] = 0.0
    e = make_economy(0.9, np.ones((2, 5)), omega)
    a = audit_assumptions(e, AuditThresholds(c_w=0.5))
    assert a.discounted_endowment_ratios[0] == 0.0
    assert not a.flags["A4"]
    assert a.flags["A2"] and a.flags["A3"]


def test_audit_is_deterministic(mixed):
    e, _ = mixed
    t = AuditThresholds(0.1, 10, 0.1, 10, 0.1, 10)
    assert audit_assumptions(e, t).to_dict() == audit_assumptions(e, t).to_dict()


def test_economy_invariants():
    with pytest.raises(ValidationError, match="aggregate endowment"):
        make_economy(0.9, np.ones((2, 3)), np.array([[1.0, 0, 1], [1, 0, 1]]))
    with pytest.raises(ValidationError):
        make_economy(0.9, np.ones((2, 3)), np.ones((2, 4)))


def test_json_roundtrip(tmp_path, mixed):
    e, _ = mixed
    path = tmp_path / "e.json"
    path.write_text(e.dumps())
    e2 = load_economy(path)
    assert_allclose(e2.taste, e.taste, rtol=0)
    assert_allclose(e2.endowment, e.endowment, rtol=0)
    assert_allclose(e2.sigma, e.sigma, rtol=0)


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d.pop("beta"), "beta"),
    (lambda d: d["agents"][1]["taste"].__setitem__(2, -1.0), "agents[1].taste[2]"),
    (lambda d: d["agents"][0].__setitem__("family", "cobb"), "agents[0].family"),
    (lambda d: d["agents"][0]["endowment"].pop(), "agents[0].endowment"),
    (lambda d: d.__setitem__("horizon", "3"), "horizon"),
])
def test_json_validation_names_field(mutate, path):
    data = json.loads(make_economy(0.9, np.ones((2, 4)), np.ones((2, 4))).dumps())
    mutate(data)
    with pytest.raises(ValidationError) as exc:
        economy_from_dict(data)
    assert exc.value.path == path
