"""Marshallian demand for discounted isoelastic agents.

First-order conditions ``beta**n * taste[n] * x_n**(-1/sigma) = lam * p_n``
(``p_0 = 1``) give ``x_n(lam) = (beta**n taste[n] / (lam p_n))**sigma``.  The
budget map ``lam -> sum_n p_n x_n(lam)`` is ``C * lam**(-sigma)`` with

    C = sum_n p_n**(1-sigma) * (beta**n taste[n])**sigma,

so the multiplier is ``lam = (C / w)**(1/sigma)``.  Everything is evaluated in
logs to stay finite for tiny tail prices and extreme elasticities.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .economy import DiscountStructure, Economy, UtilityKernel, _check_positive
from .errors import LengthMismatch, NonPositivePrice, ValidationError, WealthNonPositive


@dataclass(frozen=True)
class DemandResult:
    consumption: np.ndarray
    shadow_value: float
    budget_residual: float
    wealth: float


def _full_prices(p, N) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (N,):
        raise LengthMismatch("p", f"expected {N} future prices, got shape {p.shape}")
    if not np.all(p > 0) or not np.all(np.isfinite(p)):
        raise NonPositivePrice("p", "all future prices must be positive and finite")
    return np.concatenate(([1.0], p))


def _solve(log_bt, sigma, log_p, wealth):
    """Vectorized core.

    ``log_bt``: (I, K) log of ``beta**n * taste``; ``sigma``: (I,);
    ``log_p``: (K,); ``wealth``: (I,).  Returns ``(x, log_lam)``.
    """
    s = sigma[:, None]
    log_c = logsumexp((1.0 - s) * log_p + s * log_bt, axis=1)
    log_lam = (log_c - np.log(wealth)) / sigma
    x = np.exp(s * (log_bt - log_p - log_lam[:, None]))
    return x, log_lam


def agent_demand(k: UtilityKernel, d: DiscountStructure, p, *, endowment=None, wealth=None) -> DemandResult:
    """Demand of one agent at future prices ``p`` (date 0 is numeraire).

    Pass either ``endowment`` (wealth is its value at ``p``) or ``wealth``.
    """
    if k.horizon != d.horizon:
        raise LengthMismatch("kernel", f"kernel horizon {k.horizon} != discount horizon {d.horizon}")
    pf = _full_prices(p, d.horizon)
    if (endowment is None) == (wealth is None):
        raise ValidationError("endowment/wealth", "pass exactly one of endowment or wealth")
    if wealth is None:
        wealth = float(np.dot(pf, endowment))
    if not wealth > 0:
        raise WealthNonPositive("wealth", f"must be positive, got {wealth}")
    log_bt = np.log(d.powers * k.taste)[None, :]
    x, log_lam = _solve(log_bt, np.array([k.sigma]), np.log(pf), np.array([wealth]))
    x = x[0]
    return DemandResult(x, float(np.exp(log_lam[0])), float(pf @ x - wealth), float(wealth))


def future_demand(k: UtilityKernel, d: DiscountStructure, p, wealth) -> np.ndarray:
    """Optimal bundle of the future-only problem ``max sum_{n>=1} beta**n u_n`` s.t. ``p . z = wealth``."""
    pf = _full_prices(p, d.horizon)
    if not wealth > 0:
        raise WealthNonPositive("wealth", f"must be positive, got {wealth}")
    log_bt = np.log(d.powers[1:] * k.taste[1:])[None, :]
    x, _ = _solve(log_bt, np.array([k.sigma]), np.log(pf[1:]), np.array([float(wealth)]))
    return x[0]


def economy_demand(e: Economy, p):
    """Demand of every agent at ``p``.

    Returns ``(x, lam, wealth)`` with ``x`` of shape ``(I, N+1)``.
    """
    pf = _full_prices(p, e.horizon)
    wealth = e.endowment @ pf
    if np.any(wealth <= 0):
        i = int(np.argmax(wealth <= 0))
        raise WealthNonPositive(f"agents[{i}]", f"wealth {wealth[i]} is not positive")
    log_bt = np.log(e.discount.powers[None, :] * e.taste)
    x, log_lam = _solve(log_bt, e.sigma, np.log(pf), wealth)
    return x, np.exp(log_lam), wealth


def marginal_expenditure_shares(k: UtilityKernel, d: DiscountStructure, x_future) -> np.ndarray:
    """Share of a marginal unit of future wealth spent on each future date.

    ``m_n = beta**n u_n'(x_n) r_n(x_n) / sum_m beta**m u_m'(x_m) r_m(x_m)``.
    """
    x = _check_positive(x_future)
    if x.shape != (d.horizon,):
        raise LengthMismatch("x_future", f"expected length {d.horizon}, got {x.shape}")
    w = d.powers[1:] * k.taste[1:] * x ** (1.0 - 1.0 / k.sigma)
    return w / w.sum()


def wealth_derivative(k: UtilityKernel, d: DiscountStructure, p, w) -> np.ndarray:
    """``d xi_n / d w`` for ``n = 0..N`` at prices ``p`` and wealth ``w``."""
    res = agent_demand(k, d, p, wealth=w)
    pf = np.concatenate(([1.0], np.asarray(p, dtype=float)))
    r = k.sigma * res.consumption
    return r / (pf @ r)
