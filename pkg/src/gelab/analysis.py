"""Slutsky structure of aggregate excess demand at (equilibrium) prices.

Jacobian convention: ``Dz[m, n] = d z_n / d p_m`` (row = price perturbed,
column = market).  The quadratic form ``q @ Dz @ q`` does not depend on the
convention; eigenvalues of the symmetric part do not either.

Functions taking ``eq`` accept any object with ``prices`` (length N) and
``allocation`` (shape ``(I, N+1)``) attributes, e.g. an
:class:`gelab.equilibrium.EquilibriumResult`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demand import economy_demand
from .economy import Economy, beta_norm
from .errors import DegeneratePsi, LengthMismatch, NonPositiveConsumption, ZeroDistortion


@dataclass(frozen=True)
class AgentSlutsky:
    substitution: np.ndarray
    income: np.ndarray
    risk_tolerances: np.ndarray
    r_bar: float
    r_bar_future: float


@dataclass(frozen=True)
class QuadraticTerms:
    A: float
    S_of_u: float
    R_of_u: float
    M_of_u: float
    lambda_i: np.ndarray
    alpha: float
    u: np.ndarray
    psi_pbar: float
    qform: float

    @property
    def identity_residual(self) -> float:
        """``q'Dz q - (-A a^2 + R a - S + M)``."""
        return self.qform - (-self.A * self.alpha**2 + self.R_of_u * self.alpha - self.S_of_u + self.M_of_u)


@dataclass(frozen=True)
class RateReport:
    s_ratio: float
    m_ratio: float
    r_ratio: float
    a_ratio: float
    v: np.ndarray


class _Point:
    """Risk-tolerance bookkeeping at prices ``p`` and allocation ``x``."""

    def __init__(self, e: Economy, p, x):
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        if p.shape != (e.horizon,) or x.shape != e.endowment.shape:
            raise LengthMismatch("prices/allocation", "shapes do not match the economy")
        if np.any(x <= 0):
            raise NonPositiveConsumption("allocation", "allocation must be interior")
        self.e, self.p, self.x = e, p, x
        r = e.sigma[:, None] * x
        self.r0 = r[:, 0]
        self.rf = r[:, 1:]
        self.rbar0 = self.rf @ p
        self.rbar = self.r0 + self.rbar0
        self.net = e.endowment - x  # omega - x
        self.mbar = p * self.rf / self.rbar0[:, None]
        # Psi(q) = psi_vec @ q
        c = (2.0 * self.r0 + self.net[:, 0]) / self.rbar
        self.psi_vec = c @ self.rf

    def lam(self, q):
        """Per-agent ``Lambda_i(q) = sum_n r_in q_n / r_i^0``."""
        return self.rf @ q / self.rbar0

    def jacobian(self):
        rf, p = self.rf, self.p
        left = rf + self.net[:, 1:]
        dz = left.T @ (rf / self.rbar[:, None])
        dz[np.diag_indices_from(dz)] -= rf.sum(axis=0) / p
        return dz


def _point(e, eq) -> _Point:
    return _Point(e, eq.prices, eq.allocation)


def agent_slutsky(e: Economy, prices, allocation, i: int) -> AgentSlutsky:
    """Substitution and income matrices of agent ``i`` (rows index the price moved)."""
    pt = _Point(e, prices, allocation)
    rf, p = pt.rf[i], pt.p
    S = np.outer(rf, rf) / pt.rbar[i] - np.diag(rf / p)
    M = np.outer(pt.net[i, 1:], rf) / pt.rbar[i]
    r = np.concatenate(([pt.r0[i]], rf))
    return AgentSlutsky(S, M, r, float(pt.rbar[i]), float(pt.rbar0[i]))


def jacobian_at(e: Economy, p) -> np.ndarray:
    """Analytic ``Dz(p)`` at arbitrary positive prices (demand evaluated at ``p``)."""
    x, _, _ = economy_demand(e, p)
    return _Point(e, p, x).jacobian()


def aggregate_jacobian(e: Economy, eq) -> np.ndarray:
    """``Dz = sum_i (S_i + M_i)`` at the equilibrium ``eq``."""
    return _point(e, eq).jacobian()


def fd_jacobian(e: Economy, p, rel_step=1e-6) -> np.ndarray:
    """Central-difference Jacobian of excess demand, same convention as :func:`jacobian_at`."""
    p = np.asarray(p, dtype=float)
    N = p.size
    omega = e.aggregate_endowment[1:]
    dz = np.empty((N, N))
    for m in range(N):
        h = rel_step * max(1.0, p[m])
        up, dn = p.copy(), p.copy()
        up[m] += h
        dn[m] -= h
        z_up = economy_demand(e, up)[0][:, 1:].sum(axis=0) - omega
        z_dn = economy_demand(e, dn)[0][:, 1:].sum(axis=0) - omega
        dz[m] = (z_up - z_dn) / (2.0 * h)
    return dz


def psi(e: Economy, eq, q) -> float:
    return float(_point(e, eq).psi_vec @ np.asarray(q, dtype=float))


def _psi_scale(pt: _Point) -> float:
    c = (2.0 * pt.r0 + pt.net[:, 0]) / pt.rbar
    return float(np.abs(c) @ pt.rbar0)


def _decompose(pt: _Point, q):
    psi_p = float(pt.psi_vec @ pt.p)
    if abs(psi_p) <= 1e-12 * _psi_scale(pt):
        raise DegeneratePsi(f"Psi(p_bar) = {psi_p:.3e} is numerically zero; decomposition undefined")
    alpha = float(pt.psi_vec @ q) / psi_p
    return alpha, q - alpha * pt.p, psi_p


def decompose_perturbation(e: Economy, eq, q):
    """Split ``q = alpha * p_bar + u`` with ``Psi(u) = 0``; returns ``(alpha, u)``."""
    alpha, u, _ = _decompose(_point(e, eq), np.asarray(q, dtype=float))
    return alpha, u


def project_to_kernel(e: Economy, eq, d) -> np.ndarray:
    """Component of ``d`` in ``ker Psi`` along ``p_bar``."""
    return decompose_perturbation(e, eq, d)[1]


def _terms(pt: _Point, u):
    lam = pt.lam(u)
    A = float(np.sum(pt.rbar0 / pt.rbar * (pt.r0 + pt.net[:, 0])))
    dev = u[None, :] - pt.p[None, :] * lam[:, None]
    S = float(np.sum(pt.rf / pt.p * dev**2))
    trade = pt.net[:, 1:] @ u  # sum_m (omega_im - x_im) u_m
    R = float(np.sum(pt.r0 / pt.rbar * -trade))
    M = float(np.sum(pt.rbar0 / pt.rbar * lam * (trade - pt.r0 * lam)))
    return A, S, R, M, lam


def quadratic_terms(e: Economy, eq, q) -> QuadraticTerms:
    """The four terms of ``q' Dz q = -A a^2 + R(u) a - S(u) + M(u)``."""
    pt = _point(e, eq)
    q = np.asarray(q, dtype=float)
    alpha, u, psi_p = _decompose(pt, q)
    A, S, R, M, lam = _terms(pt, u)
    qform = float(q @ pt.jacobian() @ q)
    return QuadraticTerms(A, S, R, M, lam, alpha, u, psi_p, qform)


def substitution_graph_form(e: Economy, eq, u):
    """``S(u) = 1/2 sum_{m,n} w_mn (v_m - v_n)^2`` with ``v = u / p_bar``.

    Returns ``(S_value, w)``; ``w_mn = sum_i (p_m r_im)(p_n r_in) / r_i^0``.
    """
    pt = _point(e, eq)
    v = np.asarray(u, dtype=float) / pt.p
    pr = pt.p * pt.rf
    w = pr.T @ (pr / pt.rbar0[:, None])
    # 1/2 sum w_mn (v_m - v_n)^2 = sum_m (sum_n w_mn) v_m^2 - v'wv
    S = float(w.sum(axis=1) @ v**2 - v @ w @ v)
    return S, w


def normalized_weights(e: Economy, eq) -> np.ndarray:
    """``w_mn / (I N_beta pi_m pi_n)``; bounded above and below in the large-N regime."""
    _, w = substitution_graph_form(e, eq, np.zeros(e.horizon))
    d = e.discount
    return w / (e.n_agents * d.n_beta * np.outer(d.weights, d.weights))


def rate_ratios(e: Economy, eq, u) -> RateReport:
    """Normalized substitution, income, mixed and proportional terms for distortion ``u``."""
    pt = _point(e, eq)
    u = np.asarray(u, dtype=float)
    v = u / pt.p
    nv = beta_norm(v, e.discount)
    if nv == 0.0:
        raise ZeroDistortion("distortion has zero weighted norm")
    A, S, R, M, _ = _terms(pt, u)
    I, nb = e.n_agents, e.discount.n_beta
    return RateReport(S / (I * nb * nv**2), abs(M) / (I * nb * nv**2), abs(R) / (I * nv), A / I, v)


def odd_even_pattern(N: int) -> np.ndarray:
    """``+1`` on odd dates, ``-1`` on even dates, for ``n = 1..N``."""
    n = np.arange(1, N + 1)
    return np.where(n % 2 == 1, 1.0, -1.0)


def odd_even_distortion(e: Economy, eq) -> np.ndarray:
    return project_to_kernel(e, eq, odd_even_pattern(e.horizon) * np.asarray(eq.prices))


def random_distortion(e: Economy, eq, rng: np.random.Generator) -> np.ndarray:
    """Seeded distortion: ``v ~ N(0, 1)`` per date, scaled by ``p_bar`` and projected onto ``ker Psi``.

    Draws are prefix-consistent in ``N`` for a fixed generator state.
    """
    v = rng.standard_normal(e.horizon)
    return project_to_kernel(e, eq, v * np.asarray(eq.prices))


def equilibrium_bands(e: Economy, eq) -> dict:
    """Ranges of ``q_n = p_n / beta**n``, consumption and risk tolerance at ``eq``."""
    q = np.asarray(eq.prices) / e.discount.powers[1:]
    x = np.asarray(eq.allocation)
    r = e.sigma[:, None] * x
    return {
        "q": (float(q.min()), float(q.max())),
        "x": (float(x.min()), float(x.max())),
        "r": (float(r.min()), float(r.max())),
    }
