"""Alignment statistics of marginal expenditure shares across agents.

``m_in`` is the share of a marginal unit of future wealth agent ``i`` spends
on date ``n`` at its equilibrium bundle; ``rho_in = (m_in - mbar_n) / mbar_n``
measures how far the agent sits from the population mean.  The statistic

    a5 = (1/I**2) sum_ij |<rho_i, rho_j>_{N,beta}|

vanishes when deviation profiles are diversified.  For log kernels the shares
do not depend on the bundle, and ``a5**2`` is bounded by the sum of squared
eigenvalues of ``D^1/2 Sigma D^1/2`` (Cauchy-Schwarz on the Gram matrix).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .economy import DiscountStructure, Economy
from .errors import ValidationError, ZeroMeanShare


@dataclass(frozen=True)
class DiversificationReport:
    rho: np.ndarray
    a5: float
    a5_prime: float
    net_trades: np.ndarray
    spectral_eigs: np.ndarray | None
    spectral_sum_sq: float | None
    cs_gap: float | None

    def to_dict(self) -> dict:
        return {
            "a5": self.a5,
            "a5_prime": self.a5_prime,
            "spectral_eigs": None if self.spectral_eigs is None else self.spectral_eigs.tolist(),
            "spectral_sum_sq": self.spectral_sum_sq,
            "cs_gap": self.cs_gap,
            "rho": self.rho.tolist(),
            "net_trades": self.net_trades.tolist(),
        }


def share_matrix(e: Economy, allocation) -> np.ndarray:
    """``(I, N)`` marginal expenditure shares at the bundle ``allocation``."""
    x = np.asarray(allocation, dtype=float)[:, 1:]
    s = e.sigma[:, None]
    # beta**n tau_n x_n**(1 - 1/sigma), normalized in logs per agent
    logw = np.log(e.discount.powers[None, 1:] * e.taste[:, 1:]) + (1.0 - 1.0 / s) * np.log(x)
    w = np.exp(logw - logw.max(axis=1, keepdims=True))
    return w / w.sum(axis=1, keepdims=True)


def relative_deviations(m: np.ndarray) -> np.ndarray:
    mbar = m.mean(axis=0)
    if np.any(mbar <= 0):
        raise ZeroMeanShare(f"mean marginal share vanishes at date {int(np.argmin(mbar)) + 1}")
    return (m - mbar) / mbar


def gram(a: np.ndarray, b: np.ndarray, d: DiscountStructure) -> np.ndarray:
    """``G_ij = <a_i, b_j>_{N,beta}`` for row stacks ``a`` and ``b``."""
    return (a * d.powers[1:]) @ b.T / d.n_beta


def alignment(rho, d: DiscountStructure) -> float:
    I = rho.shape[0]
    return float(np.abs(gram(rho, rho, d)).sum() / I**2)


def spectral_statistic(taste, d: DiscountStructure):
    """Eigenvalues of ``D^1/2 Sigma D^1/2`` for log agents with the given tastes.

    ``taste`` has shape ``(I, N+1)`` or ``(I, N)`` (future dates only).  Rows
    are normalized so that ``sum_n beta**n tau_in = 1``; the statistic does not
    depend on that scale.  Returns ``(eigs, sum_sq)`` with ``N`` eigenvalues in
    decreasing order.  The nonzero spectrum is computed from the ``I x I``
    matrix ``G / I`` (same nonzero eigenvalues, cheaper when ``I < N``).
    """
    t = np.atleast_2d(np.asarray(taste, dtype=float))
    N = d.horizon
    if t.shape[1] == N + 1:
        t = t[:, 1:]
    if t.shape[1] != N:
        raise ValidationError("taste", f"expected {N} or {N + 1} columns, got {t.shape[1]}")
    bt = t * d.powers[1:]
    m = bt / bt.sum(axis=1, keepdims=True)
    rho = relative_deviations(m)
    I = rho.shape[0]
    small = np.linalg.eigvalsh(gram(rho, rho, d) / I)[::-1]
    eigs = np.zeros(N)
    k = min(I, N)
    eigs[:k] = np.clip(small[:k], 0.0, None)
    return eigs, float(np.sum(eigs**2))


def diversification_report(e: Economy, eq) -> DiversificationReport:
    """Alignment statistics at the equilibrium ``eq`` (``prices`` and ``allocation``)."""
    x = np.asarray(eq.allocation, dtype=float)
    if np.any(x <= 0):
        raise ValidationError("allocation", "equilibrium allocation must be interior")
    d = e.discount
    rho = relative_deviations(share_matrix(e, x))
    I = e.n_agents
    G = gram(rho, rho, d)
    a5 = float(np.abs(G).sum() / I**2)
    t = x[:, 1:] - e.endowment[:, 1:]
    a5p = float(np.sum(gram(t, t, d) * G) / I**2)
    eigs = ssq = gap = None
    if e.all_log:
        eigs, ssq = spectral_statistic(e.taste, d)
        gap = ssq - a5**2
    return DiversificationReport(rho, a5, a5p, t, eigs, ssq, gap)
