"""Definiteness verdicts, equilibrium index, tatonnement runs and multi-start uniqueness probes."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import aggregate_jacobian
from .economy import Economy
from .equilibrium import (
    CLUSTER_TOL,
    EquilibriumResult,
    SolverOptions,
    excess_demand,
    newton_solve,
    same_equilibrium,
    solve_equilibrium,
    start_points,
)
from .errors import Divergence, JacobianSingular, LengthMismatch, NoConvergence, NumericalError, PriceCollapse
from .ode import StepFloor, dopri5

log = logging.getLogger(__name__)

DEFINITE_TOL = 1e-10  # relative to ||Dz||_2
SINGULAR_COND = 1e13
CONVERGED_TOL = 1e-6  # relative to ||p_bar||_inf
DIVERGED_FACTOR = 1e6
MAX_SAMPLES = 10_000


@dataclass(frozen=True)
class StabilityReport:
    max_sym_eig: float
    negative_definite: bool
    index: int
    det_sign_margin: float
    condition_estimate: float
    status: str  # negative-definite | inconclusive | not-negative-definite
    needs_review: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def stability_verdict(dz) -> StabilityReport:
    """Spectrum of the symmetric part and the index ``sign det(-Dz)``.

    ``det_sign_margin`` is the geometric mean of the singular values of ``Dz``
    over the largest one; it is zero for a singular matrix and one for a
    multiple of an orthogonal matrix.  A condition number above
    ``SINGULAR_COND`` makes the index 0 and sets ``needs_review``.
    """
    dz = np.asarray(dz, dtype=float)
    if dz.ndim != 2 or dz.shape[0] != dz.shape[1]:
        raise LengthMismatch("Dz", f"expected a square matrix, got shape {dz.shape}")
    N = dz.shape[0]
    sv = np.linalg.svd(dz, compute_uv=False)
    norm = float(sv[0])
    lam = float(np.linalg.eigvalsh(0.5 * (dz + dz.T))[-1])
    cond = math.inf if sv[-1] == 0 else float(sv[0] / sv[-1])
    sign, logdet = np.linalg.slogdet(-dz)
    singular = sign == 0 or cond > SINGULAR_COND
    index = 0 if singular else int(sign)
    margin = 0.0 if sv[-1] == 0 else float(np.exp(logdet / N) / norm)
    band = DEFINITE_TOL * norm
    if lam < -band:
        status = "negative-definite"
    elif lam <= band:
        status = "inconclusive"
    else:
        status = "not-negative-definite"
    return StabilityReport(lam, status == "negative-definite", index, margin, cond, status, bool(singular))


def default_t_max(report: StabilityReport) -> float:
    if report.negative_definite:
        return 50.0 / abs(report.max_sym_eig)
    return 1e3


@dataclass
class TatonnementRun:
    times: np.ndarray
    prices: np.ndarray  # (samples, N)
    converged: bool
    final_distance: float
    steps: int
    rejected: int = 0
    t_final: float = 0.0
    t_max: float = 0.0
    status: str = ""
    equilibrium: np.ndarray = field(default=None, repr=False)

    def distances(self) -> np.ndarray:
        """``||p(t) - p_bar||_inf`` at every sample."""
        return np.max(np.abs(self.prices - self.equilibrium), axis=1)

    def to_dict(self, trajectory=False) -> dict:
        out = {
            "converged": self.converged,
            "final_distance": self.final_distance,
            "steps": self.steps,
            "rejected": self.rejected,
            "t_final": self.t_final,
            "t_max": self.t_max,
            "status": self.status,
            "samples": int(self.times.size),
        }
        if trajectory:
            out["times"] = self.times.tolist()
            out["prices"] = self.prices.tolist()
        return out


class _Sampler:
    """Keeps every ``every``-th accepted state, thinning by half whenever the cap is hit."""

    def __init__(self, every, cap):
        self.every, self.cap = max(1, int(every)), cap
        self.count = 0
        self.t, self.p = [], []

    def __call__(self, t, p):
        if self.count % self.every == 0:
            self.t.append(t)
            self.p.append(p.copy())
            if len(self.t) > self.cap:
                self.t, self.p = self.t[::2], self.p[::2]
                self.every *= 2
        self.count += 1

    def finish(self, t, p):
        if not self.t or self.t[-1] != t:
            self.t.append(t)
            self.p.append(p.copy())
        return np.array(self.t), np.array(self.p)


def tatonnement_simulate(e: Economy, p0, equilibrium: EquilibriumResult | None = None, t_max=None,
                         rtol=1e-8, atol=1e-12, sample_every=1, early_stop=True,
                         max_samples=MAX_SAMPLES) -> TatonnementRun:
    """Integrate ``p' = z(p)`` from ``p0`` and measure the distance to the Newton equilibrium.

    ``t_max`` defaults to ``50 / |max_sym_eig|`` when ``Dz`` is negative
    definite and to ``1e3`` otherwise.  With ``early_stop`` the run ends once
    the distance falls below 1% of the convergence threshold.
    """
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (e.horizon,):
        raise LengthMismatch("p0", f"expected {e.horizon} prices, got shape {p0.shape}")
    if not np.all(p0 > 0):
        raise PriceCollapse("initial prices must be positive")
    eq = equilibrium if equilibrium is not None else solve_equilibrium(e)
    pbar = np.asarray(eq.prices)
    if t_max is None:
        t_max = default_t_max(stability_verdict(aggregate_jacobian(e, eq)))
    thresh = CONVERGED_TOL * np.max(np.abs(pbar))
    bound = DIVERGED_FACTOR * np.max(np.abs(p0))
    sampler = _Sampler(sample_every, max_samples)

    def rhs(t, p):
        return excess_demand(e, p)[0]

    def admissible(p):
        return bool(np.all(p > 0) and np.all(np.isfinite(p)))

    def watch(t, p):
        sampler(t, p)
        if np.max(np.abs(p)) > bound:
            raise _Diverged(t, p)

    def stop(t, p):
        return early_stop and np.max(np.abs(p - pbar)) <= 0.01 * thresh

    def partial(t, p, status):
        times, prices = sampler.finish(t, p)
        dist = float(np.max(np.abs(p - pbar)))
        return TatonnementRun(times, prices, False, dist, sampler.count, 0, t, t_max, status, pbar)

    try:
        sol, t, p = dopri5(rhs, (0.0, t_max), p0, rtol, atol, admissible, stop, watch)
    except StepFloor as exc:
        p_last = sampler.p[-1] if sampler.p else p0
        run = partial(exc.t, p_last, "price-collapse" if exc.reason == "inadmissible stage" else "step-floor")
        if exc.reason == "inadmissible stage":
            raise PriceCollapse(f"prices left the positive orthant: {exc}", run) from None
        raise NumericalError(f"tatonnement integration failed: {exc}") from None
    except _Diverged as exc:
        raise Divergence(f"||p|| exceeded {DIVERGED_FACTOR:g} x ||p0|| at t={exc.t:.6g}",
                         partial(exc.t, exc.p, "diverged")) from None
    times, prices = sampler.finish(t, p)
    dist = float(np.max(np.abs(p - pbar)))
    return TatonnementRun(times, prices, bool(dist <= thresh), dist, sol.steps, sol.rejected, t, float(t_max),
                          sol.status, pbar)


class _Diverged(Exception):
    def __init__(self, t, p):
        self.t, self.p = t, p.copy()


def perturbed_start(pbar, scale, rng: np.random.Generator) -> np.ndarray:
    """``p_bar * (1 + scale * xi)`` with ``xi`` uniform on ``[-1, 1]``."""
    pbar = np.asarray(pbar, dtype=float)
    return pbar * (1.0 + scale * rng.uniform(-1.0, 1.0, size=pbar.size))


@dataclass
class ProbeResult:
    clusters: list
    counts: list
    failures: list

    @property
    def agreement(self) -> bool:
        return len(self.clusters) == 1

    def to_dict(self) -> dict:
        return {
            "agreement": self.agreement,
            "n_clusters": len(self.clusters),
            "counts": self.counts,
            "failures": self.failures,
            "clusters": [c.prices.tolist() for c in self.clusters],
        }


def uniqueness_probe(e: Economy, starts=20, seed=0, opts: SolverOptions | None = None,
                     tol=CLUSTER_TOL) -> ProbeResult:
    """Solve from ``starts`` seeded points and group the solutions by log-price distance ``tol``."""
    if starts < 2:
        raise ValueError("uniqueness probe needs at least two starts")
    opts = opts or SolverOptions()
    clusters, counts, failures = [], [], []
    for k, p0 in enumerate(start_points(e, starts, seed)):
        try:
            r = newton_solve(e, p0, opts.tol, opts.max_iter, opts.fallback_step, opts.stall_limit)
        except (NoConvergence, JacobianSingular) as exc:
            failures.append(f"start {k}: {exc}")
            continue
        for j, c in enumerate(clusters):
            if same_equilibrium(c.prices, r.prices, tol):
                counts[j] += 1
                break
        else:
            clusters.append(r)
            counts.append(1)
    return ProbeResult(clusters, counts, failures)
