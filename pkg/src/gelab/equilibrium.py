"""Excess demand, Newton equilibrium solver and the closed-form isoelastic equilibrium."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .analysis import _Point
from .demand import economy_demand
from .economy import DiscountStructure, Economy, make_economy
from .errors import ConstraintViolation, JacobianSingular, NoConvergence

log = logging.getLogger(__name__)

# two price vectors are the same equilibrium if their log-prices differ by less than this
CLUSTER_TOL = 1e-6


@dataclass(frozen=True)
class EquilibriumResult:
    prices: np.ndarray
    allocation: np.ndarray
    shadow_values: np.ndarray
    residual_sup: float
    price_ratios: np.ndarray
    iterations: int = 0
    starts_used: int = 1
    walras_max: float = 0.0

    def to_dict(self) -> dict:
        return {
            "prices": self.prices.tolist(),
            "allocation": self.allocation.tolist(),
            "shadow_values": self.shadow_values.tolist(),
            "residual_sup": self.residual_sup,
            "price_ratios": self.price_ratios.tolist(),
            "iterations": self.iterations,
            "starts_used": self.starts_used,
            "walras_max": self.walras_max,
        }


def excess_demand(e: Economy, p):
    """Future excess demand ``z`` (length N) and date-0 excess demand ``z0``."""
    x, _, _ = economy_demand(e, p)
    z = x.sum(axis=0) - e.aggregate_endowment
    return z[1:], float(z[0])


def walras_gap(e: Economy, p) -> float:
    """``|z0 + p . z|``, zero up to rounding at every price vector."""
    z, z0 = excess_demand(e, p)
    return abs(z0 + float(np.dot(p, z)))


def _result(e: Economy, p, iterations=0, starts_used=1, walras_max=0.0) -> EquilibriumResult:
    x, lam, _ = economy_demand(e, p)
    z = x[:, 1:].sum(axis=0) - e.aggregate_endowment[1:]
    p = np.array(p, dtype=float)
    return EquilibriumResult(
        prices=p,
        allocation=x,
        shadow_values=lam,
        residual_sup=float(np.max(np.abs(z))),
        price_ratios=p / e.discount.powers[1:],
        iterations=iterations,
        starts_used=starts_used,
        walras_max=walras_max,
    )


@dataclass
class SolverOptions:
    tol: float | None = None  # default 1e-10 * I
    max_iter: int = 100
    starts: int = 1
    seed: int = 0
    fallback_step: float = 0.5
    stall_limit: int = 20


def start_points(e: Economy, starts: int, seed: int) -> list[np.ndarray]:
    """``beta**n`` followed by ``starts - 1`` seeded log-normal perturbations of it."""
    base = np.array(e.discount.powers[1:])
    rng = np.random.default_rng(seed)
    pts = [base]
    for _ in range(starts - 1):
        pts.append(base * np.exp(0.5 * rng.standard_normal(e.horizon)))
    return pts


def newton_solve(e: Economy, p_start, tol=None, max_iter=100, fallback_step=0.5, stall_limit=20) -> EquilibriumResult:
    """Damped Newton iteration on log-prices from a single start.

    Steps are halved until ``||z||_2`` decreases.  A singular Jacobian triggers a
    damped tatonnement step ``log p += h * z / (I * Omega)`` instead.
    """
    tol = 1e-10 * e.n_agents if tol is None else tol
    y = np.log(np.asarray(p_start, dtype=float))
    omega = e.aggregate_endowment
    walras = 0.0

    def evaluate(y):
        p = np.exp(y)
        x, _, _ = economy_demand(e, p)
        zfull = x.sum(axis=0) - omega
        return p, x, zfull[1:], zfull[0]

    p, x, z, z0 = evaluate(y)
    walras = max(walras, abs(z0 + p @ z))
    best = np.max(np.abs(z))
    stalls = 0
    for it in range(max_iter + 1):
        res = np.max(np.abs(z))
        best = min(best, res)
        if res <= tol:
            p = _polish(e, p, x, z)
            return _result(e, p, iterations=it, walras_max=walras)
        if it == max_iter:
            break
        norm0 = np.linalg.norm(z)
        try:
            dz = _Point(e, p, x).jacobian()
            jy = dz.T * p[None, :]  # d z_n / d log p_m
            step = np.linalg.solve(jy, -z)
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError("non-finite Newton step")
        except np.linalg.LinAlgError:
            log.debug("singular Jacobian at iteration %d; tatonnement fallback", it)
            step = fallback_step * z / omega[1:]
            stalls += 1
            if stalls > stall_limit:
                raise JacobianSingular(f"fallback stalled after {stalls} singular steps (residual {res:.3e})")
        # cap the step so that no price moves by more than a factor e**2
        big = np.max(np.abs(step))
        if big > 2.0:
            step *= 2.0 / big
        t = 1.0
        while True:
            y_new = y + t * step
            try:
                p_new, x_new, z_new, z0_new = evaluate(y_new)
                ok = np.all(np.isfinite(z_new)) and np.linalg.norm(z_new) < norm0
            except (ValueError, FloatingPointError):
                ok = False
            if ok:
                break
            t *= 0.5
            if t < 1e-10:
                raise NoConvergence(best, it, "line search failed")
        y, p, x, z, z0 = y_new, p_new, x_new, z_new, z0_new
        walras = max(walras, abs(z0 + p @ z))
    raise NoConvergence(best, max_iter)


def _polish(e, p, x, z):
    """One extra full Newton step, kept only if it lowers the residual."""
    try:
        jy = _Point(e, p, x).jacobian().T * p[None, :]
        p_new = p * np.exp(np.linalg.solve(jy, -z))
        z_new, _ = excess_demand(e, p_new)
    except (np.linalg.LinAlgError, ValueError):
        return p
    return p_new if np.max(np.abs(z_new)) < np.max(np.abs(z)) else p


def solve_equilibrium(e: Economy, opts: SolverOptions | None = None, **kw) -> EquilibriumResult:
    """Solve ``z(p) = 0`` trying each start in order; the first converged one is returned."""
    opts = opts or SolverOptions(**kw)
    best_err = None
    for k, p0 in enumerate(start_points(e, opts.starts, opts.seed), start=1):
        try:
            r = newton_solve(e, p0, opts.tol, opts.max_iter, opts.fallback_step, opts.stall_limit)
        except (NoConvergence, JacobianSingular) as exc:
            log.info("start %d failed: %s", k, exc)
            best_err = exc
            continue
        return EquilibriumResult(**{**r.__dict__, "starts_used": k})
    if isinstance(best_err, NoConvergence):
        raise best_err
    raise NoConvergence(float("nan"), opts.max_iter, f"no start converged ({best_err})")


def same_equilibrium(p, q, tol=CLUSTER_TOL) -> bool:
    return bool(np.max(np.abs(np.log(p) - np.log(q))) < tol)


# --- closed-form isoelastic example -----------------------------------------


@dataclass(frozen=True)
class IsoelasticParams:
    """Parameters of the isoelastic example with balanced taste shocks.

    ``u_i0(x) = iso(x)``, ``u_in(x) = (1 + delta eps_in)**(1/sigma) iso(x)``,
    endowments ``omega_in = omega_bar + eta_i s_n``.
    """

    beta: float
    sigma: float
    delta: float
    omega_bar: float
    s: np.ndarray  # (N+1,)
    eps: np.ndarray  # (I, N)
    eta: np.ndarray  # (I,)
    name: str = field(default="isoelastic-example", compare=False)

    @property
    def horizon(self) -> int:
        return self.eps.shape[1]

    def tastes(self) -> np.ndarray:
        I = self.eps.shape[0]
        fut = (1.0 + self.delta * self.eps) ** (1.0 / self.sigma)
        return np.hstack([np.ones((I, 1)), fut])

    def endowments(self) -> np.ndarray:
        return self.omega_bar + np.outer(self.eta, self.s)

    def economy(self) -> Economy:
        return make_economy(self.beta, self.tastes(), self.endowments(), sigma=self.sigma, name=self.name)

    def balance_residuals(self) -> dict:
        d = DiscountStructure(self.beta, self.horizon)
        return {
            "sum_n beta^n eps_in": float(np.max(np.abs(self.eps @ d.powers[1:]))),
            "sum_i eps_in": float(np.max(np.abs(self.eps.sum(axis=0)))),
            "sum_i eta_i": float(abs(self.eta.sum())),
            "sum_i eta_i eps_in": float(np.max(np.abs(self.eta @ self.eps))),
        }


def isoelastic_example_oracle(params: IsoelasticParams, tol=1e-12) -> EquilibriumResult:
    """Closed-form equilibrium ``p_n = beta**n`` of the isoelastic example.

    Raises :class:`ConstraintViolation` if a balance condition fails by more than ``tol``.
    """
    for cond, mag in params.balance_residuals().items():
        if mag > tol:
            raise ConstraintViolation(cond, mag)
    d = DiscountStructure(params.beta, params.horizon)
    mu = params.omega_bar + params.eta * discounted_s(params)
    x = mu[:, None] * np.hstack([np.ones((mu.size, 1)), 1.0 + params.delta * params.eps])
    p = np.array(d.powers[1:])
    return EquilibriumResult(
        prices=p,
        allocation=x,
        shadow_values=mu ** (-1.0 / params.sigma),
        residual_sup=0.0,
        price_ratios=np.ones_like(p),
    )


def discounted_s(params: IsoelasticParams) -> float:
    """``(s_0 + sum_n beta**n s_n) / (1 + N_beta)``."""
    d = DiscountStructure(params.beta, params.horizon)
    return float((params.s[0] + params.s[1:] @ d.powers[1:]) / (1.0 + d.n_beta))
