"""Truncated dated-commodity exchange economies.

Dates run ``0..N``; date 0 is the numeraire.  Every agent has additively
separable, discounted isoelastic (or log) utility

    U_i(x) = sum_n beta**n * u_in(x_n),   u_in'(x) = taste[n] * x**(-1/sigma)

so that risk tolerance is ``sigma * x`` at every date.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np

from .errors import LengthMismatch, NonPositiveConsumption, ValidationError

Family = Literal["log", "isoelastic"]

# |sigma - 1| below this is treated as the log case when evaluating utility levels
LOG_SIGMA_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DiscountStructure:
    """Common discount factor ``beta`` and horizon ``N``."""

    beta: float
    horizon: int

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ValidationError("beta", f"must lie in (0, 1), got {self.beta}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValidationError("horizon", f"must be an integer >= 1, got {self.horizon}")
        object.__setattr__(self, "horizon", int(self.horizon))

    @cached_property
    def powers(self) -> np.ndarray:
        """``beta**n`` for ``n = 0..N``."""
        return _frozen(self.beta ** np.arange(self.horizon + 1))

    @cached_property
    def n_beta(self) -> float:
        # direct summation stays accurate as beta -> 1, unlike the closed form
        return math.fsum(self.powers[1:])

    @cached_property
    def weights(self) -> np.ndarray:
        """Normalized date weights ``pi_n = beta**n / N_beta`` for ``n = 1..N``."""
        return _frozen(self.powers[1:] / self.n_beta)


def effective_commodity_count(d: DiscountStructure) -> float:
    """Discounted count of future commodities, ``sum_{n=1}^N beta**n``."""
    return d.n_beta


def beta_inner_product(x, y, d: DiscountStructure) -> float:
    """Weighted inner product ``(1/N_beta) sum_n beta**n x_n y_n`` over future dates."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != d.horizon or y.shape[-1] != d.horizon:
        raise LengthMismatch("x/y", f"expected length {d.horizon}, got {x.shape[-1]} and {y.shape[-1]}")
    return float(np.dot(d.weights, x * y))


def beta_norm(x, d: DiscountStructure) -> float:
    return math.sqrt(beta_inner_product(x, x, d))


@dataclass(frozen=True)
class UtilityKernel:
    """Per-date utilities ``u_n(x) = taste[n] * iso(x; sigma)`` for dates ``0..N``."""

    family: Family
    taste: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        if self.family not in ("log", "isoelastic"):
            raise ValidationError("family", f"unknown utility family {self.family!r}")
        if self.family == "log":
            object.__setattr__(self, "sigma", 1.0)
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValidationError("sigma", f"must be positive, got {self.sigma}")
        taste = _frozen(self.taste)
        if taste.ndim != 1 or taste.size < 2:
            raise ValidationError("taste", "must be a vector covering dates 0..N (N >= 1)")
        if not np.all(taste > 0) or not np.all(np.isfinite(taste)):
            raise ValidationError("taste", "every entry must be positive and finite")
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "taste", taste)

    @property
    def horizon(self) -> int:
        return self.taste.size - 1

    def marginal_utility(self, n, x):
        x = _check_positive(x)
        return self.taste[n] * x ** (-1.0 / self.sigma)

    def second_derivative(self, n, x):
        x = _check_positive(x)
        return -self.taste[n] / self.sigma * x ** (-1.0 / self.sigma - 1.0)

    def utility(self, n, x):
        x = _check_positive(x)
        if abs(self.sigma - 1.0) < LOG_SIGMA_TOL:
            return self.taste[n] * np.log(x)
        e = 1.0 - 1.0 / self.sigma
        return self.taste[n] * (x**e - 1.0) / e


def _check_positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise NonPositiveConsumption("x", "consumption must be strictly positive")
    return x


def risk_tolerance(k: UtilityKernel, n: int, x):
    """``u'(x) / -u''(x)``; equals ``sigma * x`` for this utility class."""
    x = _check_positive(x)
    return k.sigma * x


@dataclass(frozen=True)
class AgentSpec:
    kernel: UtilityKernel
    endowment: np.ndarray

    def __post_init__(self):
        w = _frozen(self.endowment)
        if w.shape != self.kernel.taste.shape:
            raise ValidationError(
                "endowment", f"length {w.size} does not match taste length {self.kernel.taste.size}"
            )
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationError("endowment", "entries must be finite and non-negative")
        object.__setattr__(self, "endowment", w)


@dataclass(frozen=True)
class Economy:
    discount: DiscountStructure
    agents: tuple[AgentSpec, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        agents = tuple(self.agents)
        object.__setattr__(self, "agents", agents)
        if not agents:
            raise ValidationError("agents", "economy needs at least one agent")
        N = self.discount.horizon
        for i, a in enumerate(agents):
            if a.kernel.horizon != N:
                raise ValidationError(f"agents[{i}].taste", f"covers horizon {a.kernel.horizon}, economy has {N}")
            if np.dot(self.discount.powers, a.endowment) <= 0:
                raise ValidationError(f"agents[{i}].endowment", "discounted endowment must be positive")
        bad = np.flatnonzero(self.aggregate_endowment <= 0)
        if bad.size:
            raise ValidationError("agents[*].endowment", f"aggregate endowment vanishes at date {int(bad[0])}")

    @property
    def horizon(self) -> int:
        return self.discount.horizon

    @property
    def beta(self) -> float:
        return self.discount.beta

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    # stacked views used by the vectorized demand code
    @cached_property
    def taste(self) -> np.ndarray:
        return _frozen([a.kernel.taste for a in self.agents])

    @cached_property
    def sigma(self) -> np.ndarray:
        return _frozen([a.kernel.sigma for a in self.agents])

    @cached_property
    def endowment(self) -> np.ndarray:
        return _frozen([a.endowment for a in self.agents])

    @cached_property
    def aggregate_endowment(self) -> np.ndarray:
        return _frozen(np.sum([a.endowment for a in self.agents], axis=0))

    @cached_property
    def all_log(self) -> bool:
        return all(a.kernel.family == "log" for a in self.agents)

    # --- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "horizon": self.horizon,
            "agents": [
                {
                    "family": a.kernel.family,
                    "sigma": a.kernel.sigma,
                    "taste": a.kernel.taste.tolist(),
                    "endowment": a.endowment.tolist(),
                }
                for a in self.agents
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "Economy":
        return economy_from_dict(data, name=name)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def make_economy(beta, tastes, endowments, sigma=1.0, family: Family | Sequence[Family] | None = None, name=""):
    """Build an economy from ``(I, N+1)`` taste and endowment arrays.

    ``sigma`` may be a scalar or per-agent vector; ``family`` defaults to
    ``"log"`` where ``sigma == 1`` and ``"isoelastic"`` otherwise.
    """
    tastes = np.atleast_2d(np.asarray(tastes, dtype=float))
    endowments = np.atleast_2d(np.asarray(endowments, dtype=float))
    I, n1 = tastes.shape
    if endowments.shape != tastes.shape:
        raise ValidationError("endowments", f"shape {endowments.shape} does not match tastes {tastes.shape}")
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (I,))
    if family is None:
        fams = ["log" if s == 1.0 else "isoelastic" for s in sig]
    elif isinstance(family, str):
        fams = [family] * I
    else:
        fams = list(family)
    agents = tuple(
        AgentSpec(UtilityKernel(fams[i], tastes[i], float(sig[i])), endowments[i]) for i in range(I)
    )
    return Economy(DiscountStructure(beta, n1 - 1), agents, name=name)


def economy_from_dict(data: dict, name: str = "") -> Economy:
    """Validate and build an economy from its JSON representation."""
    if not isinstance(data, dict):
        raise ValidationError("<root>", "expected a JSON object")
    for key in ("beta", "horizon", "agents"):
        if key not in data:
            raise ValidationError(key, "missing required field")
    beta, horizon = data["beta"], data["horizon"]
    if not isinstance(beta, (int, float)) or isinstance(beta, bool):
        raise ValidationError("beta", "must be a number")
    if not isinstance(horizon, int) or isinstance(horizon, bool):
        raise ValidationError("horizon", "must be an integer")
    d = DiscountStructure(float(beta), horizon)
    if not isinstance(data["agents"], list) or not data["agents"]:
        raise ValidationError("agents", "must be a non-empty list")
    agents = []
    for i, a in enumerate(data["agents"]):
        path = f"agents[{i}]"
        if not isinstance(a, dict):
            raise ValidationError(path, "must be an object")
        family = a.get("family")
        if family not in ("log", "isoelastic"):
            raise ValidationError(f"{path}.family", f"must be 'log' or 'isoelastic', got {family!r}")
        sigma = a.get("sigma", 1.0)
        if not isinstance(sigma, (int, float)) or isinstance(sigma, bool) or not sigma > 0:
            raise ValidationError(f"{path}.sigma", "must be a positive number")
        vecs = {}
        for key in ("taste", "endowment"):
            v = a.get(key)
            if not isinstance(v, list):
                raise ValidationError(f"{path}.{key}", "must be a list of numbers")
            if len(v) != horizon + 1:
                raise ValidationError(f"{path}.{key}", f"expected {horizon + 1} entries, got {len(v)}")
            for j, x in enumerate(v):
                if not isinstance(x, (int, float)) or isinstance(x, bool) or not math.isfinite(x):
                    raise ValidationError(f"{path}.{key}[{j}]", "must be a finite number")
                if key == "taste" and x <= 0:
                    raise ValidationError(f"{path}.{key}[{j}]", "must be positive")
                if key == "endowment" and x < 0:
                    raise ValidationError(f"{path}.{key}[{j}]", "must be non-negative")
            vecs[key] = v
        try:
            agents.append(AgentSpec(UtilityKernel(family, vecs["taste"], float(sigma)), vecs["endowment"]))
        except ValidationError as exc:
            raise ValidationError(f"{path}.{exc.path}", exc.reason) from None
    return Economy(d, tuple(agents), name=name)


def load_economy(path) -> Economy:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError("<file>", f"invalid JSON: {exc}") from None
    return economy_from_dict(data, name=str(path))


# --- assumption audit -------------------------------------------------------


@dataclass(frozen=True)
class AuditThresholds:
    """User constants for the baseline bounds; ``None`` leaves a side unchecked."""

    c_u: float | None = None
    C_u: float | None = None
    c_omega: float | None = None
    C_omega: float | None = None
    c_w: float | None = None
    C_w: float | None = None


@dataclass(frozen=True)
class AssumptionAudit:
    marginal_ratio_bounds: tuple[float, float]
    tolerance_slope_bounds: tuple[float, float]
    per_capita_endowment_bounds: tuple[float, float]
    discounted_endowment_ratios: np.ndarray
    endowment_sup: float
    flags: dict

    def to_dict(self) -> dict:
        return {
            "marginal_ratio_bounds": list(self.marginal_ratio_bounds),
            "tolerance_slope_bounds": list(self.tolerance_slope_bounds),
            "per_capita_endowment_bounds": list(self.per_capita_endowment_bounds),
            "discounted_endowment_ratios": self.discounted_endowment_ratios.tolist(),
            "endowment_sup": self.endowment_sup,
            "flags": dict(self.flags),
        }


def _within(lo, hi, c, C):
    ok = True
    if c is not None:
        ok &= lo >= c
    if C is not None:
        ok &= hi <= C
    return bool(ok)


def audit_assumptions(e: Economy, constants: AuditThresholds | None = None) -> AssumptionAudit:
    """Empirical counterparts of the marginal-utility, endowment and wealth bounds.

    With a common ``sigma`` per agent, ``u_in'(x) / u_i0'(x) = taste[n] / taste[0]``
    for every ``x``, so the bounds are exact.
    """
    t = constants or AuditThresholds()
    ratios = e.taste / e.taste[:, :1]
    mr = (float(ratios.min()), float(ratios.max()))
    ts = (float(e.sigma.min()), float(e.sigma.max()))
    per_cap = e.aggregate_endowment / e.n_agents
    pc = (float(per_cap.min()), float(per_cap.max()))
    d = e.discount
    disc = e.endowment[:, 1:] @ d.powers[1:] / d.n_beta
    sup = float(e.endowment.max())
    flags = {
        "A2": _within(mr[0], mr[1], t.c_u, t.C_u) and _within(ts[0], ts[1], t.c_u, t.C_u),
        "A3": _within(pc[0], pc[1], t.c_omega, t.C_omega),
        "A4": _within(float(disc.min()), sup, t.c_w, t.C_w),
    }
    return AssumptionAudit(mr, ts, pc, _frozen(disc), sup, flags)
