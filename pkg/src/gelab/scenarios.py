"""Deterministic generators for the five scenario families.

Seeded patterns are drawn date-major (``rng.random((N, I))``), so the first
``N'`` dates of a size-``N`` economy reuse the draws of a size-``N'`` economy
with the same seed.  Sweeps over ``N`` thus compare like with like.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .analysis import odd_even_pattern
from .economy import DiscountStructure, Economy, make_economy
from .equilibrium import IsoelasticParams
from .errors import BoundViolation, InfeasibleConstraints, ValidationError

# keep 1 + delta * eps at least this far from zero
SHOCK_FLOOR = 0.05
BALANCE_TOL = 1e-12


class Family(str, enum.Enum):
    IDENTICAL = "identical"
    SPARSE = "sparse"
    DISPERSED = "dispersed"
    TWO_TYPE = "two-type"
    ISOELASTIC = "isoelastic"

    @classmethod
    def parse(cls, name) -> "Family":
        if isinstance(name, cls):
            return name
        aliases = {
            "identicalbenchmark": cls.IDENTICAL,
            "sparsetastes": cls.SPARSE,
            "dispersedheterogeneity": cls.DISPERSED,
            "twotypecounterexample": cls.TWO_TYPE,
            "twotype": cls.TWO_TYPE,
            "isoelasticexample": cls.ISOELASTIC,
        }
        key = str(name).strip()
        try:
            return cls(key)
        except ValueError:
            pass
        try:
            return aliases[key.lower().replace("-", "").replace("_", "")]
        except KeyError:
            raise ValidationError("family", f"unknown scenario family {name!r}") from None


DEFAULTS = {
    Family.IDENTICAL: {"sigma": 1.0, "taste": 1.0, "omega_bar": 1.0},
    Family.SPARSE: {"delta": 0.5, "width": 4, "mass": 0.5, "omega_bar": 1.0},
    Family.DISPERSED: {"delta": 0.4, "omega_bar": 1.0},
    Family.TWO_TYPE: {"delta": 0.5, "omega_bar": 1.0},
    Family.ISOELASTIC: {"sigma": 0.2, "delta": 0.3, "omega_bar": 1.0, "s_profile": "blocks", "s_lo": 0.2, "s_hi": 0.6},
}


@dataclass(frozen=True)
class ScenarioSpec:
    family: Family
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        fam = Family.parse(self.family)
        object.__setattr__(self, "family", fam)
        unknown = set(self.params) - set(DEFAULTS[fam])
        if unknown:
            raise ValidationError("params", f"unknown parameters for {fam.value}: {sorted(unknown)}")

    def get(self, key):
        return self.params.get(key, DEFAULTS[self.family][key])

    def to_dict(self) -> dict:
        return {"family": self.family.value, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        return cls(data["family"], dict(data.get("params", {})), int(data.get("seed", 0)))


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise BoundViolation("params.delta", f"must lie in (0, 1), got {delta}")


def _floor_shocks(eps, delta):
    """Shrink ``eps`` (preserving all linear balance conditions) so that ``1 + delta eps >= SHOCK_FLOOR``."""
    lo = float(eps.min()) if eps.size else 0.0
    if 1.0 + delta * lo < SHOCK_FLOOR:
        eps = eps * ((SHOCK_FLOOR - 1.0) / (delta * lo))
    if eps.size and 1.0 + delta * eps.min() < SHOCK_FLOOR * (1 - 1e-12):
        raise BoundViolation("eps", "cannot keep 1 + delta*eps above the floor")
    return eps


def _sign_pattern(rng, N, I):
    return np.where(rng.random((N, I)) < 0.5, -1.0, 1.0).T


def dispersed_shocks(N, beta, I, seed):
    """Shocks with ``sum_n beta**n eps_in = 0`` for each agent and ``sum_i eps_in = 0`` for each date."""
    d = DiscountStructure(beta, N)
    b = _sign_pattern(np.random.default_rng(seed), N, I)
    eps = b - b.mean(axis=0, keepdims=True)
    # row constants sum to zero over agents, so column balance survives this step
    eps = eps - (eps @ d.powers[1:] / d.n_beta)[:, None]
    return eps


def isoelastic_params(spec: ScenarioSpec, N, beta, I) -> IsoelasticParams:
    """Paired construction: agents come in quadruples ``(+1, e), (-1, e), (+1, -e), (-1, -e)``."""
    if I % 4:
        raise InfeasibleConstraints("I", f"isoelastic example needs a multiple of 4 agents, got {I}")
    delta = spec.get("delta")
    _check_delta(delta)
    d = DiscountStructure(beta, N)
    base = _sign_pattern(np.random.default_rng(spec.seed), N, I // 4)
    base = base - (base @ d.powers[1:] / d.n_beta)[:, None]
    eps = np.repeat(base, 4, axis=0) * np.tile([1.0, 1.0, -1.0, -1.0], I // 4)[:, None]
    eta = np.tile([1.0, -1.0, 1.0, -1.0], I // 4)
    eps = _floor_shocks(eps, delta)

    omega_bar, lo, hi = spec.get("omega_bar"), spec.get("s_lo"), spec.get("s_hi")
    if not 0.0 < lo <= hi < omega_bar:
        raise ValidationError("params.s_lo/s_hi", "need 0 < s_lo <= s_hi < omega_bar")
    n = np.arange(N + 1)
    profile = spec.get("s_profile")
    if profile == "constant":
        s = np.full(N + 1, hi)
    elif profile == "blocks":
        # dyadic blocks alternate between the two levels
        s = np.where(np.floor(np.log2(n + 1)) % 2 == 0, hi, lo)
    else:
        raise ValidationError("params.s_profile", f"unknown profile {profile!r}")
    return IsoelasticParams(beta, spec.get("sigma"), delta, omega_bar, s, eps, eta)


def generate(spec: ScenarioSpec, N: int, beta: float, I: int) -> Economy:
    """Economy of the given family at horizon ``N``, discount ``beta`` and ``I`` agents."""
    if I < 1:
        raise ValidationError("I", "need at least one agent")
    d = DiscountStructure(beta, N)
    nb = d.n_beta
    fam = spec.family
    name = f"{fam.value}(N={N}, beta={beta}, I={I}, seed={spec.seed})"
    omega = np.full((I, N + 1), float(spec.get("omega_bar")))

    if fam is Family.IDENTICAL:
        taste = np.full((I, N + 1), float(spec.get("taste")))
        return make_economy(beta, taste, omega, sigma=spec.get("sigma"), name=name)

    if fam is Family.ISOELASTIC:
        p = isoelastic_params(spec, N, beta, I)
        return make_economy(beta, p.tastes(), p.endowments(), sigma=p.sigma, name=name)

    delta = spec.get("delta")
    _check_delta(delta)

    if fam is Family.DISPERSED:
        eps = _floor_shocks(dispersed_shocks(N, beta, I, spec.seed), delta)
        taste = np.hstack([np.ones((I, 1)), 1.0 + delta * eps]) / nb
        return make_economy(beta, taste, omega, family="log", name=name)

    if fam is Family.TWO_TYPE:
        if I % 2:
            raise InfeasibleConstraints("I", f"two-type economy needs an even number of agents, got {I}")
        e_n = odd_even_pattern(N)
        sign = np.repeat([1.0, -1.0], I // 2)
        taste = np.hstack([np.ones((I, 1)), 1.0 + delta * sign[:, None] * e_n[None, :]])
        return make_economy(beta, taste, omega, family="log", name=name)

    if fam is Family.SPARSE:
        width = int(min(spec.get("width"), N))
        mass = float(spec.get("mass"))
        rng = np.random.default_rng(spec.seed)
        slots = rng.permutation(I)
        amp = rng.uniform(0.5, 1.0, size=I)
        n_starts = N - width + 1
        taste = np.ones((I, N + 1))
        for i in range(I):
            start = 1 + int((slots[i] + 0.5) * n_starts / I)
            block = slice(start, start + width)
            dev = delta * amp[i]
            m_i = dev * d.powers[block].sum() / nb
            if m_i > mass:
                dev *= mass / m_i
            taste[i, block] += dev
        return make_economy(beta, taste / nb, omega, family="log", name=name)

    raise AssertionError(fam)


# --- constraint verification ------------------------------------------------


@dataclass(frozen=True)
class ConstraintReport:
    residuals: dict
    passed: bool
    violated: tuple

    def to_dict(self) -> dict:
        return {"residuals": self.residuals, "passed": self.passed, "violated": list(self.violated)}


def _report(res: dict, tol=BALANCE_TOL) -> ConstraintReport:
    bad = tuple(k for k, v in res.items() if not v <= tol)
    return ConstraintReport(res, not bad, bad)


def verify_constraints(e: Economy, spec: ScenarioSpec) -> ConstraintReport:
    """Sup residual of every balance condition the family imposes, recovered from the economy itself."""
    fam = spec.family
    d = e.discount
    pw = d.powers[1:]
    if fam is Family.IDENTICAL:
        spread = float(np.ptp(e.taste, axis=0).max() + np.ptp(e.endowment, axis=0).max())
        return _report({"agents identical": spread})
    if fam is Family.DISPERSED:
        eps = (e.taste[:, 1:] / e.taste[:, :1] - 1.0) / spec.get("delta")
        return _report({
            "sum_n beta^n eps_in": float(np.max(np.abs(eps @ pw))),
            "sum_i eps_in": float(np.max(np.abs(eps.sum(axis=0)))),
        })
    if fam is Family.TWO_TYPE:
        half = e.n_agents // 2
        a, b = e.taste[:half], e.taste[half:]
        return _report({
            "equal halves": float(abs(e.n_agents - 2 * half)),
            "mirror tastes": float(np.max(np.abs(a[:, 1:] + b[:, 1:] - 2.0 * a[:, :1]))) if half else 0.0,
        })
    if fam is Family.SPARSE:
        dev = e.taste[:, 1:] / e.taste[:, :1] - 1.0
        mass = dev @ pw / d.n_beta
        return _report({"mass excess": float(max(0.0, np.max(mass - spec.get("mass"))))})
    if fam is Family.ISOELASTIC:
        sigma, delta, ob = spec.get("sigma"), spec.get("delta"), spec.get("omega_bar")
        eps = (e.taste[:, 1:] ** sigma - 1.0) / delta
        s0 = np.max(np.abs(e.endowment[:, 0] - ob))
        eta = (e.endowment[:, 0] - ob) / s0 if s0 > 0 else np.zeros(e.n_agents)
        return _report({
            "sum_n beta^n eps_in": float(np.max(np.abs(eps @ pw))),
            "sum_i eps_in": float(np.max(np.abs(eps.sum(axis=0)))),
            "sum_i eta_i": float(abs(eta.sum())),
            "sum_i eta_i eps_in": float(np.max(np.abs(eta @ eps))),
        })
    raise AssertionError(fam)
