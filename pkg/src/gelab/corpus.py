"""Desk-scale economies shared by the acceptance checks and the demos."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .economy import Economy, make_economy
from .scenarios import Family, ScenarioSpec, generate


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    economy: Economy
    spec: ScenarioSpec | None = None


def random_economy(seed: int, N: int, I: int, beta=0.9, mixed=True) -> Economy:
    """Heterogeneous economy with log-normal tastes and uniform endowments.

    With ``mixed`` the curvatures ``sigma_i`` are drawn from ``[0.3, 2]`` and
    every other agent is log; otherwise all agents are log.
    """
    rng = np.random.default_rng(seed)
    taste = np.exp(0.4 * rng.standard_normal((I, N + 1)))
    omega = rng.uniform(0.5, 1.5, size=(I, N + 1))
    if not mixed:
        return make_economy(beta, taste, omega, family="log", name=f"random(seed={seed}, N={N}, I={I})")
    sigma = rng.uniform(0.3, 2.0, size=I)
    sigma[::2] = 1.0
    return make_economy(beta, taste, omega, sigma=sigma, name=f"random-mixed(seed={seed}, N={N}, I={I})")


# (N, beta, I) shapes; I = 8 and 12 suit every family (two-type needs even, isoelastic multiples of 4)
SHAPES = ((8, 0.9, 8), (20, 0.95, 12), (40, 0.95, 12))


def desk_corpus(seed=0) -> list[CorpusEntry]:
    """Every scenario family at three desk-scale shapes plus four random economies."""
    out = []
    for fam in Family:
        for N, beta, I in SHAPES:
            spec = ScenarioSpec(fam, {}, seed)
            e = generate(spec, N, beta, I)
            out.append(CorpusEntry(f"{fam.value}-N{N}-b{beta}-I{I}", e, spec))
    for k, (N, I, mixed) in enumerate(((6, 3, True), (12, 6, True), (10, 5, False), (25, 7, True))):
        out.append(CorpusEntry(f"random-{k}", random_economy(seed + 100 + k, N, I, mixed=mixed)))
    return out
