"""Grid sweeps over horizon, discount, population and seed.

Cells are independent and pure, so they may run in a process pool; rows are
always returned in input order.  A failing cell records its error in the
``status`` column instead of aborting the sweep.
"""
from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .analysis import aggregate_jacobian, odd_even_distortion, random_distortion, rate_ratios
from .diversification import diversification_report
from .equilibrium import solve_equilibrium
from .errors import GelabError, ValidationError
from .scenarios import ScenarioSpec, generate
from .stability import stability_verdict, uniqueness_probe

SCHEMA_VERSION = 1
COLUMNS = (
    "family", "N", "beta", "I", "seed", "n_beta", "status",
    "residual_sup", "iterations", "max_sym_eig", "negative_definite", "index", "n_clusters",
    "a5", "a5_prime", "spectral_sum_sq",
    "s_ratio", "s_ratio_min", "m_ratio", "r_ratio", "a_ratio",
    "q_min", "q_max", "wall_time",
)
POLICIES = ("random", "odd-even")


@dataclass(frozen=True)
class SweepCell:
    N: int
    beta: float
    I: int
    seed: int


@dataclass
class SweepGrid:
    """Scenario plus cells.  ``draws`` random distortions per cell; ``starts`` for the uniqueness probe."""

    scenario: ScenarioSpec
    cells: list = field(default_factory=list)
    policy: str = "random"
    draws: int = 64
    starts: int = 20

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValidationError("policy", f"must be one of {POLICIES}, got {self.policy!r}")
        self.cells = [c if isinstance(c, SweepCell) else SweepCell(*c) for c in self.cells]

    @classmethod
    def product(cls, scenario, Ns, betas, Is, seeds, **kw) -> "SweepGrid":
        cells = [SweepCell(N, b, I, s) for s, b, I, N in product(seeds, betas, Is, Ns)]
        return cls(scenario, cells, **kw)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "cells": [[c.N, c.beta, c.I, c.seed] for c in self.cells],
            "policy": self.policy,
            "draws": self.draws,
            "starts": self.starts,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepGrid":
        try:
            return cls(ScenarioSpec.from_dict(data["scenario"]), [tuple(c) for c in data["cells"]],
                       data.get("policy", "random"), int(data.get("draws", 64)), int(data.get("starts", 20)))
        except (KeyError, TypeError) as exc:
            raise ValidationError("manifest", f"malformed sweep manifest: {exc}") from None


def cell_distortions(e, eq, policy, draws, seed):
    if policy == "odd-even":
        return [odd_even_distortion(e, eq)]
    return [random_distortion(e, eq, np.random.default_rng([seed, k])) for k in range(draws)]


def run_cell(grid: SweepGrid, cell: SweepCell) -> dict:
    t0 = time.perf_counter()
    spec = ScenarioSpec(grid.scenario.family, grid.scenario.params, cell.seed)
    row = dict.fromkeys(COLUMNS)
    row.update(family=spec.family.value, N=cell.N, beta=cell.beta, I=cell.I, seed=cell.seed)
    diag = {}
    try:
        e = generate(spec, cell.N, cell.beta, cell.I)
        row["n_beta"] = e.discount.n_beta
        eq = solve_equilibrium(e)
        row.update(residual_sup=eq.residual_sup, iterations=eq.iterations)
        rep = stability_verdict(aggregate_jacobian(e, eq))
        row.update(max_sym_eig=rep.max_sym_eig, negative_definite=rep.negative_definite, index=rep.index)
        if grid.starts >= 2:
            probe = uniqueness_probe(e, grid.starts, seed=cell.seed)
            row["n_clusters"] = len(probe.clusters)
            diag["cluster_counts"] = probe.counts
            diag["probe_failures"] = probe.failures
        div = diversification_report(e, eq)
        row.update(a5=div.a5, a5_prime=div.a5_prime, spectral_sum_sq=div.spectral_sum_sq)
        rates = [rate_ratios(e, eq, u) for u in cell_distortions(e, eq, grid.policy, grid.draws, cell.seed)]
        s = np.array([r.s_ratio for r in rates])
        row.update(
            s_ratio=float(s.mean()),
            s_ratio_min=float(s.min()),
            m_ratio=float(np.mean([r.m_ratio for r in rates])),
            r_ratio=float(np.mean([r.r_ratio for r in rates])),
            a_ratio=rates[0].a_ratio,
        )
        q = eq.price_ratios
        row.update(q_min=float(q.min()), q_max=float(q.max()), status="ok")
    except GelabError as exc:
        row["status"] = f"{type(exc).__name__}: {exc}"
    row["wall_time"] = time.perf_counter() - t0
    return {"row": row, "diagnostics": diag}


def _run_cell_args(args):
    return run_cell(*args)


def worker_count() -> int:
    env = os.environ.get("WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError("WORKERS", f"must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


@dataclass
class SweepResult:
    grid: SweepGrid
    rows: list
    diagnostics: list
    trends: list

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "columns": list(COLUMNS),
            "grid": self.grid.to_dict(),
            "rows": self.rows,
            "diagnostics": self.diagnostics,
            "trends": self.trends,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# gelab sweep schema v{SCHEMA_VERSION}: {','.join(COLUMNS)}\n")
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        for t in self.trends:
            buf.write("# trend " + json.dumps(t) + "\n")
        return buf.getvalue()


def run_sweep(grid: SweepGrid, workers: int | None = None) -> SweepResult:
    """Evaluate every cell of ``grid``; ``workers`` defaults to the ``WORKERS`` environment variable."""
    workers = worker_count() if workers is None else workers
    jobs = [(grid, c) for c in grid.cells]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_run_cell_args, jobs))
    else:
        out = [run_cell(*j) for j in jobs]
    rows = [o["row"] for o in out]
    return SweepResult(grid, rows, [o["diagnostics"] for o in out], trend_summary(rows))


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2 or np.any(y <= 0):
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def trend_summary(rows) -> list:
    """Per (family, beta, I, seed) group, ordered by ``N_beta``: decay slope of ``m_ratio`` and the ``s_ratio`` floor."""
    groups = {}
    for r in rows:
        if r["status"] == "ok":
            groups.setdefault((r["family"], r["beta"], r["I"], r["seed"]), []).append(r)
    out = []
    for (fam, beta, I, seed), rs in groups.items():
        rs = sorted(rs, key=lambda r: r["n_beta"])
        nb = [r["n_beta"] for r in rs]
        m = [r["m_ratio"] for r in rs]
        s = [r["s_ratio"] for r in rs]
        nd = [r["n_beta"] for r in rs if r["negative_definite"]]
        out.append({
            "family": fam, "beta": beta, "I": I, "seed": seed, "cells": len(rs),
            "m_ratio_slope": loglog_slope(nb, m),
            "m_ratio_strictly_decreasing": bool(np.all(np.diff(m) < 0)),
            "s_ratio_first": s[0],
            "s_ratio_min": min(s),
            "a5_first": rs[0]["a5"],
            "a5_last": rs[-1]["a5"],
            "first_negative_definite_n_beta": nd[0] if nd else None,
        })
    return out
