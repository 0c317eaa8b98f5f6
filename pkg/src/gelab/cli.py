"""Command-line front end: ``gelab <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

import numpy as np

from . import __version__
from .analysis import aggregate_jacobian, equilibrium_bands, fd_jacobian, quadratic_terms, substitution_graph_form
from .diversification import diversification_report
from .economy import load_economy
from .equilibrium import SolverOptions, solve_equilibrium
from .errors import GelabError, NumericalError, ValidationError
from .scenarios import Family, ScenarioSpec, generate, verify_constraints
from .stability import perturbed_start, stability_verdict, tatonnement_simulate, uniqueness_probe
from .sweep import SweepGrid, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _common(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0, help="RNG seed")
    p.add_argument("--tol", type=float, default=d, help="solver tolerance on sup |z| (default 1e-10 * I)")
    p.add_argument("--out", default=d, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS if suppress else "json")


def _param(text):
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gelab", description="Equilibrium laboratory for dated-commodity exchange economies.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    _common(ap, suppress=False)
    sub = ap.add_subparsers(dest="cmd", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _common(common, suppress=True)

    def cmd(name, help_, economy=True):
        p = sub.add_parser(name, help=help_, parents=[common])
        if economy:
            p.add_argument("economy", help="economy JSON file (see `gelab scenario gen`)")
        return p

    cmd("solve", "solve for the equilibrium price vector").add_argument("--starts", type=int, default=1)
    p = cmd("jacobian", "analytic excess-demand Jacobian at the equilibrium")
    p.add_argument("--fd-check", action="store_true", help="compare against central finite differences")
    p = cmd("decompose", "four-term decomposition of q' Dz q for seeded perturbations")
    p.add_argument("--draws", type=int, default=5)
    p = cmd("stability", "definiteness verdict, index and multi-start uniqueness probe")
    p.add_argument("--starts", type=int, default=20)
    p = cmd("tatonnement", "simulate p' = z(p) from a perturbed equilibrium (csv: trajectory)")
    p.add_argument("--perturb", type=float, default=0.05, help="relative size of the uniform start perturbation")
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--sample-every", type=int, default=1)
    cmd("diversify", "alignment statistics and spectral bound")

    sc = sub.add_parser("scenario", help="scenario generators")
    scs = sc.add_subparsers(dest="scmd", required=True)
    g = scs.add_parser("gen", help="write an economy JSON for a scenario family", parents=[common])
    g.add_argument("family", help=f"one of {[f.value for f in Family]}")
    g.add_argument("--N", type=int, required=True, help="horizon")
    g.add_argument("--beta", type=float, required=True)
    g.add_argument("--agents", type=int, required=True)
    g.add_argument("--param", type=_param, action="append", default=[], help="family parameter key=value")

    s = sub.add_parser("sweep", help="run a grid sweep (csv or json)", parents=[common])
    s.add_argument("--manifest", help="sweep manifest JSON; overrides the grid flags")
    s.add_argument("--family")
    s.add_argument("--N", type=int, nargs="+", default=[20, 40, 80, 160])
    s.add_argument("--beta", type=float, nargs="+", default=[0.95])
    s.add_argument("--agents", type=int, nargs="+", default=[12])
    s.add_argument("--seeds", type=int, nargs="+", default=[0])
    s.add_argument("--param", type=_param, action="append", default=[])
    s.add_argument("--policy", choices=("random", "odd-even"), default="random")
    s.add_argument("--draws", type=int, default=64)
    s.add_argument("--starts", type=int, default=20)
    s.add_argument("--workers", type=int, default=None, help="process count (default: WORKERS env or CPU count)")
    return ap


def _solve(e, args, starts=1):
    return solve_equilibrium(e, SolverOptions(tol=args.tol, starts=starts, seed=args.seed))


def _solve_report(e, args):
    eq = _solve(e, args, args.starts)
    out = eq.to_dict()
    out["bands"] = equilibrium_bands(e, eq)
    return out


def _jacobian_report(e, args):
    eq = _solve(e, args)
    dz = aggregate_jacobian(e, eq)
    out = {"convention": "Dz[m][n] = dz_n/dp_m", "jacobian": dz.tolist()}
    if args.fd_check:
        fd = fd_jacobian(e, eq.prices)
        out["fd_rel_error"] = float(np.max(np.abs(fd - dz)) / np.max(np.abs(dz)))
    return out


def _decompose_report(e, args):
    eq = _solve(e, args)
    rng = np.random.default_rng(args.seed)
    rows = []
    for _ in range(args.draws):
        q = eq.prices * rng.standard_normal(e.horizon)
        t = quadratic_terms(e, eq, q)
        s_graph, _ = substitution_graph_form(e, eq, t.u)
        rows.append({
            "alpha": t.alpha, "A": t.A, "S": t.S_of_u, "S_graph": s_graph, "R": t.R_of_u, "M": t.M_of_u,
            "qform": t.qform, "identity_residual": t.identity_residual,
        })
    return {"psi_pbar": t.psi_pbar, "draws": rows}


def _stability_report(e, args):
    eq = _solve(e, args)
    out = stability_verdict(aggregate_jacobian(e, eq)).to_dict()
    if args.starts >= 2:
        out["uniqueness"] = uniqueness_probe(e, args.starts, args.seed).to_dict()
    return out


def _tatonnement(e, args):
    eq = _solve(e, args)
    p0 = perturbed_start(eq.prices, args.perturb, np.random.default_rng(args.seed))
    return tatonnement_simulate(e, p0, eq, t_max=args.t_max, rtol=args.rtol, atol=args.atol,
                                sample_every=args.sample_every)


def _diversify_report(e, args):
    return diversification_report(e, _solve(e, args)).to_dict()


def _scenario_gen(args):
    spec = ScenarioSpec(args.family, dict(args.param), args.seed)
    e = generate(spec, args.N, args.beta, args.agents)
    out = e.to_dict()
    out["scenario"] = spec.to_dict()
    out["constraints"] = verify_constraints(e, spec).to_dict()
    return out


def _sweep(args):
    if args.manifest:
        with open(args.manifest) as fh:
            grid = SweepGrid.from_dict(json.load(fh))
    else:
        if not args.family:
            raise ValidationError("--family", "required unless --manifest is given")
        spec = ScenarioSpec(args.family, dict(args.param), 0)
        grid = SweepGrid.product(spec, args.N, args.beta, args.agents, args.seeds,
                                 policy=args.policy, draws=args.draws, starts=args.starts)
    return run_sweep(grid, args.workers)


def _rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _flat_csv(report: dict) -> str:
    """Scalar fields of a report as ``key,value`` lines; nested arrays are left to the JSON output."""
    return _rows_csv([("key", "value")] + [(k, v) for k, v in report.items() if not isinstance(v, (list, dict))])


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def run(args) -> int:
    if args.cmd == "sweep":
        res = _sweep(args)
        _emit(res.to_csv() if args.format == "csv" else res.to_json(), args.out)
        return EXIT_OK
    if args.cmd == "scenario":
        _emit(json.dumps(_scenario_gen(args), indent=1), args.out)
        return EXIT_OK
    e = load_economy(args.economy)
    if args.cmd == "tatonnement":
        run_ = _tatonnement(e, args)
        if args.format == "csv":
            head = ["t"] + [f"p_{n}" for n in range(1, e.horizon + 1)]
            rows = [[repr(float(t))] + [repr(float(x)) for x in p] for t, p in zip(run_.times, run_.prices)]
            _emit(_rows_csv([head] + rows), args.out)
        else:
            _emit(json.dumps(run_.to_dict(), indent=1), args.out)
        return EXIT_OK
    report = {
        "solve": _solve_report,
        "jacobian": _jacobian_report,
        "decompose": _decompose_report,
        "stability": _stability_report,
        "diversify": _diversify_report,
    }[args.cmd](e, args)
    if args.cmd == "decompose" and args.format == "csv":
        rows = report["draws"]
        _emit(_rows_csv([list(rows[0])] + [[repr(float(v)) for v in r.values()] for r in rows]), args.out)
    elif args.format == "csv":
        _emit(_flat_csv(report), args.out)
    else:
        _emit(json.dumps(report, indent=1), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ValidationError as exc:
        print(f"gelab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, GelabError) as exc:
        print(f"gelab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"gelab: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
