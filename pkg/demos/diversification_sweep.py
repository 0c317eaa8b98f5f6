"""How substitution and income effects scale with the effective horizon.

For economies whose taste deviations are spread out over dates, the income
term M of the quadratic form shrinks relative to the substitution term S as
N_beta grows.  In the two-type economy every agent's deviation is the same
alternating pattern, and the income term keeps pace with substitution.

Run:  python3 demos/diversification_sweep.py            (about ten seconds)
"""
from gelab import ScenarioSpec, SweepGrid, run_sweep

HORIZONS = (20, 40, 80, 160)


def table(family, policy):
    grid = SweepGrid.product(ScenarioSpec(family, {}, 0), HORIZONS, [0.95], [12], [0],
                             policy=policy, draws=64, starts=5)
    res = run_sweep(grid, workers=1)
    print(f"{family}  ({policy} distortions)")
    print(f"  {'N':>4} {'N_beta':>7} {'s_ratio':>8} {'m_ratio':>10} {'a5':>10}  definite  clusters")
    for r in res.rows:
        print(f"  {r['N']:4d} {r['n_beta']:7.2f} {r['s_ratio']:8.3f} {r['m_ratio']:10.3e} {r['a5']:10.3e}"
              f"  {str(r['negative_definite']):8s}  {r['n_clusters']}")
    t = res.trends[0]
    print(f"  log-log slope of m_ratio in N_beta: {t['m_ratio_slope']:.2f}\n")


table("dispersed", "random")
table("sparse", "random")
table("two-type", "odd-even")
