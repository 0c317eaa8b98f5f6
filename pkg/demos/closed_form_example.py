"""Low-elasticity isoelastic economy: equilibrium at discount prices.

Agents with sigma = 0.2 and balanced taste shocks clear the market at
p_n = beta**n.  Newton started away from that point finds it again, yet aggregate
demand is not gross substitutes once the shocks are large enough, so the
classical sufficient condition for stability does not apply here.

Run:  python3 demos/closed_form_example.py
"""
import numpy as np

from gelab import (
    ScenarioSpec,
    aggregate_jacobian,
    isoelastic_example_oracle,
    isoelastic_params,
    stability_verdict,
)
from gelab.equilibrium import newton_solve, start_points

N, BETA, I = 40, 0.95, 8

for delta in (0.3, 0.5):
    params = isoelastic_params(ScenarioSpec("isoelastic", {"delta": delta}, 0), N, BETA, I)
    e = params.economy()
    ref = isoelastic_example_oracle(params)
    # the default start is beta**n itself, so begin from a seeded random point instead
    p0 = start_points(e, 2, seed=1)[1]
    eq = newton_solve(e, p0)

    print(f"delta = {delta}")
    print(f"  start distance from beta^n   {np.max(np.abs(np.log(p0 / BETA ** np.arange(1, N + 1)))):.2f} (log sup)")
    print(f"  Newton iterations            {eq.iterations}")
    print(f"  max |p / beta^n - 1|         {np.max(np.abs(eq.prices / BETA ** np.arange(1, N + 1) - 1)):.2e}")
    print(f"  max rel. error vs closed form {np.max(np.abs(eq.allocation / ref.allocation - 1)):.2e}")

    dz = aggregate_jacobian(e, eq)
    off = dz[~np.eye(N, dtype=bool)]
    rep = stability_verdict(dz)
    print(f"  negative off-diagonal entries {np.count_nonzero(off < 0)} of {off.size} (min {off.min():.3f})")
    print(f"  largest eigenvalue of sym(Dz) {rep.max_sym_eig:.3f}  -> {rep.status}, index {rep.index}")
    print()

# The shadow value of money moves with the endowment profile s_n and need not
# settle down as the horizon grows.
for N_ in (10, 20, 40, 80):
    p = isoelastic_params(ScenarioSpec("isoelastic", {}, 0), N_, BETA, I)
    lam = isoelastic_example_oracle(p).shadow_values
    print(f"N = {N_:3d}  shadow values of the two endowment types: {lam[0]:.4f}  {lam[1]:.4f}")
