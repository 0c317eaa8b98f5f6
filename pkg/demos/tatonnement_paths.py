"""Price adjustment p' = z(p) from a perturbed equilibrium.

At a negative definite equilibrium the distance to p_bar decays at a rate
set by the largest eigenvalue of the symmetric part of Dz.  The script
prints the distance at a few sample times next to that linear prediction.

Run:  python3 demos/tatonnement_paths.py
"""
import numpy as np

from gelab import (
    ScenarioSpec,
    aggregate_jacobian,
    generate,
    perturbed_start,
    solve_equilibrium,
    stability_verdict,
    tatonnement_simulate,
)

e = generate(ScenarioSpec("dispersed", {}, 0), 20, 0.95, 12)
eq = solve_equilibrium(e)
rep = stability_verdict(aggregate_jacobian(e, eq))
print(f"{e.name}: max eigenvalue of sym(Dz) = {rep.max_sym_eig:.3f}")

p0 = perturbed_start(eq.prices, 0.05, np.random.default_rng(0))
run = tatonnement_simulate(e, p0, eq, early_stop=False, t_max=12.0, rtol=1e-10)
d = run.distances()
print(f"{run.steps} accepted steps, {run.rejected} rejected; converged = {run.converged}")
print(f"{'t':>6} {'|p - p_bar|':>12} {'bound':>12}")
for t in (0.0, 1.0, 2.0, 4.0, 8.0, 12.0):
    k = int(np.searchsorted(run.times, t))
    k = min(k, run.times.size - 1)
    # the Euclidean distance contracts at least as fast as exp(max_sym_eig * t)
    bound = np.linalg.norm(p0 - eq.prices) * np.exp(rep.max_sym_eig * run.times[k])
    dist = np.linalg.norm(run.prices[k] - eq.prices)
    print(f"{run.times[k]:6.2f} {dist:12.3e} {bound:12.3e}")
print(f"sup-norm distance at the end: {d[-1]:.2e}")
