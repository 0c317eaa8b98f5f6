"""Equilibrium laboratory for exchange economies with many dated commodities.

Agents with discounted, time-separable isoelastic (or log) utility trade
commodities dated ``0..N``; date 0 is the numeraire.  The package solves for
equilibrium prices, assembles the Slutsky structure of aggregate excess
demand, splits its quadratic form into substitution and income terms, and
tests negative definiteness, index and tatonnement stability as the
effective number of commodities ``N_beta = sum_n beta**n`` grows.
"""

__version__ = "0.1.0"

from .analysis import (
    aggregate_jacobian,
    agent_slutsky,
    decompose_perturbation,
    fd_jacobian,
    jacobian_at,
    psi,
    quadratic_terms,
    rate_ratios,
    substitution_graph_form,
)
from .demand import agent_demand, economy_demand, marginal_expenditure_shares
from .diversification import diversification_report, spectral_statistic
from .economy import (
    AgentSpec,
    DiscountStructure,
    Economy,
    UtilityKernel,
    audit_assumptions,
    beta_inner_product,
    effective_commodity_count,
    load_economy,
    make_economy,
    risk_tolerance,
)
from .equilibrium import EquilibriumResult, excess_demand, isoelastic_example_oracle, solve_equilibrium
from .scenarios import Family, ScenarioSpec, generate, isoelastic_params, verify_constraints
from .stability import perturbed_start, stability_verdict, tatonnement_simulate, uniqueness_probe
from .sweep import SweepGrid, run_sweep

import types as _types

__all__ = [n for n, v in dict(globals()).items() if not n.startswith("_") and not isinstance(v, _types.ModuleType)]
