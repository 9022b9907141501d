"""Optimal consumption allocation and equivalent discount rates for societies of
heterogeneous interest groups under an inequality-weighted welfare function."""

from .allocation import (
    Allocation,
    Group,
    Scenario,
    allocate,
    allocate_limit,
    alpha_coefficient,
    discounted_utility,
    equivalent_rho,
    equivalent_utility,
    felicity,
    welfare,
)
from .distributions import GammaSpec, ParetoSpec, SeededSampler, gamma_pdf, index_weights, pareto_pdf, sample
from .oracle import OracleResult, maximize, validate_closed_form
from .rates import GrowthModel, compare_rates, j_ratio, rho_policy, rho_welfare

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "Group",
    "Scenario",
    "allocate",
    "allocate_limit",
    "alpha_coefficient",
    "discounted_utility",
    "equivalent_rho",
    "equivalent_utility",
    "felicity",
    "welfare",
    "GammaSpec",
    "ParetoSpec",
    "SeededSampler",
    "gamma_pdf",
    "index_weights",
    "pareto_pdf",
    "sample",
    "OracleResult",
    "maximize",
    "validate_closed_form",
    "GrowthModel",
    "compare_rates",
    "j_ratio",
    "rho_policy",
    "rho_welfare",
]
