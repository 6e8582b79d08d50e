"""Equilibrium pricing on supply-chain influence networks.

Firms along a supply chain each post a net price; some observe others'
prices before choosing their own.  Given the influence network, marginal
costs and a demand curve, :func:`solve` returns the unique equilibrium,
per-firm markups, profits and welfare.
"""

from .demandkit import Custom, Exponential, Linear, Logit, Power
from .equilibria import (
    EquilibriumReport,
    MarketModel,
    bonacich,
    degree,
    influentiality,
    logit_bounds,
    solve,
    solve_linear_closed_form,
    welfare,
)
from .errors import NetPriceError, NetworkValidationError, SolverError
from .netcore import InfluenceNetwork, canonical, from_edges, merge_nodes, validate

__version__ = "0.1.0"

__all__ = [
    "Custom", "Exponential", "Linear", "Logit", "Power",
    "EquilibriumReport", "MarketModel", "bonacich", "degree", "influentiality",
    "logit_bounds", "solve", "solve_linear_closed_form", "welfare",
    "NetPriceError", "NetworkValidationError", "SolverError",
    "InfluenceNetwork", "canonical", "from_edges", "merge_nodes", "validate",
]
