"""Cesàro densities of sets of positive integers.

The most used entry points are re-exported here; each submodule documents
the rest.
"""

from .constructions import block_set, dk_family, greedy_target, midpoint_set
from .density import EstimatorConfig, density_profile, exact_charge, exact_limits, partial_average
from .dsl import parse_set_expr
from .nullmod import algorithm1
from .sets import EMPTY, EVENS, NATURALS, ODDS, PRIMES, SQUARES, CesaroError, Residue, SetExpr

__version__ = "0.1.0"

__all__ = [
    "EMPTY",
    "EVENS",
    "NATURALS",
    "ODDS",
    "PRIMES",
    "SQUARES",
    "CesaroError",
    "EstimatorConfig",
    "Residue",
    "SetExpr",
    "algorithm1",
    "block_set",
    "density_profile",
    "dk_family",
    "exact_charge",
    "exact_limits",
    "greedy_target",
    "midpoint_set",
    "parse_set_expr",
    "partial_average",
]
