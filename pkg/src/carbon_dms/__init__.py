"""Dual-index shipping policies for an assortment under a shared carbon-emission cap."""

from .benchmarks import exact_single_mode, solve_bms, solve_sms
from .emissions import NTM_COEFFS, TripSpec, emission_coefficients, sample_emission_pair, unit_emission
from .estimators import (
    BlanketModeSelection,
    CarbonPricedPolicy,
    DynamicModeSelection,
    StaticModeSelection,
)
from .exceptions import CarbonDMSError, InfeasibleTargetError, NotConvergedError, ParameterError
from .harness import carbon_price, lorenz, sweep
from .master import build_tables, run_column_generation, solve_integer, solve_rmp_lp
from .policy_sim import DualIndex, FastOnly, SimConfig, SlowOnly, evaluate
from .rand_dist import DistSpec, RngStream, quantile, sample, sample_correlated
from .subproblem import ColumnTables, DualPrices, PolicyTable, solve_carbon_priced, solve_sp
from .testbed import Instance, ProductParams, generate_instance, resolve_target

__version__ = "0.1.0"

__all__ = [
    "BlanketModeSelection",
    "CarbonDMSError",
    "CarbonPricedPolicy",
    "ColumnTables",
    "DistSpec",
    "DualIndex",
    "DualPrices",
    "DynamicModeSelection",
    "FastOnly",
    "InfeasibleTargetError",
    "Instance",
    "NTM_COEFFS",
    "NotConvergedError",
    "ParameterError",
    "PolicyTable",
    "ProductParams",
    "RngStream",
    "SimConfig",
    "SlowOnly",
    "StaticModeSelection",
    "TripSpec",
    "build_tables",
    "carbon_price",
    "emission_coefficients",
    "evaluate",
    "exact_single_mode",
    "generate_instance",
    "lorenz",
    "quantile",
    "resolve_target",
    "run_column_generation",
    "sample",
    "sample_correlated",
    "sample_emission_pair",
    "solve_bms",
    "solve_carbon_priced",
    "solve_integer",
    "solve_rmp_lp",
    "solve_sms",
    "solve_sp",
    "sweep",
    "unit_emission",
]
