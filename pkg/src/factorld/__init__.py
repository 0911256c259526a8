"""Large deviations and rare-event simulation for heavy-tailed factor models."""

__version__ = "0.1.0"

from .errors import RegimeError, ValidationError
from .rv_dist import Constant, ConvergentTo, LogSV, RegVarDist, pareto
from .factor_model import BoundedIID, Deterministic, FactorModelSpec, sample_sum
from .ld_approx import AxisIID, UserScalar, classify_regime, critical_exponents, ld_tail_approx
from .cond_mc import TailEstimate, compare_table, estimate_tail_cmc, estimate_tail_naive
from .levy_paths import (
    LevyFactorSpec,
    estimate_marginal_tail,
    limit_measure_mt,
    one_jump_diagnostic,
    sample_path,
)

__all__ = [
    "RegimeError",
    "ValidationError",
    "Constant",
    "ConvergentTo",
    "LogSV",
    "RegVarDist",
    "pareto",
    "BoundedIID",
    "Deterministic",
    "FactorModelSpec",
    "sample_sum",
    "AxisIID",
    "UserScalar",
    "classify_regime",
    "critical_exponents",
    "ld_tail_approx",
    "TailEstimate",
    "compare_table",
    "estimate_tail_cmc",
    "estimate_tail_naive",
    "LevyFactorSpec",
    "estimate_marginal_tail",
    "limit_measure_mt",
    "one_jump_diagnostic",
    "sample_path",
]
