"""Independent exact engines used as ground truth and as the unrolled baseline."""

from .enumeration import (
    DEFAULT_ENUM_BUDGET,
    binary_log_joint,
    changepoint_log_joint,
    enumerate_binary_dbn_posteriors,
    enumerate_changepoint_posteriors,
)
from .factors import (
    DEFAULT_VE_BUDGET,
    FactorTable,
    induced_peak,
    min_fill_order,
    product,
    variable_elimination,
)
from .unrolled import unrolled_factors, ve_exact_unrolled

__all__ = [
    "DEFAULT_ENUM_BUDGET",
    "DEFAULT_VE_BUDGET",
    "FactorTable",
    "binary_log_joint",
    "changepoint_log_joint",
    "enumerate_binary_dbn_posteriors",
    "enumerate_changepoint_posteriors",
    "induced_peak",
    "min_fill_order",
    "product",
    "unrolled_factors",
    "variable_elimination",
    "ve_exact_unrolled",
]
