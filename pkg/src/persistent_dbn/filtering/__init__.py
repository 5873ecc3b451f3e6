"""Approximate online filters and their error metric."""

from .bk import FilterRun, FilterState, bk_filter, bk_fully_factored_step, two_slice_factors
from .window import error_rows, exact_filtering, fixed_window_filter, rms_error

__all__ = [
    "FilterRun",
    "FilterState",
    "bk_filter",
    "bk_fully_factored_step",
    "error_rows",
    "exact_filtering",
    "fixed_window_filter",
    "rms_error",
    "two_slice_factors",
]
