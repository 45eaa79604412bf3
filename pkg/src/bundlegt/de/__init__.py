"""Density evolution and threshold searches for the bundle-augmented ensemble."""

from .pmf import CondPmf, syndrome_cutoff
from .engine import (
    DeConfig,
    DeState,
    DeResult,
    DensityEvolution,
    de_iterate,
    de_test_bundle,
    de_bundle_side,
    de_item_bundle,
    de_test_item,
)
from .search import (
    DeOptions,
    ThresholdResult,
    Table1Entry,
    gamma_threshold,
    min_rate,
    rate_curve,
    table1_thresholds,
)


__all__ = [
    "CondPmf",
    "syndrome_cutoff",
    "DeConfig",
    "DeState",
    "DeResult",
    "DensityEvolution",
    "de_iterate",
    "de_test_bundle",
    "de_bundle_side",
    "de_item_bundle",
    "de_test_item",
    "DeOptions",
    "ThresholdResult",
    "Table1Entry",
    "gamma_threshold",
    "min_rate",
    "rate_curve",
    "table1_thresholds",
]
