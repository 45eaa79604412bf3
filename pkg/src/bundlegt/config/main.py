"""
This module contains the default run configuration and a factory to load a run
configuration from a JSON file.
"""

from __future__ import annotations

from packaging.version import Version

from .user import JsonConfig, DefaultsType
from ..constants import (
    DEFAULT_DELTA_SUCCESS,
    DEFAULT_EPS_TAIL,
    DEFAULT_GAMMA_HI_PCT,
    DEFAULT_GAMMA_LO_PCT,
    DEFAULT_MAX_DC_MULTIPLE,
    DEFAULT_MAX_DE_ITERS,
    DEFAULT_MAX_ITERS,
    DEFAULT_NEIGHBOURHOOD,
    DEFAULT_REPAIR_FACTOR,
    DEFAULT_TOLERANCE_PCT,
)


# =============================================================================
#  Defaults
# =============================================================================

DEFAULTS_CONFIG: DefaultsType = {
    "app": {
        "log_level": 20,  # log level for stderr and file, default: INFO
        "jobs": 1,  # number of parallel workers for trials and DE runs
        "seed": None,  # master seed of record for stochastic commands
    },
    "graph": {
        "n": None,  # item count
        "q": None,  # bundle size
        "d_v": None,  # total item degree
        "d_vx": None,  # item degree toward item-level tests
        "d_c": None,  # test degree in items
        "distinct_bundles_per_test": False,  # forbid two items of a bundle in one test
        "repair_factor": DEFAULT_REPAIR_FACTOR,  # swap attempts per edge
    },
    "decoder": {
        "max_iters": DEFAULT_MAX_ITERS,
    },
    "de": {
        "eps_tail": DEFAULT_EPS_TAIL,  # syndrome tail truncation
        "delta_success": DEFAULT_DELTA_SUCCESS,  # residual target for success
        "max_de_iters": DEFAULT_MAX_DE_ITERS,
        "tolerance_pct": DEFAULT_TOLERANCE_PCT,  # bisection resolution, in %
        "gamma_lo_pct": DEFAULT_GAMMA_LO_PCT,  # lower end of the threshold search, in %
        "gamma_hi_pct": DEFAULT_GAMMA_HI_PCT,  # upper end of the threshold search, in %
        "max_dc_multiple": DEFAULT_MAX_DC_MULTIPLE,  # largest d_c / q for rate search
        "neighbourhood": DEFAULT_NEIGHBOURHOOD,  # "test" or "edge"
    },
    "sim": {
        "gamma_pct": [],  # defect probabilities to simulate, in %
        "trials": 100,  # trials per point
        "fresh_graph_per_trial": True,  # ensemble average instead of a fixed code
    },
}


# IMPORTANT NOTES:
# 1. If you want to *change* the default value of a current option, you need to
#    do a MINOR update in config version, e.g. from 1.0 to 1.1
# 2. If you want to *remove* options that are no longer needed in our codebase,
#    or if you want to *rename* options, then you need to do a MAJOR update in
#    version, e.g. from 1.0 to 2.0
# 3. You don't need to touch this value if you're just adding a new option
CONF_VERSION = Version("1.0")


# =============================================================================
# Factories
# =============================================================================


def RunConfig(config_path: str | None = None) -> JsonConfig:
    """
    Returns a run configuration with all defaults, overlaid with the values from
    ``config_path`` if given.

    :param config_path: Path to a JSON run configuration.
    :returns: Run config instance.
    :raises ConfigError: if the file cannot be read or has an unsupported version.
    """
    return JsonConfig(config_path, defaults=DEFAULTS_CONFIG, version=CONF_VERSION)
