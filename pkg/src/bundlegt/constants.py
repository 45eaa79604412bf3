"""
This module provides constants used throughout bundlegt and its CLI. It should be kept
free of memory heavy imports.

All defect probabilities and rates which are passed through the CLI or written to CSV
files are expressed in percent, matching the way they are usually quoted. The Python
API uses plain fractions.
"""

# app
APP_NAME = "bundlegt"
CONFIG_SCHEMA = "bundlegt-run-config"

# exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_NOT_CONVERGED = 3

# decoder
DEFAULT_MAX_ITERS = 200

# density evolution
DEFAULT_EPS_TAIL = 1e-7
DEFAULT_DELTA_SUCCESS = 1e-8
DEFAULT_MAX_DE_ITERS = 2000
DEFAULT_TOLERANCE_PCT = 0.001
DEFAULT_GAMMA_LO_PCT = 0.01
DEFAULT_GAMMA_HI_PCT = 2.0
DEFAULT_MAX_DC_MULTIPLE = 400

# averaging over the bundles of a bundle-level test: "test" draws the bundle values of
# the whole test, "edge" draws the other bundles given the receiving one
NEIGHBOURHOODS = ("test", "edge")
DEFAULT_NEIGHBOURHOOD = "test"

# graph construction
DEFAULT_REPAIR_FACTOR = 10

# crosscheck verdict
CROSSCHECK_FAIL_SIGMA = 5.0

# csv schemas
SIM_CSV_COLUMNS = (
    "gamma",
    "trials",
    "defectives",
    "misdetected",
    "misdetection_rate",
    "se",
    "false_alarms",
    "unresolved",
    "mean_iters",
)

THRESHOLD_CSV_COLUMNS = (
    "q",
    "d_v",
    "d_vx",
    "d_c",
    "omega",
    "gamma_th",
    "bracket_lo",
    "bracket_hi",
    "iters",
)

RATE_CSV_COLUMNS = (
    "q",
    "d_v",
    "d_vx",
    "gamma",
    "d_c",
    "omega_th",
    "bracket_lo",
    "bracket_hi",
    "iters",
)

# Table 1 layout: (q, d_vx) rows over d_v columns. A d_vx of None means that all
# tests are item-level tests (d_vx = d_v).
TABLE1_ROWS = ((1, None), (4, 2), (5, 2), (10, 3))
TABLE1_DV = (4, 5, 6, 7, 8)
TABLE1_OMEGA_PCT = 5.0

TABLE1_REFERENCE = {
    1: (0.598, 0.641, 0.646, 0.635, 0.618),
    4: (0.590, 0.660, 0.694, 0.706, 0.702),
    5: (0.592, 0.672, 0.725, 0.746, 0.744),
    10: (0.549, 0.636, 0.693, 0.774, 0.694),
}

# Finite length misdetection curves at n = 210000 and a 5% rate, as (gamma in %,
# published misdetection rate) pairs.
FIG3_N = 210000

FIG3_CURVES = {
    "q1": {
        "q": 1,
        "d_v": 6,
        "d_vx": 6,
        "d_c": 120,
        "points": (
            (0.59, 0.0),
            (0.605, 1.00428e-3),
            (0.61, 3.95829e-3),
            (0.62, 2.50605e-2),
            (0.63, 0.148314),
            (0.64, 0.369909),
            (0.647, 0.527303),
            (0.65, 0.653077),
            (0.66, 0.802386),
            (0.67, 0.960372),
            (0.68, 0.987679),
        ),
    },
    "q5": {
        "q": 5,
        "d_v": 7,
        "d_vx": 2,
        "d_c": 140,
        "points": (
            (0.70, 4.81574e-4),
            (0.71, 5.75095e-3),
            (0.715, 1.81738e-2),
            (0.73, 6.76112e-2),
            (0.745, 0.189088),
            (0.77, 0.653221),
            (0.80, 0.995996),
            (0.85, 0.999160),
        ),
    },
    "q10": {
        "q": 10,
        "d_v": 7,
        "d_vx": 3,
        "d_c": 140,
        "points": (
            (0.735, 3.40052e-4),
            (0.745, 2.54864e-3),
            (0.75, 5.81857e-3),
            (0.755, 1.51194e-2),
            (0.76, 2.87474e-2),
            (0.765, 5.00080e-2),
            (0.775, 0.126157),
            (0.80, 0.516416),
            (0.85, 0.997528),
            (0.90, 0.999530),
        ),
    },
}
