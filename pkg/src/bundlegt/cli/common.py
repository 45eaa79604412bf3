from __future__ import annotations

import functools
import logging
import sys
from typing import Any, Callable, TypeVar

import click

from ..constants import EXIT_RUNTIME, EXIT_USAGE, NEIGHBOURHOODS
from .output import echo, warn

F = TypeVar("F", bound=Callable[..., Any])


def convert_errors(func: F) -> F:
    """
    Decorator that catches a BundleGtError and prints a formatted error message to
    stdout before exiting. Invalid input exits with code 1, other errors with code 2.
    """

    from ..exceptions import BundleGtError, ParameterError

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ParameterError as exc:
            warn(str(exc))
            sys.exit(EXIT_USAGE)
        except BundleGtError as exc:
            warn(str(exc))
            sys.exit(EXIT_RUNTIME)

    return wrapper  # type: ignore[return-value]


# ==== shared options ==================================================================

config_option = click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="JSON run configuration. Command line flags take precedence.",
)
seed_option = click.option(
    "--seed",
    type=click.IntRange(min=0),
    help="Master seed of record. Required unless set in the run configuration.",
)
jobs_option = click.option(
    "--jobs",
    "-j",
    type=click.IntRange(min=-1),
    help="Number of parallel workers, -1 for all cores. Defaults to 1.",
)
verbose_option = click.option(
    "--verbose",
    "-v",
    is_flag=True,
    default=False,
    help="Print debug logs to stderr.",
)
n_option = click.option("--n", type=click.IntRange(min=1), help="Number of items.")
q_option = click.option("--q", type=click.IntRange(min=1), help="Bundle size.")
dv_option = click.option(
    "--dv", type=click.IntRange(min=1), help="Number of tests per item."
)
dvx_option = click.option(
    "--dvx",
    type=click.IntRange(min=1),
    help="Number of item-level tests per item. Defaults to --dv.",
)
dc_option = click.option(
    "--dc", type=click.IntRange(min=1), help="Number of items per test."
)


def graph_options(f: F) -> F:
    """Adds the ensemble parameter flags."""
    for option in reversed((n_option, q_option, dv_option, dvx_option, dc_option)):
        f = option(f)
    return f


def ensemble_options(f: F) -> F:
    """Adds the ensemble parameter flags without the item count."""
    for option in reversed((q_option, dv_option, dvx_option, dc_option)):
        f = option(f)
    return f


def run_options(f: F) -> F:
    """Adds the run configuration, parallelism and verbosity flags."""
    for option in reversed((config_option, jobs_option, verbose_option)):
        f = option(f)
    return f


# ==== run setup =======================================================================


def load_config(config_path: str | None, verbose: bool = False, **sections: dict):
    """
    Loads the run configuration, applies command line overrides and sets up logging.

    :param config_path: JSON run configuration or ``None``.
    :param verbose: Log at debug level.
    :param sections: Overrides per section. Values of ``None`` are ignored.
    :returns: Run configuration.
    :raises ConfigError: if the file or an override is invalid.
    """

    from ..config import RunConfig
    from ..exceptions import ConfigError
    from ..logging import setup_logging

    conf = RunConfig(config_path)

    for section, values in sections.items():
        try:
            conf.update(section, **values)
        except ValueError as exc:
            raise ConfigError("Invalid option", str(exc))

    level = logging.DEBUG if verbose else conf.get("app", "log_level")
    _, _, cached = setup_logging(level)

    ctx = click.get_current_context(silent=True)
    if ctx is not None:
        ctx.call_on_close(functools.partial(replay_warnings, cached))

    return conf


def replay_warnings(cached) -> None:
    """Repeats the warnings logged during a command after its regular output."""

    messages = cached.getAllMessages()

    if messages:
        echo("Warnings during this run:", err=True)
        for message in messages:
            warn(message, err=True)


def require(conf, section: str, option: str, flag: str) -> Any:
    """
    Returns a config value which must be set either in the file or by a flag.

    :raises ParameterError: if the value is unset.
    """
    from ..exceptions import ParameterError

    value = conf.get(section, option)

    if value is None:
        raise ParameterError(
            f"Missing parameter {flag}",
            f"Pass {flag} or set '{option}' in the '{section}' section of the run "
            "configuration.",
        )

    return value


def require_seed(conf) -> int:
    """Returns the seed of record of a stochastic command."""
    return require(conf, "app", "seed", "--seed")


def params_from_config(conf, with_n: bool = True):
    """
    Builds the ensemble parameters from the ``graph`` section.

    :raises ParameterError: if a required parameter is missing or the parameters are
        inconsistent.
    """

    from ..graph import derive_params

    q = require(conf, "graph", "q", "--q")
    d_v = require(conf, "graph", "d_v", "--dv")
    d_c = require(conf, "graph", "d_c", "--dc")
    d_vx = conf.get("graph", "d_vx") or d_v

    if not with_n:
        return q, d_v, d_vx, d_c

    n = require(conf, "graph", "n", "--n")
    return derive_params(n, q, d_v, d_vx, d_c)


def start_manifest(subcommand: str, conf, seed: int | None = None):
    """
    Starts the provenance record of a run. Call its ``write`` method with the output
    paths once all outputs are written.
    """

    from ..manifest import RunManifest

    return RunManifest(subcommand, conf.snapshot(), seed=seed)


# ==== density evolution settings ======================================================


def de_options(f: F) -> F:
    """Adds the numerical settings of density evolution."""

    options = (
        click.option(
            "--eps-tail",
            type=click.FloatRange(min=0, max=1, min_open=True, max_open=True),
            help="Neglected mass of bundle-level test results. Defaults to 1e-7.",
        ),
        click.option(
            "--delta",
            type=click.FloatRange(min=0, max=1, min_open=True, max_open=True),
            help="Residual probability of unresolved items counted as success. "
            "Defaults to 1e-8.",
        ),
        click.option(
            "--max-de-iters",
            type=click.IntRange(min=1),
            help="Iteration cap of density evolution. Defaults to 2000.",
        ),
        click.option(
            "--method",
            type=click.Choice(["enumerate", "mixture"]),
            default="enumerate",
            show_default=True,
            help="Average over bundle value multisets with a truncated tail, or use "
            "the closed form mixture without truncation.",
        ),
        click.option(
            "--neighbourhood",
            type=click.Choice(list(NEIGHBOURHOODS)),
            help="Average bundle-level test messages over the bundle values of whole "
            "tests, or over the other bundles of a single edge. Defaults to test.",
        ),
    )

    for option in reversed(options):
        f = option(f)
    return f


def de_overrides(
    eps_tail: float | None,
    delta: float | None,
    max_de_iters: int | None,
    neighbourhood: str | None = None,
) -> dict[str, Any]:
    return {
        "eps_tail": eps_tail,
        "delta_success": delta,
        "max_de_iters": max_de_iters,
        "neighbourhood": neighbourhood,
    }


def write_csv_rows(path: str, columns: tuple[str, ...], rows: list[dict]) -> None:
    """Writes rows of preformatted values with a header line."""

    import csv

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
