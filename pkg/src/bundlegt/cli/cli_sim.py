"""
Monte Carlo commands: misdetection sweeps and the comparison of decoder message
statistics with density evolution.
"""

from __future__ import annotations

import sys

import click

from .common import (
    config_option,
    convert_errors,
    graph_options,
    load_config,
    params_from_config,
    require_seed,
    run_options,
    seed_option,
    start_manifest,
    verbose_option,
)
from .core import Percent, PercentList
from .output import Align, Column, Table, info, ok, warn


@click.command(help="Estimate misdetection rates over a grid of defect probabilities.")
@graph_options
@click.option(
    "--gamma",
    type=PercentList(),
    help="Comma separated defect probabilities in %. Defaults to the run "
    "configuration.",
)
@click.option(
    "--trials", type=click.IntRange(min=1), help="Trials per defect probability."
)
@click.option("--max-iters", type=click.IntRange(min=1), help="Decoder iteration cap.")
@click.option(
    "--fixed-graph",
    is_flag=True,
    default=False,
    help="Decode all trials on a single graph derived from the seed.",
)
@seed_option
@click.option(
    "--csv",
    "csv_path",
    type=click.Path(dir_okay=False, writable=True),
    help="Write one line per defect probability as CSV.",
)
@click.option(
    "--json",
    "json_path",
    type=click.Path(dir_okay=False, writable=True),
    help="Write the rows and settings as JSON.",
)
@click.option(
    "--progress", is_flag=True, default=False, help="Show progress bars on stderr."
)
@run_options
@convert_errors
def simulate(
    n: int | None,
    q: int | None,
    dv: int | None,
    dvx: int | None,
    dc: int | None,
    gamma: list[float] | None,
    trials: int | None,
    max_iters: int | None,
    fixed_graph: bool,
    seed: int | None,
    csv_path: str | None,
    json_path: str | None,
    progress: bool,
    config_path: str | None,
    jobs: int | None,
    verbose: bool,
) -> None:

    from ..sim import SimConfig, sweep, write_csv, write_json
    from ..utils import pct_to_fraction

    conf = load_config(
        config_path,
        verbose,
        app={"seed": seed, "jobs": jobs},
        graph={"n": n, "q": q, "d_v": dv, "d_vx": dvx, "d_c": dc},
        decoder={"max_iters": max_iters},
        sim={
            "gamma_pct": gamma,
            "trials": trials,
            "fresh_graph_per_trial": False if fixed_graph else None,
        },
    )

    master_seed = require_seed(conf)
    manifest = start_manifest("simulate", conf, master_seed)

    config = SimConfig(
        params=params_from_config(conf),
        gamma_grid=tuple(pct_to_fraction(g) for g in conf.get("sim", "gamma_pct")),
        trials=conf.get("sim", "trials"),
        master_seed=master_seed,
        max_iters=conf.get("decoder", "max_iters"),
        fresh_graph_per_trial=conf.get("sim", "fresh_graph_per_trial"),
        distinct_bundles_per_test=conf.get("graph", "distinct_bundles_per_test"),
        repair_factor=conf.get("graph", "repair_factor"),
    )

    if not config.gamma_grid:
        warn("No defect probabilities given, nothing to simulate")

    result = sweep(config, jobs=conf.get("app", "jobs"), progress=progress)

    table = Table(
        [
            Column("gamma [%]"),
            Column("defectives"),
            Column("misdetection"),
            Column("se", precision=2),
            Column("false alarms"),
            Column("iterations", precision=3),
        ]
    )

    for row in result.rows:
        table.append(
            [
                row.gamma * 100,
                row.defectives,
                row.misdetection_rate,
                row.se,
                row.false_alarms,
                row.mean_iters,
            ]
        )

    if result.rows:
        table.echo()

    if not result.monotone:
        warn("Misdetection is not monotone in the defect probability")

    outputs = []

    if csv_path:
        write_csv(result, csv_path)
        outputs.append(csv_path)

    if json_path:
        write_json(result, json_path, conf.snapshot())
        outputs.append(json_path)

    if outputs:
        manifest.write(outputs)


@click.command(
    help="Compare decoder message statistics with the density evolution prediction."
)
@graph_options
@click.option("--gamma", type=Percent(), required=True, help="Defect probability in %.")
@click.option(
    "--ell",
    type=click.IntRange(min=0),
    required=True,
    help="Number of decoder iterations before the comparison.",
)
@click.option(
    "--trials",
    type=click.IntRange(min=1),
    default=20,
    show_default=True,
    help="Number of random instances.",
)
@seed_option
@click.option(
    "--json",
    "json_path",
    type=click.Path(dir_okay=False, writable=True),
    help="Write the report as JSON.",
)
@click.option(
    "--progress", is_flag=True, default=False, help="Show a progress bar on stderr."
)
@config_option
@verbose_option
@convert_errors
def crosscheck(
    n: int | None,
    q: int | None,
    dv: int | None,
    dvx: int | None,
    dc: int | None,
    gamma: float,
    ell: int,
    trials: int,
    seed: int | None,
    json_path: str | None,
    progress: bool,
    config_path: str | None,
    verbose: bool,
) -> None:

    import json

    from ..constants import EXIT_RUNTIME
    from ..sim import de_crosscheck
    from ..utils import pct_to_fraction

    conf = load_config(
        config_path,
        verbose,
        app={"seed": seed},
        graph={"n": n, "q": q, "d_v": dv, "d_vx": dvx, "d_c": dc},
    )

    master_seed = require_seed(conf)
    manifest = start_manifest("crosscheck", conf, master_seed)

    report = de_crosscheck(
        params_from_config(conf),
        pct_to_fraction(gamma),
        ell,
        trials,
        master_seed,
        eps_tail=conf.get("de", "eps_tail"),
        progress=progress,
    )

    table = Table(
        [
            Column("message", Align.Left),
            Column("condition", Align.Left),
            Column("count"),
            Column("empirical"),
            Column("predicted"),
            Column("z", precision=3),
        ]
    )

    for e in report.entries:
        table.append(
            [e.family, e.condition, e.count, e.empirical, e.predicted, e.zscore]
        )

    table.echo()

    if json_path:
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, indent=2)
            f.write("\n")
        manifest.write([json_path])

    summary = f"Largest deviation {report.max_abs_z:.2f} standard errors"

    if report.passed:
        ok(f"{summary}: {report.verdict}")
    else:
        warn(f"{summary}: {report.verdict}")
        info(f"Deviations above {report.fail_sigma:g} standard errors fail the check")
        sys.exit(EXIT_RUNTIME)
