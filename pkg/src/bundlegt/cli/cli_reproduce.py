"""
Commands which recompute the reference threshold table and the finite length
misdetection curves. Both accept subsets to fit a time budget.
"""

from __future__ import annotations

import os

import click

from .common import (
    convert_errors,
    de_options,
    de_overrides,
    load_config,
    require_seed,
    run_options,
    seed_option,
    start_manifest,
    write_csv_rows,
)
from .core import IntList
from .output import Align, Column, Table, info, ok, warn


TABLE1_TOLERANCE_PCT = 0.005


def _table1_csv_rows(entries, dvs) -> list[dict[str, str]]:
    rows: dict[tuple[int, int], dict[str, str]] = {}

    for e in entries:
        row = rows.setdefault((e.q, e.d_vx), {"q": str(e.q), "d_vx": str(e.d_vx)})
        row[str(e.d_v)] = f"{e.result.value:.3f}"

    for row in rows.values():
        for d_v in dvs:
            row.setdefault(str(d_v), "")

    return list(rows.values())


@click.command(help="Recompute the threshold table at a rate of 5%.")
@click.option("--q", "qs", type=IntList(), help="Bundle sizes to include, e.g. 1,5.")
@click.option("--dv", "dvs", type=IntList(), help="Item degrees to include, e.g. 6,7.")
@de_options
@click.option(
    "--csv",
    "csv_path",
    type=click.Path(dir_okay=False, writable=True),
    help="Write the table as CSV with one row per bundle size.",
)
@run_options
@convert_errors
def reproduce_table1(
    qs: list[int] | None,
    dvs: list[int] | None,
    eps_tail: float | None,
    delta: float | None,
    max_de_iters: int | None,
    method: str,
    neighbourhood: str | None,
    csv_path: str | None,
    config_path: str | None,
    jobs: int | None,
    verbose: bool,
) -> None:

    from ..constants import TABLE1_DV, TABLE1_REFERENCE, TABLE1_ROWS
    from ..de import DeOptions, table1_thresholds
    from ..exceptions import ParameterError

    known_qs = [q for q, _ in TABLE1_ROWS]

    if qs and not set(qs) <= set(known_qs):
        raise ParameterError("Invalid subset", f"--q must be a subset of {known_qs}.")

    if dvs and not set(dvs) <= set(TABLE1_DV):
        raise ParameterError(
            "Invalid subset", f"--dv must be a subset of {list(TABLE1_DV)}."
        )

    conf = load_config(
        config_path,
        verbose,
        app={"jobs": jobs},
        de=de_overrides(eps_tail, delta, max_de_iters, neighbourhood),
    )
    manifest = start_manifest("reproduce-table1", conf)

    entries = table1_thresholds(
        qs, dvs, DeOptions.from_config(conf, method), jobs=conf.get("app", "jobs")
    )

    table = Table(
        [
            Column("q"),
            Column("d_vx"),
            Column("d_v"),
            Column("gamma_th [%]"),
            Column("reference [%]"),
            Column("deviation"),
            Column("", Align.Left),
        ]
    )
    off = 0

    for e in entries:
        ref = TABLE1_REFERENCE[e.q][TABLE1_DV.index(e.d_v)]
        deviation = e.result.value - ref
        flag = ""

        if abs(deviation) > TABLE1_TOLERANCE_PCT:
            flag = "!"
            off += 1

        table.append(
            [
                e.q,
                e.d_vx,
                e.d_v,
                f"{e.result.value:.3f}",
                f"{ref:.3f}",
                f"{deviation:+.3f}",
                flag,
            ]
        )

    table.echo()

    if off:
        warn(f"{off} thresholds deviate by more than {TABLE1_TOLERANCE_PCT}%")
    else:
        ok(f"All {len(entries)} thresholds within {TABLE1_TOLERANCE_PCT}%")

    if csv_path:
        columns = ("q", "d_vx") + tuple(str(d) for d in (dvs or TABLE1_DV))
        write_csv_rows(csv_path, columns, _table1_csv_rows(entries, dvs or TABLE1_DV))
        manifest.write([csv_path])


@click.command(help="Recompute the finite length misdetection curves at a rate of 5%.")
@click.option(
    "--curve",
    "curves",
    type=click.Choice(["q1", "q5", "q10"]),
    multiple=True,
    help="Curve to simulate. Repeat for several curves. Defaults to all.",
)
@click.option(
    "--n",
    type=click.IntRange(min=1),
    help="Number of items. Defaults to 210000.",
)
@click.option(
    "--trials",
    type=click.IntRange(min=1),
    help="Trials per defect probability. Defaults to the run configuration.",
)
@seed_option
@click.option(
    "--output-dir",
    type=click.Path(file_okay=False, writable=True),
    required=True,
    help="Directory for one CSV and one JSON file per curve.",
)
@click.option(
    "--progress", is_flag=True, default=False, help="Show progress bars on stderr."
)
@run_options
@convert_errors
def reproduce_fig3(
    curves: tuple[str, ...],
    n: int | None,
    trials: int | None,
    seed: int | None,
    output_dir: str,
    progress: bool,
    config_path: str | None,
    jobs: int | None,
    verbose: bool,
) -> None:

    import json

    from ..constants import FIG3_CURVES, FIG3_N, SIM_CSV_COLUMNS
    from ..graph import derive_params
    from ..sim import SimConfig, sweep
    from ..utils import fraction_to_pct, pct_to_fraction

    conf = load_config(
        config_path,
        verbose,
        app={"seed": seed, "jobs": jobs},
        graph={"n": n},
        sim={"trials": trials},
    )
    master_seed = require_seed(conf)
    manifest = start_manifest("reproduce-fig3", conf, master_seed)

    os.makedirs(output_dir, exist_ok=True)
    n = conf.get("graph", "n") or FIG3_N
    outputs = []

    for name in curves or tuple(FIG3_CURVES):

        curve = FIG3_CURVES[name]
        points = curve["points"]
        params = derive_params(
            n, curve["q"], curve["d_v"], curve["d_vx"], curve["d_c"]
        )

        info(
            f"Simulating curve {name}: n={n}, q={params.q}, d_v={params.d_v}, "
            f"d_vx={params.d_vx}, d_c={params.d_c}"
        )

        config = SimConfig(
            params=params,
            gamma_grid=tuple(pct_to_fraction(g) for g, _ in points),
            trials=conf.get("sim", "trials"),
            master_seed=master_seed,
            max_iters=conf.get("decoder", "max_iters"),
            fresh_graph_per_trial=conf.get("sim", "fresh_graph_per_trial"),
            distinct_bundles_per_test=conf.get("graph", "distinct_bundles_per_test"),
            repair_factor=conf.get("graph", "repair_factor"),
        )
        result = sweep(config, jobs=conf.get("app", "jobs"), progress=progress)

        table = Table(
            [
                Column("gamma [%]"),
                Column("misdetection"),
                Column("se", precision=2),
                Column("reference"),
            ]
        )
        rows = []

        for row, (_, ref) in zip(result.rows, points):
            table.append(
                [fraction_to_pct(row.gamma), row.misdetection_rate, row.se, ref]
            )
            csv_row = row.to_csv_row()
            csv_row["reference"] = f"{ref:.10g}"
            rows.append(csv_row)

        table.echo()

        csv_path = os.path.join(output_dir, f"fig3_{name}.csv")
        json_path = os.path.join(output_dir, f"fig3_{name}.json")

        write_csv_rows(csv_path, SIM_CSV_COLUMNS + ("reference",), rows)

        data = result.to_dict()
        data["reference"] = [list(p) for p in points]
        data["run_config"] = conf.snapshot()

        with open(json_path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")

        outputs += [csv_path, json_path]

    manifest.write(outputs)
    ok(f"Wrote {len(outputs)} files to {output_dir}")
