"""
Density evolution commands. All defect probabilities and rates are in percent.
"""

from __future__ import annotations

import click

from .common import (
    convert_errors,
    de_options,
    de_overrides,
    ensemble_options,
    load_config,
    params_from_config,
    require,
    run_options,
    start_manifest,
    write_csv_rows,
)
from .core import Percent, PercentList
from .output import Column, Table, info, ok


def _dc_from_omega(conf, omega: float | None) -> None:
    """Sets the test degree from a rate in percent, if given."""

    from ..exceptions import ParameterError

    if omega is None:
        return

    d_v = conf.get("graph", "d_v")

    if d_v is None:
        raise ParameterError("Missing parameter --dv", "--omega requires --dv.")

    exact = d_v * 100 / omega
    d_c = round(exact)

    if abs(exact - d_c) > 1e-9:
        raise ParameterError(
            "Invalid rate",
            f"d_v / omega = {exact:.6g} is not an integer test degree.",
        )

    given = conf.get("graph", "d_c")

    if given is not None and given != d_c:
        raise ParameterError(
            "Inconsistent parameters",
            f"--dc {given} does not match the rate {omega}% for d_v={d_v}.",
        )

    conf.set("graph", "d_c", d_c)


def threshold_csv_row(q: int, d_v: int, d_vx: int, result) -> dict[str, str]:
    lo, hi = result.bracket
    return {
        "q": str(q),
        "d_v": str(d_v),
        "d_vx": str(d_vx),
        "d_c": str(result.d_c),
        "omega": f"{100 * d_v / result.d_c:.6g}",
        "gamma_th": f"{result.value:.4f}",
        "bracket_lo": f"{lo:.4f}",
        "bracket_hi": f"{hi:.4f}",
        "iters": str(result.iters),
    }


@click.command(help="Compute the defect probability threshold with density evolution.")
@ensemble_options
@click.option("--omega", type=Percent(), help="Rate in %. Sets --dc to d_v / omega.")
@click.option("--gamma-lo", type=Percent(), help="Lower end of the search in %.")
@click.option("--gamma-hi", type=Percent(), help="Upper end of the search in %.")
@click.option(
    "--tolerance",
    type=click.FloatRange(min=0, min_open=True),
    help="Final bracket width in %. Defaults to 0.001.",
)
@de_options
@click.option(
    "--csv",
    "csv_path",
    type=click.Path(dir_okay=False, writable=True),
    help="Write the result as CSV.",
)
@run_options
@convert_errors
def de_threshold(
    q: int | None,
    dv: int | None,
    dvx: int | None,
    dc: int | None,
    omega: float | None,
    gamma_lo: float | None,
    gamma_hi: float | None,
    tolerance: float | None,
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

    from ..constants import THRESHOLD_CSV_COLUMNS
    from ..de import DeOptions, gamma_threshold

    de = de_overrides(eps_tail, delta, max_de_iters, neighbourhood)
    de.update(tolerance_pct=tolerance, gamma_lo_pct=gamma_lo, gamma_hi_pct=gamma_hi)

    conf = load_config(
        config_path,
        verbose,
        app={"jobs": jobs},
        graph={"q": q, "d_v": dv, "d_vx": dvx, "d_c": dc},
        de=de,
    )
    _dc_from_omega(conf, omega)

    q, d_v, d_vx, d_c = params_from_config(conf, with_n=False)
    manifest = start_manifest("de-threshold", conf)

    result = gamma_threshold(
        q,
        d_v,
        d_vx,
        d_c,
        DeOptions.from_config(conf, method),
        jobs=conf.get("app", "jobs"),
    )

    lo, hi = result.bracket
    ok(f"gamma_th = {result.value:.3f}% (bracket [{lo:.4f}, {hi:.4f}]%)")
    info(f"{result.iters} iterations at the threshold, rate {100 * d_v / d_c:.4g}%")

    if csv_path:
        write_csv_rows(
            csv_path, THRESHOLD_CSV_COLUMNS, [threshold_csv_row(q, d_v, d_vx, result)]
        )
        manifest.write([csv_path])


@click.command(help="Compute the minimum rate for given defect probabilities.")
@ensemble_options
@click.option(
    "--gamma",
    type=PercentList(),
    required=True,
    help="Comma separated defect probabilities in %.",
)
@click.option(
    "--max-dc-multiple",
    type=click.IntRange(min=2),
    help="Largest d_c / q tried. Defaults to 400.",
)
@de_options
@click.option(
    "--csv",
    "csv_path",
    type=click.Path(dir_okay=False, writable=True),
    help="Write the curve as CSV.",
)
@run_options
@convert_errors
def de_rate(
    q: int | None,
    dv: int | None,
    dvx: int | None,
    dc: int | None,
    gamma: list[float],
    max_dc_multiple: int | None,
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

    from ..constants import RATE_CSV_COLUMNS
    from ..de import DeOptions, rate_curve
    from ..exceptions import ParameterError

    if dc is not None:
        raise ParameterError("Invalid option", "de-rate searches --dc, do not pass it.")

    de = de_overrides(eps_tail, delta, max_de_iters, neighbourhood)
    de.update(max_dc_multiple=max_dc_multiple)

    conf = load_config(
        config_path,
        verbose,
        app={"jobs": jobs},
        graph={"q": q, "d_v": dv, "d_vx": dvx},
        de=de,
    )

    q = require(conf, "graph", "q", "--q")
    d_v = require(conf, "graph", "d_v", "--dv")
    d_vx = conf.get("graph", "d_vx") or d_v
    manifest = start_manifest("de-rate", conf)

    results = rate_curve(
        gamma,
        q,
        d_v,
        d_vx,
        DeOptions.from_config(conf, method),
        jobs=conf.get("app", "jobs"),
    )

    table = Table([Column("gamma [%]"), Column("d_c"), Column("omega_th [%]")])
    rows = []

    for g, r in zip(gamma, results):
        lo, hi = r.bracket
        table.append([g, r.d_c, r.value])
        rows.append(
            {
                "q": str(q),
                "d_v": str(d_v),
                "d_vx": str(d_vx),
                "gamma": f"{g:.10g}",
                "d_c": str(r.d_c),
                "omega_th": f"{r.value:.6g}",
                "bracket_lo": f"{lo:.6g}",
                "bracket_hi": f"{hi:.6g}",
                "iters": str(r.iters),
            }
        )

    table.echo()

    if csv_path:
        write_csv_rows(csv_path, RATE_CSV_COLUMNS, rows)
        manifest.write([csv_path])
