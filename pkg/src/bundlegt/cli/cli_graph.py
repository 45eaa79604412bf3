"""
Commands to build, inspect and decode individual test graphs.
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
    seed_option,
    start_manifest,
    verbose_option,
)
from .core import Percent
from .output import Table, info, ok, warn


@click.command(help="Draw a random graph from the bundle-augmented ensemble.")
@graph_options
@seed_option
@click.option(
    "--distinct-bundles/--no-distinct-bundles",
    default=None,
    help="Forbid two items of the same bundle in one item-level test.",
)
@click.option(
    "--example",
    is_flag=True,
    default=False,
    help="Write the fixed 8-item example graph instead of a random one.",
)
@click.option(
    "--output",
    "-o",
    type=click.Path(dir_okay=False, writable=True),
    required=True,
    help="Path of the graph JSON file.",
)
@click.option(
    "--mtx",
    type=click.Path(dir_okay=False, writable=True),
    help="Also write the test matrix in Matrix Market format.",
)
@config_option
@verbose_option
@convert_errors
def gen_graph(
    n: int | None,
    q: int | None,
    dv: int | None,
    dvx: int | None,
    dc: int | None,
    seed: int | None,
    distinct_bundles: bool | None,
    example: bool,
    output: str,
    mtx: str | None,
    config_path: str | None,
    verbose: bool,
) -> None:

    from ..graph import build_graph, fig1_graph, save_graph, write_matrix_market

    conf = load_config(
        config_path,
        verbose,
        app={"seed": seed},
        graph={
            "n": n,
            "q": q,
            "d_v": dv,
            "d_vx": dvx,
            "d_c": dc,
            "distinct_bundles_per_test": distinct_bundles,
        },
    )

    if example:
        master_seed = None
        graph = fig1_graph()
    else:
        master_seed = require_seed(conf)
        graph = build_graph(
            params_from_config(conf),
            seed=master_seed,
            distinct_bundles_per_test=conf.get("graph", "distinct_bundles_per_test"),
            repair_factor=conf.get("graph", "repair_factor"),
        )

    manifest = start_manifest("gen-graph", conf, master_seed)
    outputs = [output]

    save_graph(graph, output)

    if mtx:
        write_matrix_market(graph, mtx)
        outputs.append(mtx)

    manifest.write(outputs)

    p = graph.params
    ok(
        f"Wrote graph with {p.n} items, {p.n_h} bundles, {p.m_x} item-level and "
        f"{p.m_z} bundle-level tests to {output}"
    )


@click.command(help="Check degrees, parallel edges and bundles of a graph file.")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--distinct-bundles",
    is_flag=True,
    default=False,
    help="Also report item-level tests with two items of the same bundle.",
)
@convert_errors
def validate_graph(path: str, distinct_bundles: bool) -> None:

    from ..exceptions import GraphFormatError
    from ..graph import read_graph_document, validate_graph as validate

    report = validate(read_graph_document(path), distinct_bundles)

    if report.ok:
        ok(f"{path} is a valid graph")
        return

    for finding in report.findings:
        warn(str(finding))

    raise GraphFormatError(
        "Invalid graph", f"{len(report)} violations of kinds {sorted(report.kinds())}."
    )


@click.command(help="Draw a population for a graph and compute its test results.")
@click.option(
    "--graph",
    "graph_path",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Graph JSON file.",
)
@click.option("--gamma", type=Percent(), required=True, help="Defect probability in %.")
@seed_option
@click.option(
    "--population",
    type=click.Path(dir_okay=False, writable=True),
    required=True,
    help="Output path of the defect indicators (JSON array).",
)
@click.option(
    "--syndrome",
    type=click.Path(dir_okay=False, writable=True),
    required=True,
    help="Output path of the test results (JSON array).",
)
@config_option
@verbose_option
@convert_errors
def sample(
    graph_path: str,
    gamma: float,
    seed: int | None,
    population: str,
    syndrome: str,
    config_path: str | None,
    verbose: bool,
) -> None:

    from ..graph import load_graph
    from ..model import compute_syndrome, sample_population, save_vector
    from ..utils import pct_to_fraction

    conf = load_config(config_path, verbose, app={"seed": seed})
    master_seed = require_seed(conf)
    manifest = start_manifest("sample", conf, master_seed)

    graph = load_graph(graph_path)
    pop = sample_population(graph.params.n, pct_to_fraction(gamma), master_seed)
    s = compute_syndrome(graph, pop.x)

    save_vector(population, pop.x)
    save_vector(syndrome, s.s)
    manifest.write([population, syndrome])

    ok(f"Sampled {pop.defectives} defectives among {pop.n} items")


@click.command(
    help="""
Decode test results with bound propagation.

Prints bounds, the declared set and, given --truth, scores as JSON unless --output is
given, in which case the JSON goes to the file and a summary is printed. Exits with
code 3 if the decoder reaches the iteration cap without a fixed point.
"""
)
@click.option(
    "--graph",
    "graph_path",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Graph JSON file.",
)
@click.option(
    "--syndrome",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Test results (JSON array), bundle-level tests first.",
)
@click.option(
    "--truth",
    type=click.Path(exists=True, dir_okay=False),
    help="True defect indicators (JSON array) to score the result against.",
)
@click.option(
    "--max-iters", type=click.IntRange(min=1), help="Iteration cap. Defaults to 200."
)
@click.option(
    "--output",
    "-o",
    type=click.Path(dir_okay=False, writable=True),
    help="Write the JSON result to a file and print a summary instead.",
)
@config_option
@verbose_option
@convert_errors
def decode(
    graph_path: str,
    syndrome: str,
    truth: str | None,
    max_iters: int | None,
    output: str | None,
    config_path: str | None,
    verbose: bool,
) -> None:

    import json
    from dataclasses import asdict

    from ..constants import EXIT_NOT_CONVERGED
    from ..decoder import classify, decode as run_decoder
    from ..graph import load_graph
    from ..model import load_vector

    conf = load_config(config_path, verbose, decoder={"max_iters": max_iters})
    manifest = start_manifest("decode", conf)

    graph = load_graph(graph_path)
    s = load_vector(syndrome, graph.params.m)
    x = load_vector(truth, graph.params.n) if truth else None

    cap = conf.get("decoder", "max_iters")
    outcome = run_decoder(graph, s, max_iters=cap)
    metrics = classify(outcome, x)

    data = outcome.to_dict()
    data["metrics"] = asdict(metrics)

    if not output:
        click.echo(json.dumps(data, indent=2))
        if not outcome.converged:
            warn(f"No fixed point within {cap} iterations", err=True)
            sys.exit(EXIT_NOT_CONVERGED)
        return

    with open(output, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
        f.write("\n")
    manifest.write([output])

    table = Table(
        ["iterations", "declared", "unresolved", "misdetection", "false alarms"]
    )
    table.append(
        [
            outcome.iterations,
            len(outcome.declared),
            metrics.unresolved,
            metrics.misdetection_rate,
            metrics.false_alarm_rate,
        ]
    )
    table.echo()

    if len(outcome.declared) <= 20:
        info(f"Declared defective: {outcome.declared.tolist()}")

    if not outcome.converged:
        warn(f"No fixed point within {cap} iterations")
        sys.exit(EXIT_NOT_CONVERGED)
