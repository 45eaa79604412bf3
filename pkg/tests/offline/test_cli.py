import csv
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from bundlegt import __version__
from bundlegt.cli import main
from bundlegt.manifest import load_manifest, manifest_path


SMALL_ENSEMBLE = ["--n", "120", "--q", "2", "--dv", "4", "--dvx", "2", "--dc", "8"]

COMMANDS = [
    "gen-graph",
    "validate-graph",
    "sample",
    "decode",
    "de-threshold",
    "de-rate",
    "simulate",
    "crosscheck",
    "reproduce-table1",
    "reproduce-fig3",
]


def invoke(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


@pytest.fixture
def example_graph(tmp_path):
    path = tmp_path / "fig1.json"
    result = invoke("gen-graph", "--example", "-o", path)
    assert result.exit_code == 0, result.output
    return path


# ==== help and version ================================================================


def test_help():
    result = invoke("--help")

    assert result.exit_code == 0, result.output
    assert result.output.startswith("Usage: main [OPTIONS] COMMAND [ARGS]")

    for section in ("Graphs", "Density Evolution", "Simulation", "Reproduction"):
        assert f"{section}:" in result.output


@pytest.mark.parametrize("command", COMMANDS)
def test_command_help(command):
    result = invoke(command, "--help")

    assert result.exit_code == 0, result.output
    assert result.output.startswith(f"Usage: main {command} [OPTIONS]")


def test_command_options_match_golden_file():
    golden = Path(__file__).parent / "data" / "cli_surface.txt"
    lines = []

    for name, command in main.commands.items():
        opts = [o for p in command.params for o in (*p.opts, *p.secondary_opts)]
        lines.append(f"{name}: {' '.join(opts)}")

    assert lines == golden.read_text().splitlines()


def test_version():
    result = invoke("--version")

    assert result.exit_code == 0
    assert result.output == f"{__version__}\n"


def test_unknown_option():
    result = invoke("simulate", "--no-such-flag")
    assert result.exit_code == 1


# ==== graphs ==========================================================================


def test_gen_graph_and_validate(tmp_path):
    graph = tmp_path / "graph.json"
    mtx = tmp_path / "graph.mtx"

    result = invoke(
        "gen-graph", *SMALL_ENSEMBLE, "--seed", 7, "-o", graph, "--mtx", mtx
    )

    assert result.exit_code == 0, result.output
    assert graph.is_file()
    assert mtx.is_file()

    manifest = load_manifest(manifest_path(str(graph)))

    assert manifest["subcommand"] == "gen-graph"
    assert manifest["seed"] == 7
    assert set(manifest["outputs"]) == {"graph.json", "graph.mtx"}

    result = invoke("validate-graph", graph)

    assert result.exit_code == 0, result.output
    assert "is a valid graph" in result.output


def test_gen_graph_from_config(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(
        json.dumps(
            {
                "app": {"seed": 3},
                "graph": {"n": 120, "q": 2, "d_v": 4, "d_vx": 2, "d_c": 8},
            }
        )
    )
    graph = tmp_path / "graph.json"

    result = invoke("gen-graph", "--config", config, "-o", graph)

    assert result.exit_code == 0, result.output
    assert json.loads(graph.read_text())["seed"] == 3


def test_gen_graph_requires_seed(tmp_path):
    result = invoke("gen-graph", *SMALL_ENSEMBLE, "-o", tmp_path / "graph.json")

    assert result.exit_code == 1
    assert "--seed" in result.output


def test_gen_graph_divisibility(tmp_path):
    result = invoke(
        "gen-graph",
        *["--n", "8", "--q", "3", "--dv", "3", "--dvx", "1", "--dc", "4"],
        *["--seed", "1", "-o", tmp_path / "graph.json"],
    )

    assert result.exit_code == 1
    assert "q=3 does not divide d_c=4" in result.output
    assert not (tmp_path / "graph.json").exists()


def test_validate_damaged_graph(tmp_path, example_graph):
    doc = json.loads(example_graph.read_text())
    doc["cn_x"][0][1] = 0
    damaged = tmp_path / "damaged.json"
    damaged.write_text(json.dumps(doc))

    result = invoke("validate-graph", damaged)

    assert result.exit_code == 1
    assert "parallel" in result.output


def test_sample_and_decode(tmp_path, example_graph):
    population = tmp_path / "x.json"
    syndrome = tmp_path / "s.json"
    output = tmp_path / "decoded.json"

    result = invoke(
        "sample",
        *["--graph", example_graph, "--gamma", "20", "--seed", "1"],
        *["--population", population, "--syndrome", syndrome],
    )

    assert result.exit_code == 0, result.output
    assert len(json.loads(syndrome.read_text())) == 6

    result = invoke(
        "decode",
        *["--graph", example_graph, "--syndrome", syndrome],
        *["--truth", population, "-o", output],
    )

    assert result.exit_code == 0, result.output

    data = json.loads(output.read_text())

    assert data["metrics"]["false_alarms"] == 0
    assert (tmp_path / "decoded.json.manifest.json").is_file()


def test_decode_wrong_length(tmp_path, example_graph):
    syndrome = tmp_path / "s.json"
    syndrome.write_text("[0, 0, 0]")

    result = invoke("decode", "--graph", example_graph, "--syndrome", syndrome)

    assert result.exit_code == 1


def test_decode_inconsistent(tmp_path, example_graph):
    syndrome = tmp_path / "s.json"
    syndrome.write_text("[0, 0, 0, 0, 2, 0]")

    result = invoke("decode", "--graph", example_graph, "--syndrome", syndrome)

    assert result.exit_code == 2


def test_decode_prints_json(tmp_path, example_graph):
    syndrome = tmp_path / "s.json"
    syndrome.write_text("[0, 0, 0, 0, 0, 0]")

    result = invoke("decode", "--graph", example_graph, "--syndrome", syndrome)

    assert result.exit_code == 0, result.output

    data = json.loads(result.output)

    assert data["converged"] is True
    assert data["declared"] == []
    assert set(data["item_U"]) == {0}
    assert not (tmp_path / "s.json.manifest.json").exists()


def test_decode_iteration_cap(tmp_path, example_graph):
    syndrome = tmp_path / "s.json"
    syndrome.write_text("[0, 0, 0, 0, 0, 0]")

    result = invoke(
        "decode", "--graph", example_graph, "--syndrome", syndrome, "--max-iters", 1
    )

    assert result.exit_code == 3
    assert "No fixed point within 1 iterations" in result.output


def test_decode_help_names_exit_code():
    result = invoke("decode", "--help")
    assert "code 3" in " ".join(result.output.split())


# ==== density evolution ===============================================================


def test_de_threshold_rate_mismatch():
    result = invoke(
        "de-threshold", *["--q", "1", "--dv", "6", "--dc", "100", "--omega", "5"]
    )

    assert result.exit_code == 1
    assert "does not match the rate" in result.output


def test_de_threshold_fractional_degree():
    result = invoke("de-threshold", "--q", "1", "--dv", "7", "--omega", "3")
    assert result.exit_code == 1


def test_de_threshold_no_bracket():
    result = invoke(
        "de-threshold",
        *["--q", "1", "--dv", "6", "--omega", "5"],
        *["--gamma-lo", "30", "--gamma-hi", "40"],
    )

    assert result.exit_code == 2
    assert "Cannot bracket the threshold" in result.output


def test_de_threshold_missing_degree():
    result = invoke("de-threshold", "--q", "1", "--dv", "6")

    assert result.exit_code == 1
    assert "--dc" in result.output


def test_de_rate_rejects_test_degree():
    result = invoke(
        "de-rate", *["--q", "1", "--dv", "6", "--dc", "120"], *["--gamma", "1"]
    )
    assert result.exit_code == 1


def test_de_threshold_invalid_neighbourhood():
    args = ["--q", "1", "--dv", "6", "--dc", "120", "--neighbourhood", "graph"]
    result = invoke("de-threshold", *args)
    assert result.exit_code == 1


@pytest.mark.slow
def test_de_threshold_csv(tmp_path):
    path = tmp_path / "threshold.csv"

    result = invoke(
        "de-threshold",
        *["--q", "1", "--dv", "6", "--omega", "5", "--tolerance", "0.005"],
        *["--csv", path],
    )

    assert result.exit_code == 0, result.output

    with open(path, newline="") as f:
        (row,) = csv.DictReader(f)

    assert row["d_c"] == "120"
    assert float(row["gamma_th"]) == pytest.approx(0.646, abs=0.005)


# ==== simulation ======================================================================


def test_simulate(tmp_path):
    csv_path = tmp_path / "sim.csv"
    json_path = tmp_path / "sim.json"

    result = invoke(
        "simulate",
        *SMALL_ENSEMBLE,
        *["--gamma", "2,5", "--trials", "5", "--seed", "1"],
        *["--csv", csv_path, "--json", json_path],
    )

    assert result.exit_code == 0, result.output

    with open(csv_path, newline="") as f:
        rows = list(csv.DictReader(f))

    assert [r["gamma"] for r in rows] == ["2", "5"]

    data = json.loads(json_path.read_text())

    assert data["run_config"]["app"]["seed"] == 1
    assert data["run_config"]["sim"]["gamma_pct"] == [2.0, 5.0]
    assert load_manifest(manifest_path(str(csv_path)))["subcommand"] == "simulate"


def test_simulate_repeats_warnings():
    result = invoke(
        "simulate",
        *SMALL_ENSEMBLE,
        *["--gamma", "20", "--trials", "3", "--seed", "1", "--max-iters", "1"],
    )

    assert result.exit_code == 0, result.output

    summary = result.output.split("Warnings during this run:")[1]
    assert "reached the iteration cap of 1" in summary


def test_simulate_empty_grid():
    result = invoke("simulate", *SMALL_ENSEMBLE, "--seed", "1")

    assert result.exit_code == 0, result.output
    assert "nothing to simulate" in result.output


def test_simulate_invalid_gamma():
    result = invoke("simulate", *SMALL_ENSEMBLE, "--seed", "1", "--gamma", "0")
    assert result.exit_code == 1


def test_crosscheck_initial_messages(tmp_path):
    json_path = tmp_path / "crosscheck.json"

    result = invoke(
        "crosscheck",
        *["--n", "2000", "--q", "2", "--dv", "3", "--dvx", "1", "--dc", "20"],
        *["--gamma", "1", "--ell", "0", "--trials", "1", "--seed", "3"],
        *["--json", json_path],
    )

    assert result.exit_code == 0, result.output
    assert "PASS" in result.output
    assert json.loads(json_path.read_text())["verdict"] == "PASS"


# ==== reproduction ====================================================================


def test_reproduce_table1_invalid_subset():
    result = invoke("reproduce-table1", "--q", "3")

    assert result.exit_code == 1
    assert "subset" in result.output


def test_reproduce_fig3_requires_output_dir():
    result = invoke("reproduce-fig3", "--seed", "1")
    assert result.exit_code == 1
