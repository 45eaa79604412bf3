import logging

import numpy as np
import pytest

from bundlegt.graph import build_graph, derive_params, fig1_graph
from bundlegt.model import compute_syndrome


@pytest.fixture(autouse=True)
def log_dir(tmp_path, monkeypatch):
    """Keeps log files of CLI runs out of the user's log directory."""
    path = tmp_path / "logs"
    monkeypatch.setenv("BUNDLEGT_LOG_DIR", str(path))
    yield path
    logging.getLogger("bundlegt").handlers.clear()


@pytest.fixture
def fig1():
    return fig1_graph()


@pytest.fixture
def small_params():
    return derive_params(120, 2, 4, 2, 8)


@pytest.fixture
def small_graph(small_params):
    return build_graph(small_params, seed=7)


@pytest.fixture
def item_only_params():
    return derive_params(60, 1, 3, 3, 6)


def population(n, defectives):
    x = np.zeros(n, dtype=np.int8)
    x[list(defectives)] = 1
    return x


def syndrome_for(graph, defectives):
    return compute_syndrome(graph, population(graph.params.n, defectives))
