import json

import numpy as np
import pytest
from scipy.io import mmread

from bundlegt.exceptions import (
    ConstructionError,
    DivisibilityError,
    GraphFormatError,
    ParameterError,
)
from bundlegt.graph import (
    AugmentedGraph,
    build_graph,
    derive_params,
    flatten_to_test_matrix,
    incidence_matrix,
    load_graph,
    save_graph,
    validate_graph,
    write_matrix_market,
)


# ==== parameters ======================================================================


def test_derive_params_fig1():
    p = derive_params(8, 2, 3, 1, 4)

    assert (p.d_vz, p.d_cz, p.n_h) == (2, 2, 4)
    assert (p.m_x, p.m_z, p.m) == (2, 4, 6)


def test_derive_params_finite_length():
    p = derive_params(210000, 5, 7, 2, 140)

    assert float(p.omega) == 0.05
    assert p.m == 10500


def test_derive_params_item_only():
    p = derive_params(60, 1, 3, 3, 6)

    assert p.d_vz == 0
    assert p.m_z == 0
    assert p.m_x == 30


@pytest.mark.parametrize(
    ("args", "constraint"),
    [
        ((8, 3, 3, 1, 4), "q | d_c"),
        ((10, 4, 3, 1, 8), "q | n"),
        ((8, 2, 3, 1, 6), "d_c | n*d_vx"),
        ((6, 2, 3, 2, 4), "d_cz | n_h*d_vz"),
    ],
)
def test_divisibility(args, constraint):
    with pytest.raises(DivisibilityError) as info:
        derive_params(*args)

    assert info.value.constraint == constraint


@pytest.mark.parametrize(
    "args",
    [(0, 1, 1, 1, 1), (8, 2, 3, 4, 4), (8, 2, 3, 1.5, 4), (8, True, 3, 1, 4)],
)
def test_invalid_params(args):
    with pytest.raises(ParameterError):
        derive_params(*args)


# ==== construction ====================================================================


def test_fig1_layout(fig1):
    assert fig1.cn_x.shape == (2, 4)
    assert fig1.cn_z.shape == (4, 2)
    assert validate_graph(fig1).ok
    assert fig1.bundle_items.tolist() == [[0, 1], [2, 3], [4, 5], [6, 7]]


def test_build_graph_degrees(small_params):
    graph = build_graph(small_params, seed=1)
    p = small_params

    assert validate_graph(graph).ok
    assert np.all(np.bincount(graph.cn_x.ravel(), minlength=p.n) == p.d_vx)
    assert np.all(np.bincount(graph.cn_z.ravel(), minlength=p.n_h) == p.d_vz)


def test_build_graph_deterministic(small_params):
    a = build_graph(small_params, seed=3)
    b = build_graph(small_params, seed=3)
    c = build_graph(small_params, seed=4)

    assert np.array_equal(a.cn_x, b.cn_x)
    assert np.array_equal(a.cn_z, b.cn_z)
    assert not np.array_equal(a.cn_x, c.cn_x)


def test_build_graph_distinct_bundles(small_params):
    graph = build_graph(small_params, seed=5, distinct_bundles_per_test=True)

    assert validate_graph(graph, distinct_bundles_per_test=True).ok
    for row in graph.cn_x:
        assert len(set(graph.bundle_of[row])) == len(row)


def test_build_graph_impossible():
    # a test needs 4 distinct bundles but only 2 exist
    params = derive_params(4, 2, 2, 2, 4)

    with pytest.raises(ConstructionError):
        build_graph(params, seed=0, distinct_bundles_per_test=True)


def test_graph_is_immutable(fig1):
    with pytest.raises(ValueError):
        fig1.cn_x[0, 0] = 5


# ==== flattening ======================================================================


def test_flatten_fig1(fig1):
    rows = flatten_to_test_matrix(fig1)

    assert rows.shape == (6, 4)
    # bundle-level test 0 joins bundles 0 and 3
    assert rows[0].tolist() == [0, 1, 6, 7]
    assert rows[4].tolist() == [0, 2, 4, 6]


def test_incidence_matrix(small_graph):
    A = incidence_matrix(small_graph)
    p = small_graph.params

    assert A.shape == (p.m, p.n)
    assert np.all(np.asarray(A.sum(axis=1)).ravel() == p.d_c)
    assert np.all(np.asarray(A.sum(axis=0)).ravel() == p.d_v)


def test_matrix_market(tmp_path, fig1):
    path = str(tmp_path / "fig1.mtx")
    write_matrix_market(fig1, path)

    A = mmread(path).tocsr()
    assert (A != incidence_matrix(fig1)).nnz == 0


# ==== validation and io ===============================================================


def test_round_trip(tmp_path, small_graph):
    path = str(tmp_path / "graph.json")
    save_graph(small_graph, path)
    loaded = load_graph(path)

    assert loaded.params == small_graph.params
    assert loaded.seed == 7
    assert np.array_equal(loaded.cn_x, small_graph.cn_x)
    assert np.array_equal(loaded.cn_z, small_graph.cn_z)


def test_validate_reports_damage(fig1):
    doc = fig1.to_dict()
    doc["cn_x"][0][1] = 0  # parallel edge, item 2 loses a test
    doc["cn_z"][0] = [0, 9]

    report = validate_graph(doc)

    assert not report.ok
    assert {"parallel", "degree", "range"} <= report.kinds()


def test_validate_collision(fig1):
    doc = fig1.to_dict()
    doc["cn_x"] = [[0, 1, 4, 6], [2, 3, 5, 7]]

    assert validate_graph(doc).ok
    assert validate_graph(doc, distinct_bundles_per_test=True).kinds() == {"collision"}


def test_from_adjacency_rejects_invalid(fig1):
    with pytest.raises(GraphFormatError):
        AugmentedGraph.from_adjacency(
            fig1.params, [[0, 0, 4, 6], [1, 3, 5, 7]], fig1.cn_z
        )


def test_load_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")

    with pytest.raises(GraphFormatError):
        load_graph(str(path))


def test_load_missing_field(tmp_path, fig1):
    doc = fig1.to_dict()
    del doc["cn_z"]
    path = tmp_path / "partial.json"
    path.write_text(json.dumps(doc))

    with pytest.raises(GraphFormatError):
        load_graph(str(path))
