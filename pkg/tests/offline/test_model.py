import numpy as np
import pytest

from bundlegt.exceptions import DimensionError, ParameterError
from bundlegt.graph import incidence_matrix
from bundlegt.model import (
    bundle_values,
    compute_syndrome,
    load_vector,
    sample_population,
    save_vector,
    trial_seed,
)

from .conftest import population


def test_sample_population_deterministic():
    a = sample_population(1000, 0.1, seed=42)
    b = sample_population(1000, 0.1, seed=42)

    assert np.array_equal(a.x, b.x)
    assert a.n == 1000
    assert 50 < a.defectives < 150


@pytest.mark.parametrize("gamma", [0.0, 1.0])
def test_sample_population_extremes(gamma):
    pop = sample_population(50, gamma, seed=0)
    assert pop.defectives == 50 * gamma


def test_sample_population_invalid():
    with pytest.raises(ParameterError):
        sample_population(10, 1.5)


def test_populations_are_nested():
    # the same trial seed at a higher defect probability only adds defectives
    low = sample_population(5000, 0.005, trial_seed(3, 11))
    high = sample_population(5000, 0.008, trial_seed(3, 11))

    assert np.all(high.x >= low.x)


def test_trial_seed_independent_of_order():
    a = np.random.default_rng(trial_seed(9, 4)).random()
    b = np.random.default_rng(trial_seed(9, 4)).random()
    c = np.random.default_rng(trial_seed(9, 5)).random()

    assert a == b
    assert a != c


def test_syndrome_fig1(fig1):
    # item 3 is defective: bundle 1 holds one defective
    s = compute_syndrome(fig1, population(8, [3]))

    assert s.m_z == 4
    assert s.s_z.tolist() == [0, 1, 0, 1]
    assert s.s_x.tolist() == [0, 1]
    assert len(s) == 6


def test_syndrome_matches_matrix_product(small_graph):
    x = sample_population(small_graph.params.n, 0.1, seed=3).x
    s = compute_syndrome(small_graph, x)

    assert np.array_equal(s.s, incidence_matrix(small_graph) @ x.astype(np.int64))


def test_bundle_values(fig1):
    z = bundle_values(fig1, population(8, [0, 1, 5]))
    assert z.tolist() == [2, 0, 1, 0]


def test_wrong_length(fig1):
    with pytest.raises(DimensionError):
        compute_syndrome(fig1, np.zeros(7))


def test_vector_files(tmp_path):
    path = str(tmp_path / "x.json")
    save_vector(path, np.array([0, 1, 1, 0], dtype=np.int8))

    assert load_vector(path).tolist() == [0, 1, 1, 0]
    assert load_vector(path, 4).dtype == np.int64

    with pytest.raises(DimensionError):
        load_vector(path, 5)


@pytest.mark.parametrize("content", ["[0, 1.5]", '{"x": 1}', "[true]", "nope"])
def test_invalid_vector_files(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)

    with pytest.raises(DimensionError):
        load_vector(str(path))


@pytest.mark.parametrize(
    ("defectives", "expected"),
    [([0], [1, 0, 1, 0, 1, 0]), ([0, 1], [2, 0, 2, 0, 1, 1])],
)
def test_syndrome_examples(fig1, defectives, expected):
    assert compute_syndrome(fig1, population(8, defectives)).s.tolist() == expected
