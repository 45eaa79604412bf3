import itertools
import math

import numpy as np
import pytest

from bundlegt.de.pmf import (
    CondPmf,
    binomial_pmf,
    cdf,
    delta,
    enumerate_multisets,
    multinomial_logweight,
    order_stat_max,
    order_stat_min,
    pmf_convolve,
    pmf_max2,
    pmf_min2,
    pmf_power,
    syndrome_cutoff,
)


PMFS = [
    np.array([0.2, 0.5, 0.3]),
    np.array([0.0, 0.0, 1.0]),
    np.array([0.1, 0.2, 0.3, 0.4]),
    np.array([0.7, 0.0, 0.0, 0.3]),
]


def brute_force(pmfs, op):
    """Pmf of ``op`` applied to independent variables with the given pmfs."""
    size = len(pmfs[0])
    out = np.zeros(size)
    for values in itertools.product(range(size), repeat=len(pmfs)):
        prob = math.prod(p[v] for p, v in zip(pmfs, values))
        out[op(values)] += prob
    return out


# ==== elementary operations ===========================================================


def test_delta_and_cdf():
    assert delta(2, 4).tolist() == [0, 0, 1, 0]
    assert cdf(np.array([0.5, 0.5, 0.5])).tolist() == [0.5, 1.0, 1.0]


def test_convolve_sizes():
    a = np.array([0.5, 0.5])

    assert pmf_convolve(a, a).tolist() == [0.25, 0.5, 0.25]
    assert pmf_convolve(a, a, 2).tolist() == [0.25, 0.5]
    assert pmf_convolve(a, a, 5).tolist() == [0.25, 0.5, 0.25, 0.0, 0.0]


@pytest.mark.parametrize("k", [0, 1, 2, 3, 5])
def test_power(k):
    p = np.array([0.6, 0.3, 0.1])
    expected = np.ones(1)
    for _ in range(k):
        expected = np.convolve(expected, p)

    assert np.allclose(pmf_power(p, k), expected)
    assert np.allclose(pmf_power(p, k, 4), np.pad(expected, (0, 12))[:4])


@pytest.mark.parametrize("a", PMFS[:2])
@pytest.mark.parametrize("b", PMFS[:2])
def test_max2_min2(a, b):
    assert np.allclose(pmf_max2(a, b), brute_force([a, b], max))
    assert np.allclose(pmf_min2(a, b), brute_force([a, b], min))


def test_max2_min2_rows():
    table = np.stack(PMFS[2:])
    other = PMFS[2]

    expected_max = np.stack([brute_force([row, other], max) for row in table])
    expected_min = np.stack([brute_force([row, other], min) for row in table])

    assert np.allclose(pmf_max2(table, other), expected_max)
    assert np.allclose(pmf_min2(table, other), expected_min)


@pytest.mark.parametrize("p", PMFS)
@pytest.mark.parametrize("k", [1, 2, 3])
def test_order_statistics(p, k):
    assert np.allclose(order_stat_max(p, k), brute_force([p] * k, max))
    assert np.allclose(order_stat_min(p, k), brute_force([p] * k, min))


def test_order_statistics_empty():
    p = PMFS[0]

    assert order_stat_max(p, 0).tolist() == [1, 0, 0]
    assert order_stat_min(p, 0).tolist() == [0, 0, 1]


def test_binomial_pmf():
    p = binomial_pmf(3, 0.5)
    assert np.allclose(p, [0.125, 0.375, 0.375, 0.125])


# ==== syndrome truncation =============================================================


def test_syndrome_cutoff():
    assert syndrome_cutoff(160, 0.01, 1e-6) == 10


def test_syndrome_cutoff_edges():
    assert syndrome_cutoff(20, 0.0, 1e-7) == 0
    assert syndrome_cutoff(20, 1.0, 1e-7) == 20


# ==== multisets =======================================================================


def brute_force_multisets(k, q, t_max):
    found = set()
    for values in itertools.product(range(q + 1), repeat=k):
        if sum(values) <= t_max:
            values = np.array(values, dtype=np.int64)
            found.add(tuple(np.bincount(values, minlength=q + 1)))
    return found


@pytest.mark.parametrize(
    ("k", "q", "t_max"), [(0, 2, 3), (1, 3, 2), (2, 2, 4), (3, 3, 4), (3, 2, 0)]
)
def test_enumerate_multisets(k, q, t_max):
    found = [tuple(c) for c in enumerate_multisets(k, q, t_max)]

    assert len(found) == len(set(found))
    assert set(found) == brute_force_multisets(k, q, t_max)


def test_enumerate_multisets_allowed():
    allowed = np.array([True, False, True])
    found = {tuple(c) for c in enumerate_multisets(2, 2, 4, allowed)}

    assert found == {(2, 0, 0), (1, 0, 1), (0, 0, 2)}


def test_multinomial_weights_sum_to_one():
    p = binomial_pmf(3, 0.2)
    total = sum(
        math.exp(multinomial_logweight(c, np.log(p)))
        for c in enumerate_multisets(4, 3, 12)
    )
    assert total == pytest.approx(1.0)


# ==== conditional pmfs ================================================================


def test_cond_pmf_uninformative():
    L = CondPmf.uninformative(3, "L")
    U = CondPmf.uninformative(3, "U")

    assert L.violations() == []
    assert U.violations() == []
    assert L.resolved().tolist() == [1, 0, 0, 0]
    assert U.resolved().tolist() == [0, 0, 0, 1]


def test_cond_pmf_violations():
    table = np.eye(3)
    table[0] = [0.5, 0.5, 0.0]  # a lower bound above the true value

    problems = CondPmf(table, "L").violations()

    assert problems == ["row 0 has mass outside the valid range"]


def test_cond_pmf_copy():
    a = CondPmf.uninformative(2, "U")
    b = a.copy()
    b.table[0, 0] = 1.0

    assert a.table[0, 0] == 0.0
