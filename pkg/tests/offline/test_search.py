import pytest

from bundlegt.config import RunConfig
from bundlegt.constants import TABLE1_REFERENCE, TABLE1_DV
from bundlegt.de import DeOptions, gamma_threshold, min_rate, table1_thresholds
from bundlegt.exceptions import NoBracket, ParameterError


def test_options_from_config():
    conf = RunConfig()
    conf.set("de", "tolerance_pct", 0.01)
    conf.set("de", "neighbourhood", "edge")

    options = DeOptions.from_config(conf, method="mixture")
    c = options.make_config(5, 7, 2, 140, gamma=0.007)

    assert options.tolerance_pct == 0.01
    assert options.method == "mixture"
    assert c.neighbourhood == "edge"
    assert c.method == "mixture"


@pytest.mark.parametrize(
    "kwargs",
    [
        {"gamma_lo_pct": 1.0, "gamma_hi_pct": 1.0},
        {"gamma_lo_pct": -1.0},
        {"gamma_hi_pct": 101.0},
        {"max_dc_multiple": 1},
    ],
)
def test_options_invalid(kwargs):
    with pytest.raises(ParameterError):
        DeOptions(**kwargs)


def test_no_bracket_upper():
    options = DeOptions(gamma_lo_pct=0.0, gamma_hi_pct=0.001)

    with pytest.raises(NoBracket):
        gamma_threshold(1, 6, 6, 120, options)


def test_no_bracket_lower():
    options = DeOptions(gamma_lo_pct=30.0, gamma_hi_pct=40.0)

    with pytest.raises(NoBracket):
        gamma_threshold(1, 6, 6, 120, options)


@pytest.mark.slow
def test_gamma_threshold_item_only():
    options = DeOptions(tolerance_pct=0.005)
    result = gamma_threshold(1, 6, 6, 120, options)

    lo, hi = result.bracket

    assert result.kind == "gamma"
    assert result.value == lo
    assert hi - lo <= 0.005
    assert result.value == pytest.approx(0.646, abs=0.005)
    assert result.to_dict()["bracket"] == [lo, hi]


@pytest.mark.slow
def test_gamma_threshold_parallel_rounds():
    options = DeOptions(tolerance_pct=0.005)

    serial = gamma_threshold(1, 6, 6, 120, options)
    parallel = gamma_threshold(1, 6, 6, 120, options, jobs=3)

    assert abs(serial.value - parallel.value) <= 0.005


@pytest.mark.slow
def test_min_rate():
    result = min_rate(0.5, 1, 6, 6)

    assert result.kind == "omega"
    assert result.d_c > 120
    assert result.value < 5.0
    assert result.bracket[0] < result.bracket[1] == result.value


@pytest.mark.slow
@pytest.mark.parametrize(
    ("q", "d_v", "tol"),
    [(1, 6, 0.005), (4, 6, 0.005), (5, 4, 0.005), (5, 7, 0.005), (10, 7, 0.01)],
)
def test_table1_cells(q, d_v, tol):
    (entry,) = table1_thresholds([q], [d_v], DeOptions(tolerance_pct=0.002))
    expected = TABLE1_REFERENCE[q][TABLE1_DV.index(d_v)]

    assert entry.result.d_c == 20 * d_v
    assert entry.result.value == pytest.approx(expected, abs=tol)


@pytest.mark.slow
def test_threshold_insensitive_to_tail_truncation():
    coarse = DeOptions(eps_tail=1e-7, tolerance_pct=0.002)
    fine = DeOptions(eps_tail=1e-9, tolerance_pct=0.002)

    a = gamma_threshold(5, 7, 2, 140, coarse)
    b = gamma_threshold(5, 7, 2, 140, fine)

    assert b.value == pytest.approx(a.value, abs=0.004)
