from dataclasses import replace

import numpy as np
import pytest

from bundlegt.de import (
    DeConfig,
    DensityEvolution,
    de_bundle_side,
    de_item_bundle,
    de_iterate,
    de_test_bundle,
    de_test_item,
)
from bundlegt.exceptions import DivisibilityError, ParameterError


def config(**kwargs):
    values = dict(q=2, gamma=0.02, d_v=3, d_vx=1, d_c=8)
    values.update(kwargs)
    return DeConfig(**values)


# ==== configuration ===================================================================


def test_config_derived_values():
    c = config(q=5, d_v=7, d_vx=2, d_c=140)

    assert c.d_vz == 5
    assert c.d_cz == 28
    assert c.omega == 0.05


def test_config_divisibility():
    with pytest.raises(DivisibilityError) as info:
        config(q=3, d_c=8)

    assert info.value.constraint == "q | d_c"


@pytest.mark.parametrize(
    "kwargs",
    [
        {"d_vx": 4},
        {"gamma": -0.1},
        {"gamma": 1.5},
        {"d_v": 0},
        {"eps_tail": 0.0},
        {"delta_success": 1.0},
        {"tolerance_pct": 0.0},
        {"method": "guess"},
        {"neighbourhood": "graph"},
    ],
)
def test_config_invalid(kwargs):
    with pytest.raises(ParameterError):
        config(**kwargs)


# ==== single updates ==================================================================


def test_first_item_test_update():
    c = config(q=1, gamma=0.01, d_v=6, d_vx=6, d_c=120)
    de = DensityEvolution(c)

    pL_cx, pU0_cx = de_test_item(de)

    # without any information from other items, a test confirms a defective item only
    # if all other items are defective, and clears a non-defective item only if all
    # other items are non-defective
    assert pL_cx == pytest.approx(0.01**119)
    assert pU0_cx == pytest.approx(0.99**119)


def test_first_bundle_test_update():
    de = DensityEvolution(config(gamma=0.0, neighbourhood="edge"))
    L, U = de_test_bundle(de)

    # all other bundles are empty and their lower bounds are exact
    assert U.table[0, 0] == pytest.approx(1.0)
    assert U.table[1, 1] == pytest.approx(1.0)
    assert L.violations() == []
    assert U.violations() == []


@pytest.mark.parametrize("method", ["enumerate", "mixture"])
def test_bundle_values_absent_from_tests(method):
    de = DensityEvolution(config(gamma=0.0, method=method, neighbourhood="test"))
    L, U = de_test_bundle(de)

    # no test contains a defective bundle, those rows carry no information
    assert U.table[0, 0] == pytest.approx(1.0)
    assert U.table[1, 2] == pytest.approx(1.0)
    assert L.table[2, 0] == pytest.approx(1.0)


def test_test_item_update_with_cleared_items():
    c = config(q=1, gamma=0.01, d_v=6, d_vx=6, d_c=120)
    de = DensityEvolution(c)
    de.state.pU0_xc = 1.0
    de.state.pL_xc = 0.0

    de.update_cx_to_x()

    # every other item is cleared, so a defective item is always confirmed, while a
    # non-defective item is cleared only if no other item is defective
    assert de.state.pL_cx == 1.0
    assert de.state.pU0_cx == pytest.approx(0.99**119)


def test_bundle_side_with_resolved_items():
    de = DensityEvolution(config())
    de.state.pL_xf = 1.0
    de.state.pU0_xf = 1.0

    de_bundle_side(de)

    # item sums are exact and pin every bundle regardless of the test messages
    assert np.allclose(de.state.L_fz.table, np.eye(3))
    assert np.allclose(de.state.U_fz.table, np.eye(3))
    assert np.allclose(de.state.L_zc.table, np.eye(3))
    assert np.allclose(de.state.U_zc.table, np.eye(3))
    assert np.allclose(de.state.L_zf.table[:, 0], 1.0)


def test_bundle_side_without_item_information():
    de = DensityEvolution(config())

    de_bundle_side(de)

    assert np.allclose(de.state.L_zc.table[:, 0], 1.0)
    assert np.allclose(de.state.U_zc.table[:, 2], 1.0)


def test_item_only_ensemble_ignores_bundles():
    de = DensityEvolution(config(q=1, d_v=3, d_vx=3, d_c=6))
    de.step()

    assert de_item_bundle(de) == (0.0, 0.0)
    assert de.state.L_cz.table.tolist() == [[1.0, 0.0], [1.0, 0.0]]


# ==== recursion =======================================================================


def test_zero_defect_probability():
    result = de_iterate(config(gamma=0.0))

    assert result.success
    assert result.iterations == 1
    assert result.residual_L == 0.0
    assert result.residual_U == 0.0


@pytest.mark.parametrize("neighbourhood", ["test", "edge"])
@pytest.mark.parametrize("method", ["enumerate", "mixture"])
def test_no_violations(method, neighbourhood):
    de = DensityEvolution(config(method=method, neighbourhood=neighbourhood))

    for _ in range(10):
        de.step()
        assert de.violations() == []


def test_residuals_are_monotone():
    c = config(gamma=0.03, method="mixture")
    result = de_iterate(c, trajectory=True, max_iters=15)
    residuals = []

    for state in result.trajectory:
        de = DensityEvolution(result.config)
        de.state = state
        residuals.append(de.residuals())

    for (l0, u0), (l1, u1) in zip(residuals, residuals[1:]):
        assert l1 <= l0 + 1e-12
        assert u1 <= u0 + 1e-12


@pytest.mark.parametrize("neighbourhood", ["test", "edge"])
def test_every_family_is_monotone(neighbourhood):
    c = config(gamma=0.04, method="mixture", neighbourhood=neighbourhood)
    states = de_iterate(c, trajectory=True, max_iters=12).trajectory

    for before, after in zip(states, states[1:]):
        for key, value in after.item_probs().items():
            assert value >= before.item_probs()[key] - 1e-12, key

        # lower bounds move up and upper bounds move down in distribution
        for (name, p0), (_, p1) in zip(before.cond_pmfs(), after.cond_pmfs()):
            if name.startswith("L"):
                t0 = np.cumsum(p0.table[:, ::-1], axis=1)
                t1 = np.cumsum(p1.table[:, ::-1], axis=1)
            else:
                t0 = np.cumsum(p0.table, axis=1)
                t1 = np.cumsum(p1.table, axis=1)
            assert np.all(t1 >= t0 - 1e-12), name


@pytest.mark.parametrize("neighbourhood", ["test", "edge"])
def test_methods_agree(neighbourhood):
    c = config(gamma=0.05, eps_tail=1e-12, neighbourhood=neighbourhood)
    a = DensityEvolution(c)
    b = DensityEvolution(replace(c, method="mixture"))

    assert a.tail_mass < 1e-10

    for _ in range(5):
        a.step()
        b.step()

    for (name, pa), (_, pb) in zip(a.state.cond_pmfs(), b.state.cond_pmfs()):
        assert np.allclose(pa.table, pb.table, atol=1e-9), name

    for key, value in a.state.item_probs().items():
        assert value == pytest.approx(b.state.item_probs()[key], abs=1e-9), key


def test_tail_truncation_is_small():
    coarse = DensityEvolution(config(gamma=0.05, eps_tail=1e-7))
    fine = DensityEvolution(config(gamma=0.05, eps_tail=1e-9))

    assert coarse.tail_mass <= 1e-7
    assert fine.tail_mass <= 1e-9
    assert fine.t_max >= coarse.t_max

    for _ in range(5):
        coarse.step()
        fine.step()

    for (name, pa), (_, pb) in zip(coarse.state.cond_pmfs(), fine.state.cond_pmfs()):
        assert np.allclose(pa.table, pb.table, atol=1e-5), name


def test_trajectory():
    result = de_iterate(config(), trajectory=True, max_iters=4, stop_on_success=False)

    assert len(result.trajectory) == result.iterations + 1
    assert result.trajectory[0].iteration == 0


def test_to_dict():
    data = de_iterate(config(gamma=0.0)).to_dict()

    assert data["success"] is True
    assert data["config"]["q"] == 2


@pytest.mark.slow
@pytest.mark.parametrize(("gamma", "success"), [(0.005, True), (0.007, False)])
def test_item_only_threshold_region(gamma, success):
    result = de_iterate(config(q=1, gamma=gamma, d_v=6, d_vx=6, d_c=120))
    assert result.success is success


@pytest.mark.slow
@pytest.mark.parametrize(("gamma", "success"), [(0.007, True), (0.0085, False)])
def test_bundled_threshold_region(gamma, success):
    result = de_iterate(config(q=5, gamma=gamma, d_v=7, d_vx=2, d_c=140))
    assert result.success is success
