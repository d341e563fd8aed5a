import numpy as np
import pytest

from pdmd.baselines import (
    RKOIModel,
    fit_rkoi,
    fit_stacked,
    interpolation_weights,
    predict_rkoi,
    predict_stacked,
    rkoi_operator,
)
from pdmd.datagen import AffineSystemSpec, gen_affine_trajectories
from pdmd.dmd import SnapshotSet, build_snapshot_pairs, fit_dmd, predict_dmd, predict_modal
from pdmd.errors import DivergenceDetected, InvalidInput
from pdmd.metrics import time_averaged_error
from pdmd.params import ParamMap
from pdmd.pidmd import fit_pidmd, predict_pidmd

from _oracles import affine_case, column_rel_err, matrix_powers

THETAS_1D = [np.array([t]) for t in (0.0, 0.5, 1.0)]


def test_linear1d_weights():
    pm = ParamMap.coordinates(1)
    thetas = [[0.0], [1.0], [0.5]]
    w, ext = interpolation_weights(pm, thetas, [0.75], "linear1d")
    np.testing.assert_allclose(w, [0.0, 0.5, 0.5])
    assert not ext
    w, ext = interpolation_weights(pm, thetas, [1.5], "linear1d")
    np.testing.assert_allclose(w, [0.0, 2.0, -1.0])
    assert ext


def test_knot_snapping():
    pm = ParamMap.coordinates(2)
    thetas = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    w, ext = interpolation_weights(pm, thetas, [1.0, 0.0], "lsq")
    np.testing.assert_array_equal(w, [0.0, 1.0, 0.0])
    assert not ext


def test_lsq_weights_reproduce_affine_functions():
    pm = ParamMap.coordinates(2)
    thetas = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    for star, outside in (([0.3, 0.6], False), ([1.5, 0.2], True)):
        w, ext = interpolation_weights(pm, thetas, star, "lsq")
        assert w.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(w @ thetas, star, atol=1e-12)
        assert ext == outside


def test_weight_errors():
    pm = ParamMap.coordinates(1)
    with pytest.raises(InvalidInput):
        interpolation_weights(pm, [[0.0]], [0.5], "linear1d")
    with pytest.raises(InvalidInput):
        interpolation_weights(pm, [[0.0], [1.0]], [0.5], "cubic")
    with pytest.raises(InvalidInput):
        interpolation_weights(ParamMap.coordinates(2), [[0, 0], [1, 1]], [0.5, 0.5], "linear1d")


def test_stacked_single_trajectory_is_dmd():
    data, pm = affine_case(n=6, m=1, thetas=[np.array([0.3])], T=30, seed=1)
    s = data.trajectories[0]
    st = fit_stacked([s], 6, pm)
    dm = fit_dmd(*build_snapshot_pairs(s), 6, s.dt)
    x0 = s.states[:, 0]
    assert column_rel_err(predict_stacked(st, [0.3], x0, 40), predict_dmd(dm, x0, 40)).max() <= 1e-10


def test_stacked_parameter_independent_system():
    pm = ParamMap.coordinates(1)
    spec = AffineSystemSpec(n=6, param_map=pm, seed=2, b_scale=0.0)
    data = gen_affine_trajectories(spec, THETAS_1D + [np.array([0.3])], 30)
    train, test = data.trajectories[:3], data.trajectories[3]
    st = fit_stacked(train, 6, pm)
    x0 = test.states[:, 0]
    pred = predict_stacked(st, [0.3], x0, 30)
    assert column_rel_err(pred, test.states).max() <= 1e-6
    dm = fit_dmd(*build_snapshot_pairs(train[0]), 6, 1.0)
    assert column_rel_err(pred, predict_dmd(dm, x0, 30)).max() <= 1e-8


def test_stacked_knot_reconstruction():
    data, pm = affine_case(n=8, m=1, thetas=THETAS_1D, T=30, seed=3)
    st = fit_stacked(data.trajectories, 6, pm)
    x0 = data.trajectories[1].states[:, 0]
    own = predict_modal(st.modes[1], st.global_model.Omega, st.dt, x0, 25)
    assert column_rel_err(predict_stacked(st, [0.5], x0, 25), own).max() <= 1e-10


def test_stacked_worse_than_pidmd_at_midpoint():
    data, pm = affine_case(n=8, m=1, thetas=THETAS_1D, T=30, seed=5, extra_thetas=[[0.25]])
    mid = np.array([0.25])
    x0 = np.random.default_rng(0).standard_normal(8)
    truth = matrix_powers(data.operator(mid), x0, 50)
    st = fit_stacked(data.trajectories, 8, pm)
    pi = fit_pidmd(data.trajectories, pm, 16, 8)
    e_st = time_averaged_error(truth, predict_stacked(st, mid, x0, 50))
    e_pi = time_averaged_error(truth, predict_pidmd(pi, mid, x0, 50))
    assert e_pi < e_st


def test_rkoi_knots():
    data, pm = affine_case(n=8, m=1, thetas=THETAS_1D, T=30, seed=6)
    rk = fit_rkoi(data.trajectories, 6, pm)
    for l, th in enumerate(THETAS_1D):
        K, ext = rkoi_operator(rk, th)
        np.testing.assert_array_equal(K, rk.operators[l])
        assert not ext


def test_rkoi_exact_for_affine_scalar_family():
    data, pm = affine_case(n=6, m=1, thetas=THETAS_1D, T=30, seed=7, extra_thetas=[[0.2], [0.65]])
    rk = fit_rkoi(data.trajectories, 6, pm, "linear1d")
    U = rk.basis
    for star in ([0.2], [0.65], [0.999]):
        K, _ = rkoi_operator(rk, star)
        ref = U.T @ data.operator(star) @ U
        assert np.linalg.norm(K - ref) <= 1e-8 * np.linalg.norm(ref)


def test_rkoi_divergence_reported_with_trajectory():
    pm = ParamMap.coordinates(1)
    ops = np.stack([0.9 * np.eye(2), 1.5 * np.eye(2)])
    rk = RKOIModel(np.eye(2), ops, np.array([[0.0], [1.0]]), pm, "linear1d", 1.0)
    assert predict_rkoi(rk, [0.0], np.ones(2), 50).shape == (2, 51)
    with pytest.raises(DivergenceDetected) as info:
        predict_rkoi(rk, [0.5], np.ones(2), 50)
    assert info.value.trajectory.shape == (2, 51)
    np.testing.assert_array_equal(info.value.theta, [0.5])


def test_rkoi_rejects_duplicate_parameters():
    s = SnapshotSet(np.random.default_rng(0).standard_normal((3, 6)), 1.0, [0.5])
    with pytest.raises(InvalidInput):
        fit_rkoi([s, s], 2)
