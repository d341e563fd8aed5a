import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pdmd.dmd import build_snapshot_pairs, fit_dmd, predict_dmd
from pdmd.errors import DegenerateInput, InvalidInput
from pdmd.metrics import (
    EvalReport,
    compare_methods,
    make_report,
    residual_error,
    residual_series,
    time_averaged_error,
)
from pdmd.pidmd import fit_pidmd, predict_pidmd
from pdmd.baselines import fit_stacked, predict_stacked

from _oracles import affine_case, matrix_powers

elems = st.floats(-100, 100, allow_nan=False)


def test_residual_error_hand_cases():
    x = np.array([3.0, 4.0])
    assert residual_error(x, x) == 0.0
    assert residual_error(x, [0.0, 0.0]) == 1.0
    assert residual_error(x, [3.0, 0.0]) == 0.8
    with pytest.raises(DegenerateInput):
        residual_error([0.0, 0.0], x)
    with pytest.raises(InvalidInput):
        residual_error(x, [1.0])


def test_time_average_trivial():
    X = np.random.default_rng(0).standard_normal((4, 5))
    assert time_averaged_error(X, X) == 0.0
    truth = np.array([[1.0, 1.0], [0.0, 0.0]])
    pred = np.array([[1.1, 1.0], [0.0, 0.3]])  # errors 0.1 and 0.3
    assert time_averaged_error(truth, pred) == pytest.approx(0.2, abs=1e-15)


@settings(max_examples=50)
@given(arrays(np.float64, (3, 6), elements=elems), arrays(np.float64, (3, 6), elements=elems),
       st.floats(-50, 50, allow_nan=False))
def test_scale_covariance(truth, err, alpha):
    if np.any(np.linalg.norm(truth, axis=0) < 1e-3):
        return
    d1 = residual_series(truth, truth + err)
    d2 = residual_series(truth, truth + alpha * err)
    np.testing.assert_allclose(d2, abs(alpha) * d1, rtol=1e-9, atol=1e-12)


@settings(max_examples=50)
@given(arrays(np.float64, (3, 7), elements=elems), arrays(np.float64, (3, 7), elements=elems),
       st.permutations(range(7)))
def test_time_average_permutation_invariant(truth, pred, perm):
    if np.any(np.linalg.norm(truth, axis=0) < 1e-3):
        return
    a = time_averaged_error(truth, pred)
    b = time_averaged_error(truth[:, perm], pred[:, perm])
    assert a == pytest.approx(b, rel=1e-12)


def test_zero_norm_columns_excluded_and_counted():
    truth = np.array([[1.0, 0.0, 2.0]])
    pred = np.array([[1.5, 7.0, 2.0]])
    r = make_report("m", [0.1], truth, pred)
    assert r.excluded == 1 and np.isnan(r.series[1])
    assert r.mean == pytest.approx(0.25)
    with pytest.raises(DegenerateInput):
        time_averaged_error(np.zeros((2, 2)), np.ones((2, 2)))


def test_divergence_flag():
    truth = np.ones((2, 3))
    assert not make_report("m", [0], truth, truth * 2).divergent
    assert make_report("m", [0], truth, truth * 2e3).divergent
    bad = truth.copy()
    bad[0, 2] = np.inf
    r = make_report("m", [0], truth, bad)
    assert r.divergent and np.isinf(r.series[2])
    assert make_report("m", [0], truth, truth, force_divergent=True).divergent


def test_report_dict_roundtrip():
    r = make_report("pidmd", [0.013], np.ones((2, 3)), np.full((2, 3), 1.1), note="x", config_hash="abc")
    back = EvalReport.from_dict(r.to_dict())
    assert back.to_dict() == r.to_dict()


def _report(method, theta, mean, divergent=False):
    return EvalReport(method, (theta,), np.array([mean]), mean, divergent)


def test_compare_single():
    rows = compare_methods([_report("pidmd", 0.1, 0.02)])
    assert len(rows) == 1
    r = rows[0]
    assert (r.count, r.divergent, r.min, r.median, r.max) == (1, 0, 0.02, 0.02, 0.02)


def test_compare_divergent_excluded_from_quartiles():
    reps = [_report("rkoi", t, v) for t, v in ((0.1, 1.0), (0.2, 2.0), (0.3, 3.0))]
    reps.append(_report("rkoi", 0.4, 1e9, divergent=True))
    (row,) = compare_methods(reps)
    assert row.count == 4 and row.divergent == 1
    assert (row.min, row.q1, row.median, row.q3, row.max) == (1.0, 1.5, 2.0, 2.5, 3.0)


def test_compare_mismatched_sets():
    with pytest.raises(InvalidInput):
        compare_methods([_report("a", 0.1, 1.0), _report("b", 0.2, 1.0)])


def test_compare_four_methods_keeps_order():
    methods = ["dmd", "pidmd", "stacked", "rkoi"]
    reps = [_report(m, t, 0.1 * (i + 1)) for i, m in enumerate(methods) for t in (0.011, 0.012)]
    assert [r.method for r in compare_methods(reps)] == methods


@pytest.fixture(scope="module")
def affine_suite():
    train = [np.array([t]) for t in (0.0, 0.5, 1.0)]
    test = [np.array([t]) for t in (0.1, 0.3, 0.7, 0.9)]
    data, pm = affine_case(n=8, m=1, thetas=train + test, T=40, seed=12)
    return data, pm, data.trajectories[:3], data.trajectories[3:]


def test_pidmd_beats_stacked_on_affine_suite(affine_suite):
    _, pm, train, test = affine_suite
    pi = fit_pidmd(train, pm, 16, 8)
    st_ = fit_stacked(train, 8, pm)
    e_pi = np.mean([time_averaged_error(s.states, predict_pidmd(pi, s.theta, s.states[:, 0], 40)) for s in test])
    e_st = np.mean([time_averaged_error(s.states, predict_stacked(st_, s.theta, s.states[:, 0], 40)) for s in test])
    assert e_pi < e_st


def test_exact_dmd_lower_bounds_pidmd_full_rank(affine_suite):
    _, pm, train, test = affine_suite
    pi = fit_pidmd(train, pm, 16, 8)
    for s in test:
        dm = fit_dmd(*build_snapshot_pairs(s), 8, s.dt)
        x0 = s.states[:, 0]
        e_dm = time_averaged_error(s.states, predict_dmd(dm, x0, 40))
        e_pi = time_averaged_error(s.states, predict_pidmd(pi, s.theta, x0, 40))
        assert e_dm <= e_pi + 1e-8
