import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pdmd.errors import DegenerateInput, InvalidInput, RankDeficiencyWarning
from pdmd.linalg import eig, evolve_modes, evolve_trajectory, is_conjugate_closed, pinv, truncated_svd

from _oracles import spectrum_distance

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_svd_identity():
    svd = truncated_svd(np.eye(3), 2)
    np.testing.assert_allclose(svd.S, [1.0, 1.0])
    np.testing.assert_allclose(svd.U.T @ svd.U, np.eye(2), atol=1e-14)


def test_svd_diagonal_discarded_energy():
    svd = truncated_svd(np.diag([3.0, 2.0, 1.0]), 2)
    np.testing.assert_allclose(svd.S, [3.0, 2.0])
    assert svd.discarded_energy == pytest.approx(1 / 14, rel=1e-14)


def test_svd_rank_deficient_shrinks_and_warns():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((10, 4)) @ rng.standard_normal((4, 6))
    with pytest.warns(RankDeficiencyWarning):
        svd = truncated_svd(M, 6)
    assert svd.rank == 4 and svd.rank_deficient and svd.requested_rank == 6
    ref = np.linalg.svd(M, compute_uv=False)[:4]
    np.testing.assert_allclose(svd.S, ref, rtol=1e-12)


def test_svd_energy_threshold():
    svd = truncated_svd(np.diag([3.0, 2.0, 1.0]), energy=13 / 14)
    assert svd.rank == 2
    assert truncated_svd(np.diag([3.0, 2.0, 1.0]), energy=1.0).rank == 3


def test_svd_pair_adjustment():
    M = np.diag([5.0, 2.0, 2.0 * (1 + 1e-12), 1.0])
    assert truncated_svd(M, 2).rank == 2
    svd = truncated_svd(M, 2, pair_rtol=1e-8)
    assert svd.rank == 3 and svd.pair_adjustment == 1
    # at the numerical rank nothing is left to split
    with pytest.warns(RankDeficiencyWarning):
        svd = truncated_svd(np.diag([5.0, 2.0, 0.0]), 3, pair_rtol=1e-8)
    assert svd.rank == 2 and svd.pair_adjustment == 0


@pytest.mark.parametrize("bad", [np.zeros((3, 3)), np.array([[1.0, np.nan]]), np.ones(3)])
def test_svd_rejects(bad):
    with pytest.raises((DegenerateInput, InvalidInput)):
        truncated_svd(bad, 1)


def test_svd_needs_one_of_rank_energy():
    with pytest.raises(InvalidInput):
        truncated_svd(np.eye(2))
    with pytest.raises(InvalidInput):
        truncated_svd(np.eye(2), 1, energy=0.5)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 8), st.integers(2, 8)), elements=finite), st.integers(1, 8))
def test_svd_discarded_energy_matches_reconstruction(M, r):
    if np.linalg.norm(M) < 1e-6:
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficiencyWarning)
        svd = truncated_svd(M, r)
    resid = np.linalg.norm(M - svd.reconstruct()) ** 2
    # discarded energy is relative to ||M||_F^2
    assert resid == pytest.approx(svd.discarded_energy * np.linalg.norm(M) ** 2, rel=1e-8, abs=1e-10 * np.linalg.norm(M) ** 2)


def test_eig_diagonal():
    ep = eig(np.diag([2.0, 3.0]))
    np.testing.assert_allclose(ep.lambdas, [2.0, 3.0])
    np.testing.assert_allclose(np.abs(ep.W), np.eye(2))


def test_eig_rotation():
    ep = eig(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert spectrum_distance(ep.lambdas, [1j, -1j]) < 1e-14


def test_eig_random_residual():
    M = np.random.default_rng(1).standard_normal((8, 8))
    ep = eig(M)
    Fres = np.linalg.norm(M @ ep.W - ep.W * ep.lambdas) / np.linalg.norm(M)
    assert Fres <= 1e-8 and ep.residual <= 1e-8
    np.testing.assert_allclose(np.linalg.norm(ep.W, axis=0), 1.0)


def test_eig_defective_residual_reported():
    ep = eig(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert ep.condition > 1e6


def test_eig_rejects_nonsquare():
    with pytest.raises(InvalidInput):
        eig(np.ones((2, 3)))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 7)).map(lambda t: (t[0], t[0])), elements=finite))
def test_eig_real_spectrum_conjugate_closed(M):
    assert is_conjugate_closed(eig(M).lambdas, tol=1e-8)


def test_pinv_small_cases():
    np.testing.assert_allclose(pinv(np.eye(4)), np.eye(4))
    np.testing.assert_allclose(pinv(np.array([[2.0]])), [[0.5]])
    M = np.random.default_rng(2).standard_normal((6, 3))
    np.testing.assert_allclose(pinv(M) @ M, np.eye(3), atol=1e-10)


def test_pinv_zero_matrix():
    with pytest.raises(DegenerateInput):
        pinv(np.zeros((2, 2)))


def test_pinv_penrose_identities():
    rng = np.random.default_rng(3)
    for case in range(20):
        n, k = rng.integers(1, 8, size=2)
        M = rng.standard_normal((n, k))
        if case % 3 == 0:
            M = M + 1j * rng.standard_normal((n, k))
        if case % 4 == 0 and min(n, k) > 1:
            M[:, -1] = M[:, 0]  # rank deficient
        P = pinv(M)
        tol = 1e-8 * max(1.0, np.linalg.norm(M) * np.linalg.norm(P))
        assert np.linalg.norm(M @ P @ M - M) <= tol
        assert np.linalg.norm(P @ M @ P - P) <= tol * np.linalg.norm(P)
        assert np.linalg.norm((M @ P).conj().T - M @ P) <= tol
        assert np.linalg.norm((P @ M).conj().T - P @ M) <= tol


def test_evolve_at_zero_and_constant_mode():
    Phi = np.array([[1.0 + 1j, 2.0], [0.5, -1j]])
    b = np.array([1.0, 2.0 - 1j])
    np.testing.assert_allclose(evolve_modes(Phi, [0.3, -1.0], b, 0.0), (Phi @ b).real)
    for t in (0.0, 1.5, 40.0):
        assert evolve_modes(np.ones((1, 1)), [0.0], [1.0], t)[0] == 1.0


def test_evolve_harmonic_oscillator():
    # x' = [[0, 1], [-1, 0]] x, eigenvalues +-i
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    lam, V = np.linalg.eig(A)
    x0 = np.array([1.0, 0.0])
    b = np.linalg.pinv(V) @ x0
    for t in np.linspace(0, 10, 17):
        x, imag = evolve_modes(V, lam, b, t, return_imag=True)
        np.testing.assert_allclose(x, [np.cos(t), -np.sin(t)], atol=1e-10)
        assert imag < 1e-12


def test_evolve_matches_discrete_powers():
    rng = np.random.default_rng(4)
    M = rng.standard_normal((6, 6))
    M *= 0.9 / np.max(np.abs(np.linalg.eigvals(M)))
    lam, W = np.linalg.eig(M)
    dt = 0.1
    x0 = rng.standard_normal(6)
    b = np.linalg.pinv(W) @ x0
    X, _ = evolve_trajectory(W, np.log(lam) / dt, b, dt * np.arange(20))
    for k in range(20):
        ref = (W @ (lam**k * b)).real
        assert np.linalg.norm(X[:, k] - ref) <= 1e-8 * np.linalg.norm(ref)


def test_evolve_rejects_negative_time_and_bad_shapes():
    with pytest.raises(InvalidInput):
        evolve_modes(np.ones((1, 1)), [0.0], [1.0], -1.0)
    with pytest.raises(InvalidInput):
        evolve_modes(np.ones((2, 2)), [0.0], [1.0, 1.0], 0.0)
