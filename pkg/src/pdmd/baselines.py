"""Interpolation-based parametric DMD baselines.

Stacked DMD
    One exact-DMD fit on the horizontally concatenated snapshots of all
    training trajectories gives global eigenvalues and eigenvectors ``W``.
    Per-parameter modes are ``X+_l pinv(U_r^T X_l) W``, i.e. each
    trajectory's data mapped through the shared reduced coordinates. Modes are
    interpolated entrywise at a new parameter; eigenvalues stay global.

rKOI
    A shared POD basis of the pooled snapshots; one reduced operator
    ``(U_r^T X+_l) pinv(U_r^T X_l)`` per training parameter. The reduced
    operator is interpolated at a new parameter, then eigendecomposed.

Interpolation schemes (serialized by name):

``linear1d``
    Piecewise-linear in the single normalized parameter coordinate, linear
    extrapolation from the end segments.
``lsq``
    Least-squares fit of the training quantities in the features
    ``[1; h(theta)]``, evaluated at the new parameter.

Both schemes return the stored training quantity unchanged when the new
parameter coincides with a training parameter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .dmd import DMDModel, continuous_eigenvalues, fit_dmd, predict_modal
from .errors import DivergenceDetected, InvalidInput
from .linalg import eig, pinv, truncated_svd
from .params import ParamMap
from .pidmd import _check_training

__all__ = [
    "SCHEMES",
    "StackedDMDModel",
    "RKOIModel",
    "interpolation_weights",
    "fit_stacked",
    "stacked_modes",
    "predict_stacked",
    "fit_rkoi",
    "rkoi_operator",
    "predict_rkoi",
]

SCHEMES = ("linear1d", "lsq")
EIG_RESIDUAL_MAX = 1e-6
GROWTH_MARGIN = 10.0
NORM_BLOWUP = 1e3


def default_scheme(p):
    return "linear1d" if p == 1 else "lsq"


def _in_hull(points, x):
    L = points.shape[0]
    if L == 1:
        return bool(np.allclose(points[0], x))
    A_eq = np.vstack([points.T, np.ones((1, L))])
    b_eq = np.concatenate([x, [1.0]])
    res = linprog(np.zeros(L), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * L, method="highs")
    return bool(res.status == 0)


def interpolation_weights(pm, thetas, theta_star, scheme):
    """Weights ``w`` so that the interpolant at ``theta_star`` is
    ``sum_l w[l] Q_l``, plus an extrapolation flag."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    th = pm.check_theta(theta_star)
    L = thetas.shape[0]
    hit = np.flatnonzero(np.all(np.isclose(thetas, th, rtol=1e-12, atol=1e-14), axis=1))
    if hit.size:
        w = np.zeros(L)
        w[hit[0]] = 1.0
        return w, False
    if L < 2:
        raise InvalidInput("interpolation needs at least two training parameters")

    z = np.array([pm.normalize(t) for t in thetas])
    zs = pm.normalize(th)
    if scheme == "linear1d":
        if pm.p != 1:
            raise InvalidInput("linear1d interpolation needs a scalar parameter")
        order = np.argsort(z[:, 0])
        zz = z[order, 0]
        x = zs[0]
        j = int(np.clip(np.searchsorted(zz, x) - 1, 0, L - 2))
        a = (x - zz[j]) / (zz[j + 1] - zz[j])
        w = np.zeros(L)
        w[order[j]] = 1.0 - a
        w[order[j + 1]] = a
        return w, bool(x < zz[0] or x > zz[-1])
    if scheme == "lsq":
        F = pm.excitation_matrix(thetas)
        f = np.concatenate(([1.0], pm(th)))
        w = np.linalg.pinv(F) @ f
        return w, not _in_hull(z, zs)
    raise InvalidInput(f"unknown interpolation scheme {scheme!r}")


def _check_distinct(thetas):
    L = thetas.shape[0]
    for i in range(L):
        for j in range(i + 1, L):
            if np.allclose(thetas[i], thetas[j], rtol=1e-12, atol=1e-14):
                raise InvalidInput("training parameters must be distinct")


def _shared_setup(training, pm, scheme):
    training = _check_training(training)
    p = training[0].theta.size
    pm = pm if pm is not None else ParamMap.coordinates(p)
    thetas = np.array([pm.check_theta(s.theta) for s in training]).reshape(len(training), pm.p)
    scheme = scheme or default_scheme(pm.p)
    if scheme not in SCHEMES:
        raise InvalidInput(f"unknown interpolation scheme {scheme!r}")
    return training, pm, thetas, scheme


# -- stacked -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StackedDMDModel:
    global_model: DMDModel
    modes: np.ndarray  # (L, n, r) complex
    thetas: np.ndarray
    param_map: ParamMap
    scheme: str

    @property
    def dt(self):
        return self.global_model.dt

    @property
    def rank(self):
        return self.global_model.rank


def fit_stacked(training, r, pm=None, scheme=None, **svd_kwargs):
    training, pm, thetas, scheme = _shared_setup(training, pm, scheme)
    X = np.hstack([s.states[:, :-1] for s in training])
    Xp = np.hstack([s.states[:, 1:] for s in training])
    g = fit_dmd(X, Xp, r, training[0].dt, **svd_kwargs)
    modes = []
    for s in training:
        Y = g.U_r.T @ s.states[:, :-1]
        modes.append(s.states[:, 1:] @ pinv(Y) @ g.W)
    return StackedDMDModel(g, np.array(modes), thetas, pm, scheme)


def stacked_modes(model, theta_star):
    """Interpolated modes and the extrapolation flag."""
    w, extrapolated = interpolation_weights(model.param_map, model.thetas, theta_star, model.scheme)
    return np.tensordot(w, model.modes, axes=1), extrapolated


def predict_stacked(model, theta_star, x0, steps):
    Phi, _ = stacked_modes(model, theta_star)
    return predict_modal(Phi, model.global_model.Omega, model.dt, x0, steps)


# -- rKOI --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RKOIModel:
    basis: np.ndarray  # (n, r)
    operators: np.ndarray  # (L, r, r)
    thetas: np.ndarray
    param_map: ParamMap
    scheme: str
    dt: float

    @property
    def rank(self):
        return self.basis.shape[1]


def fit_rkoi(training, r, pm=None, scheme=None, **svd_kwargs):
    training, pm, thetas, scheme = _shared_setup(training, pm, scheme)
    _check_distinct(thetas)
    X = np.hstack([s.states[:, :-1] for s in training])
    U = truncated_svd(X, r, **svd_kwargs).U
    ops = []
    for s in training:
        Y, Yp = U.T @ s.states[:, :-1], U.T @ s.states[:, 1:]
        ops.append(Yp @ pinv(Y))
    return RKOIModel(U, np.array(ops), thetas, pm, scheme, training[0].dt)


def rkoi_operator(model, theta_star):
    """Interpolated reduced operator and the extrapolation flag."""
    w, extrapolated = interpolation_weights(model.param_map, model.thetas, theta_star, model.scheme)
    return np.tensordot(w, model.operators, axes=1), extrapolated


def predict_rkoi(model, theta_star, x0, steps):
    """Modal prediction from the interpolated reduced operator.

    Raises
    ------
    DivergenceDetected
        If the interpolated operator is numerically defective, has an
        eigenvalue with ``|lambda| > 1 + 10 / steps``, or the trajectory norm
        grows past ``1e3 * ||x0||``. The trajectory (if one could be formed)
        is attached to the exception.
    """
    K, _ = rkoi_operator(model, theta_star)
    ep = eig(K)
    Omega = continuous_eigenvalues(ep.lambdas, model.dt)
    traj = predict_modal(model.basis @ ep.W, Omega, model.dt, x0, steps)

    bound = 1.0 + GROWTH_MARGIN / max(steps, 1)
    rho = float(np.max(np.abs(ep.lambdas)))
    reason = None
    if ep.residual > EIG_RESIDUAL_MAX:
        reason = f"interpolated operator eigen-residual {ep.residual:.2e}"
    elif rho > bound:
        reason = f"spectral radius {rho:.6f} exceeds growth bound {bound:.6f}"
    else:
        norms = np.linalg.norm(traj, axis=0)
        x0n = np.linalg.norm(np.asarray(x0, dtype=float))
        if not np.all(np.isfinite(norms)) or np.any(norms > NORM_BLOWUP * max(x0n, np.finfo(float).tiny)):
            reason = "trajectory norm blew up"
    if reason is not None:
        raise DivergenceDetected(reason, theta=np.asarray(theta_star, dtype=float), trajectory=traj)
    return traj
