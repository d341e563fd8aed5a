"""Parameter-interpolated DMD.

One least-squares regression over trajectories from several training
parameters gives a discrete-time operator affine in known functions of the
parameter::

    K(theta) = A + sum_i h_i(theta) B_i

which is then projected onto a POD basis of the pooled shifted snapshots and
turned into modes and continuous-time eigenvalues at any requested theta.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import warnings

import numpy as np

from .dmd import SnapshotSet, continuous_eigenvalues, predict_modal
from .errors import IllConditioned, InvalidInput, NumericalFailure
from .linalg import eig, truncated_svd
from .params import ParamMap

__all__ = [
    "PiDMDModel",
    "ParametricROM",
    "lift",
    "assemble_regression",
    "fit_pidmd",
    "evaluate_operator",
    "evaluate_operator_h",
    "reduce",
    "predict_pidmd",
    "predict_pidmd_iterate",
]

EIG_RESIDUAL_MAX = 1e-6


@dataclass(frozen=True, eq=False)
class PiDMDModel:
    Atilde: np.ndarray
    Btilde: np.ndarray  # (m, n, n)
    U_hat: np.ndarray
    dt: float
    param_map: ParamMap
    rank_tilde: int
    rank_hat: int
    training_thetas: np.ndarray  # (L, p)
    training_labels: tuple = ()
    training_residual: float = float("nan")
    flags: tuple = field(default=())

    @property
    def n(self):
        return self.Atilde.shape[0]

    @property
    def m(self):
        return self.Btilde.shape[0]

    @cached_property
    def _reduced_blocks(self):
        U = self.U_hat
        A_r = U.T @ self.Atilde @ U
        B_r = np.stack([U.T @ B @ U for B in self.Btilde]) if self.m else np.zeros((0,) + A_r.shape)
        return A_r, B_r


@dataclass(frozen=True, eq=False)
class ParametricROM:
    theta: np.ndarray
    K_r: np.ndarray
    Phi: np.ndarray
    Omega: np.ndarray
    Lambda: np.ndarray
    W: np.ndarray
    dt: float
    eig_residual: float = 0.0


def lift(x, hvals):
    """``[x; h_1 x; ...; h_m x]``."""
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(hvals, dtype=np.float64).ravel()
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(h))):
        raise InvalidInput("lift: non-finite input")
    # works for a single state or a block of states (columns)
    return np.concatenate([x] + [hi * x for hi in h], axis=0)


def _check_training(training):
    training = list(training)
    if not training:
        raise InvalidInput("training set is empty")
    for s in training:
        if not isinstance(s, SnapshotSet):
            raise InvalidInput("training entries must be SnapshotSets")
    n, dt = training[0].n, training[0].dt
    for s in training[1:]:
        if s.n != n:
            raise InvalidInput(f"state dimension mismatch: {s.n} vs {n}")
        if not np.isclose(s.dt, dt, rtol=1e-12, atol=0.0):
            raise InvalidInput(f"sampling interval mismatch: {s.dt} vs {dt}")
    return training


def assemble_regression(training, pm):
    """Block regression matrices ``(Psi, Xplus)``.

    ``Psi`` is ``(n + m n) x (sum of T_l)``, each trajectory's lifted
    snapshots ``x_0..x_{T-1}`` placed side by side in training order, and
    ``Xplus`` holds the matching ``x_1..x_T``.
    """
    training = _check_training(training)
    Psi_blocks, Xp_blocks = [], []
    for s in training:
        Psi_blocks.append(lift(s.states[:, :-1], pm(s.theta)))
        Xp_blocks.append(s.states[:, 1:])
    return np.hstack(Psi_blocks), np.hstack(Xp_blocks)


def fit_pidmd(training, pm, r_tilde, r_hat, **svd_kwargs):
    """Fit ``Atilde`` and ``Btilde_1..m`` from multi-parameter training data.

    Parameters
    ----------
    training : list of SnapshotSet
        Trajectories sharing state dimension and ``dt``; ``theta`` of each is
        the raw parameter sample.
    pm : ParamMap
        Known parameter functions (applied after ``pm``'s normalization).
    r_tilde, r_hat : int
        Truncation ranks of the regression SVD (of ``Psi``) and of the
        projection basis (SVD of ``Xplus``).
    **svd_kwargs
        Forwarded to :func:`pdmd.linalg.truncated_svd` (e.g. ``pair_rtol``).

    Warns
    -----
    IllConditioned
        When ``[1; h(theta_l)]`` over the training set is rank deficient, so
        the ``Btilde_i`` are not identifiable.
    """
    training = _check_training(training)
    if r_tilde < 1 or r_hat < 1:
        raise InvalidInput("truncation ranks must be >= 1")
    n, m = training[0].n, pm.m
    thetas = np.array([pm.check_theta(s.theta) for s in training]).reshape(len(training), pm.p)
    flags = []
    if m and not pm.identifiable(thetas):
        flags.append("not_identifiable")
        warnings.warn(
            "training parameters do not excite all parameter functions; "
            "Btilde is not identifiable",
            IllConditioned,
            stacklevel=2,
        )

    Psi, Xplus = assemble_regression(training, pm)
    svd = truncated_svd(Psi, r_tilde, **svd_kwargs)
    if svd.rank_deficient:
        flags.append("psi_rank_deficient")
    G = (Xplus @ (svd.V / svd.S))
    Atilde = G @ svd.U[:n].T
    Btilde = (G @ svd.U[n:].T).reshape(n, m, n).transpose(1, 0, 2) if m else np.zeros((0, n, n))

    xsvd = truncated_svd(Xplus, r_hat, **svd_kwargs)
    if xsvd.rank_deficient:
        flags.append("xplus_rank_deficient")

    AB = np.hstack([Atilde] + list(Btilde))
    residual = float(np.linalg.norm(Xplus - AB @ Psi) / np.linalg.norm(Xplus))
    return PiDMDModel(
        Atilde=Atilde,
        Btilde=np.ascontiguousarray(Btilde),
        U_hat=xsvd.U,
        dt=training[0].dt,
        param_map=pm,
        rank_tilde=svd.rank,
        rank_hat=xsvd.rank,
        training_thetas=thetas,
        training_labels=tuple(s.label for s in training),
        training_residual=residual,
        flags=tuple(flags),
    )


def evaluate_operator_h(model, hvals):
    """``Atilde + sum_i hvals[i] Btilde_i`` for raw function values."""
    h = np.asarray(hvals, dtype=np.float64).ravel()
    if h.size != model.m:
        raise InvalidInput(f"expected {model.m} function values, got {h.size}")
    return model.Atilde + np.tensordot(h, model.Btilde, axes=1)


def evaluate_operator(model, theta):
    """Full ``n x n`` operator at raw parameter ``theta``."""
    return evaluate_operator_h(model, model.param_map(theta))


def reduce(model, theta):
    """Rank-``r_hat`` ROM at ``theta``: ``K_r = U^T K(theta) U``, its
    eigenpairs, modes ``Phi = U W`` and ``Omega = log(Lambda) / dt``."""
    h = model.param_map(theta)
    A_r, B_r = model._reduced_blocks
    K_r = A_r + np.tensordot(h, B_r, axes=1)
    ep = eig(K_r)
    if ep.residual > EIG_RESIDUAL_MAX:
        raise NumericalFailure(f"eigendecomposition residual {ep.residual:.2e} at theta={theta}")
    return ParametricROM(
        theta=model.param_map.check_theta(theta),
        K_r=K_r,
        Phi=model.U_hat @ ep.W,
        Omega=continuous_eigenvalues(ep.lambdas, model.dt),
        Lambda=ep.lambdas,
        W=ep.W,
        dt=model.dt,
        eig_residual=ep.residual,
    )


def predict_pidmd(model, theta, x0, steps, rom=None):
    """Modal prediction ``real(Phi exp(Omega k dt) Phi^+ x0)``, ``k=0..steps``."""
    rom = rom if rom is not None else reduce(model, theta)
    return predict_modal(rom.Phi, rom.Omega, rom.dt, x0, steps)


def predict_pidmd_iterate(model, theta, x0, steps):
    """Reference path: iterate the full operator, ``x_{k+1} = K(theta) x_k``."""
    K = evaluate_operator(model, theta)
    x = np.asarray(x0, dtype=np.float64).ravel()
    if x.size != model.n:
        raise InvalidInput(f"x0 has length {x.size}, expected {model.n}")
    out = np.empty((model.n, steps + 1))
    out[:, 0] = x
    for k in range(steps):
        out[:, k + 1] = K @ out[:, k]
    return out
