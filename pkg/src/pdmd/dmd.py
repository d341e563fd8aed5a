"""Exact DMD on a single uniformly sampled trajectory."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, SingularEigenvalue
from .linalg import as_real_matrix, eig, evolve_trajectory, pinv, truncated_svd

__all__ = [
    "SnapshotSet",
    "DMDModel",
    "build_snapshot_pairs",
    "continuous_eigenvalues",
    "fit_dmd",
    "predict_dmd",
    "predict_modal",
]

# |lambda| at or below this has no usable logarithm
LAMBDA_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """States ``x_0 .. x_T`` as columns, sampled every ``dt`` at parameter
    ``theta``."""

    states: np.ndarray
    dt: float
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    label: str = ""

    def __post_init__(self):
        states = as_real_matrix(self.states, "states")
        if states.shape[1] < 2:
            raise InvalidInput("a SnapshotSet needs at least two snapshots (T >= 1)")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidInput(f"dt must be positive, got {self.dt}")
        theta = np.atleast_1d(np.asarray(self.theta, dtype=np.float64)).ravel()
        if not np.all(np.isfinite(theta)):
            raise InvalidInput("theta has non-finite entries")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "label", str(self.label))

    @property
    def n(self):
        return self.states.shape[0]

    @property
    def T(self):
        return self.states.shape[1] - 1

    def window(self, start, T):
        """Sub-trajectory ``x_start .. x_{start+T}``."""
        if start < 0 or start + T > self.T or T < 1:
            raise InvalidInput(f"window [{start}, {start + T}] outside 0..{self.T}")
        return SnapshotSet(self.states[:, start : start + T + 1], self.dt, self.theta, self.label)


@dataclass(frozen=True, eq=False)
class DMDModel:
    Atilde: np.ndarray
    Phi: np.ndarray
    Omega: np.ndarray
    Lambda: np.ndarray
    W: np.ndarray
    U_r: np.ndarray
    dt: float
    rank: int
    rank_deficient: bool = False
    eig_residual: float = 0.0

    @property
    def n(self):
        return self.Phi.shape[0]


def build_snapshot_pairs(s):
    """Split a trajectory into ``(X, Xplus)`` with ``Xplus`` shifted by one."""
    if not isinstance(s, SnapshotSet):
        raise InvalidInput("expected a SnapshotSet")
    return s.states[:, :-1], s.states[:, 1:]


def continuous_eigenvalues(lambdas, dt):
    """Principal-branch ``log(lambda) / dt``; rejects eigenvalues near zero."""
    lam = np.asarray(lambdas, dtype=np.complex128)
    small = np.abs(lam) <= LAMBDA_FLOOR
    if np.any(small):
        raise SingularEigenvalue(
            f"{int(small.sum())} discrete eigenvalue(s) with |lambda| <= {LAMBDA_FLOOR}"
        )
    return np.log(lam) / dt


def fit_dmd(X, Xplus, r, dt, **svd_kwargs):
    """Exact DMD.

    ``Atilde = U_r^T X+ V_r S_r^-1`` and exact modes
    ``Phi = X+ V_r S_r^-1 W``. If ``X`` has numerical rank below ``r`` the
    rank shrinks and ``rank_deficient`` is set on the model.
    """
    X = as_real_matrix(X, "X")
    Xplus = as_real_matrix(Xplus, "Xplus")
    if X.shape != Xplus.shape:
        raise InvalidInput(f"X {X.shape} and Xplus {Xplus.shape} differ in shape")
    if not dt > 0:
        raise InvalidInput(f"dt must be positive, got {dt}")
    svd = truncated_svd(X, r, **svd_kwargs)
    XpVS = Xplus @ (svd.V / svd.S)
    Atilde = svd.U.T @ XpVS
    ep = eig(Atilde)
    Omega = continuous_eigenvalues(ep.lambdas, dt)
    return DMDModel(
        Atilde=Atilde,
        Phi=XpVS @ ep.W,
        Omega=Omega,
        Lambda=ep.lambdas,
        W=ep.W,
        U_r=svd.U,
        dt=float(dt),
        rank=svd.rank,
        rank_deficient=svd.rank_deficient,
        eig_residual=ep.residual,
    )


def predict_modal(Phi, Omega, dt, x0, steps):
    """``real(Phi exp(Omega k dt) Phi^+ x0)`` for ``k = 0..steps``."""
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    if x0.size != Phi.shape[0]:
        raise InvalidInput(f"x0 has length {x0.size}, model state dimension is {Phi.shape[0]}")
    if not np.all(np.isfinite(x0)):
        raise InvalidInput("x0 has non-finite entries")
    if steps < 0:
        raise InvalidInput(f"steps must be >= 0, got {steps}")
    b = pinv(Phi) @ x0
    traj, _ = evolve_trajectory(Phi, Omega, b, dt * np.arange(steps + 1))
    return traj


def predict_dmd(m, x0, steps):
    """Predict ``steps`` sampling intervals ahead from ``x0``.

    Column 0 is the modal projection of ``x0``, not ``x0`` itself.
    """
    return predict_modal(m.Phi, m.Omega, m.dt, x0, steps)
