"""Dense kernels: truncated SVD, eigendecomposition, pseudoinverse, modal
evolution.

Storage convention (repo-wide): matrices are numpy ``float64``/``complex128``
arrays indexed ``[row, col]``. Snapshot matrices hold one state per
*column*. On disk, payloads are written column by column (each snapshot
contiguous), see :mod:`pdmd.io`.
"""
from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

from .errors import (
    DegenerateInput,
    InvalidInput,
    NumericalFailure,
    RankDeficiencyWarning,
)

__all__ = [
    "TruncatedSVD",
    "EigenPairs",
    "as_real_matrix",
    "truncated_svd",
    "eig",
    "pinv",
    "evolve_modes",
    "evolve_trajectory",
]


def as_real_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float64 array or raise InvalidInput."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput(f"{name} has non-finite entries")
    return A


def _as_matrix(M, name="matrix"):
    A = np.asarray(M)
    if A.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput(f"{name} has non-finite entries")
    if np.iscomplexobj(A):
        return A.astype(np.complex128)
    return A.astype(np.float64)


@dataclass(frozen=True, eq=False)
class TruncatedSVD:
    """Leading singular triplets ``M ~= U @ diag(S) @ V.T``.

    ``requested_rank`` is what the caller asked for, ``rank`` what was
    returned. ``rank_deficient`` is set when the numerical rank forced a
    smaller rank; ``pair_adjustment`` is 1 when the rank was extended to
    keep a near-degenerate singular value pair together.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    discarded_energy: float
    requested_rank: int
    numerical_rank: int
    rank_deficient: bool = False
    pair_adjustment: int = 0

    @property
    def rank(self):
        return self.S.size

    def reconstruct(self):
        return (self.U * self.S) @ self.V.T


def _pair_safe_rank(s, r, pair_rtol, limit):
    # s[r-1] and s[r] nearly equal -> the cut splits a sin/cos pair
    if r >= limit or r < 1:
        return r, 0
    if abs(s[r - 1] - s[r]) > pair_rtol * s[r - 1]:
        return r, 0
    return r + 1, 1


def truncated_svd(M, r=None, *, energy=None, rank_tol=None, pair_rtol=None):
    """Rank-``r`` truncated SVD of a real matrix.

    Parameters
    ----------
    M : (n, T) array_like
        Real, finite, not identically zero.
    r : int, optional
        Number of singular triplets to keep. Exactly one of ``r`` and
        ``energy`` must be given.
    energy : float, optional
        Keep the smallest rank whose retained fraction of ``sum(s**2)`` is at
        least ``energy``.
    rank_tol : float, optional
        Relative cutoff for the numerical rank; singular values below
        ``rank_tol * s[0]`` are treated as zero. Defaults to
        ``max(M.shape) * eps``.
    pair_rtol : float, optional
        If given and ``s[r-1]`` and ``s[r]`` agree to this relative
        tolerance, the rank is extended by one so the pair is not split.
        (At the numerical rank there is nothing left to split.)

    Returns
    -------
    TruncatedSVD
    """
    A = as_real_matrix(M)
    if (r is None) == (energy is None):
        raise InvalidInput("give exactly one of r and energy")
    if r is not None and int(r) < 1:
        raise InvalidInput(f"rank must be >= 1, got {r}")
    if energy is not None and not 0.0 < energy <= 1.0:
        raise InvalidInput(f"energy must be in (0, 1], got {energy}")
    if not np.any(A):
        raise DegenerateInput("cannot take the SVD of a zero matrix")

    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if rank_tol is None:
        rank_tol = max(A.shape) * np.finfo(np.float64).eps
    numerical_rank = int(np.count_nonzero(s > rank_tol * s[0]))

    if energy is not None:
        cum = np.cumsum(s**2) / np.sum(s**2)
        requested = int(np.searchsorted(cum, energy - 1e-15) + 1)
    else:
        requested = int(r)

    keep = min(requested, numerical_rank)
    deficient = requested > numerical_rank
    adjustment = 0
    if pair_rtol is not None:
        keep, adjustment = _pair_safe_rank(s, keep, pair_rtol, numerical_rank)
    if deficient:
        warnings.warn(
            f"requested rank {requested} exceeds numerical rank {numerical_rank}",
            RankDeficiencyWarning,
            stacklevel=2,
        )

    total = float(np.sum(s**2))
    discarded = float(np.sum(s[keep:] ** 2) / total)
    return TruncatedSVD(
        U=U[:, :keep].copy(),
        S=s[:keep].copy(),
        V=Vt[:keep].T.copy(),
        discarded_energy=discarded,
        requested_rank=requested,
        numerical_rank=numerical_rank,
        rank_deficient=deficient,
        pair_adjustment=adjustment,
    )


@dataclass(frozen=True, eq=False)
class EigenPairs:
    """Eigenvalues ``lambdas`` and unit-norm eigenvectors (columns of ``W``).

    ``residual`` is ``max_i ||M w_i - lambda_i w_i|| / ||M||_F`` and
    ``condition`` the 2-norm condition number of ``W`` (large for nearly
    defective matrices).
    """

    W: np.ndarray
    lambdas: np.ndarray
    residual: float
    condition: float

    def conjugate_closed(self, tol=1e-8):
        return is_conjugate_closed(self.lambdas, tol)


def is_conjugate_closed(lambdas, tol=1e-8):
    """True if the multiset ``lambdas`` equals its own conjugate within tol."""
    lam = np.asarray(lambdas, dtype=np.complex128)
    remaining = list(np.conj(lam))
    scale = max(1.0, float(np.max(np.abs(lam)))) if lam.size else 1.0
    for z in lam:
        d = np.abs(np.asarray(remaining) - z)
        j = int(np.argmin(d))
        if d[j] > tol * scale:
            return False
        remaining.pop(j)
    return True


def eig(M):
    """Eigendecomposition of a real (or complex) square matrix.

    Raises
    ------
    InvalidInput
        Non-square or non-finite input.
    NumericalFailure
        LAPACK did not converge.
    """
    A = _as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise InvalidInput(f"eig needs a square matrix, got {A.shape}")
    try:
        lam, W = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    W = W.astype(np.complex128)
    W /= np.linalg.norm(W, axis=0, keepdims=True)
    lam = lam.astype(np.complex128)
    norm = np.linalg.norm(A)
    if norm == 0.0:
        residual = 0.0
    else:
        residual = float(np.max(np.linalg.norm(A @ W - W * lam, axis=0)) / norm)
    with np.errstate(all="ignore"):
        condition = float(np.linalg.cond(W)) if W.size else 1.0
    return EigenPairs(W=W, lambdas=lam, residual=residual, condition=condition)


def pinv(M, rel_tol=None):
    """Moore-Penrose pseudoinverse via the SVD.

    Singular values below ``rel_tol * s_max`` are treated as zero. The default
    ``rel_tol`` is ``max(M.shape) * eps``.
    """
    A = _as_matrix(M)
    if not np.any(A):
        raise DegenerateInput("pseudoinverse of a zero matrix requested")
    if rel_tol is None:
        rel_tol = max(A.shape) * np.finfo(np.float64).eps
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    keep = s > rel_tol * s[0]
    return (Vh[keep].conj().T / s[keep]) @ U[:, keep].conj().T


def _check_modal(Phi, Omega, amplitudes):
    Phi = np.asarray(Phi, dtype=np.complex128)
    Omega = np.asarray(Omega, dtype=np.complex128).ravel()
    b = np.asarray(amplitudes, dtype=np.complex128).ravel()
    if Phi.ndim != 2 or Phi.shape[1] != Omega.size or Omega.size != b.size:
        raise InvalidInput(
            f"inconsistent modal shapes: Phi {Phi.shape}, "
            f"Omega {Omega.shape}, amplitudes {b.shape}"
        )
    return Phi, Omega, b


def evolve_modes(Phi, Omega, amplitudes, t, return_imag=False):
    """Real part of ``Phi @ diag(exp(Omega * t)) @ amplitudes``.

    With ``return_imag=True`` also returns the norm of the discarded imaginary
    part, which is round-off sized for conjugate-symmetric inputs.
    """
    if t < 0:
        raise InvalidInput(f"t must be >= 0, got {t}")
    X, imag = evolve_trajectory(Phi, Omega, amplitudes, np.array([t], dtype=float))
    if return_imag:
        return X[:, 0], float(imag[0])
    return X[:, 0]


def evolve_trajectory(Phi, Omega, amplitudes, times):
    """Vectorised :func:`evolve_modes` over a sequence of times.

    Returns the real ``(n, len(times))`` trajectory and the per-column norm of
    the dropped imaginary part.
    """
    Phi, Omega, b = _check_modal(Phi, Omega, amplitudes)
    times = np.asarray(times, dtype=np.float64).ravel()
    with np.errstate(over="ignore", invalid="ignore"):
        dyn = np.exp(np.outer(Omega, times)) * b[:, None]
        Z = Phi @ dyn
    return Z.real.copy(), np.linalg.norm(Z.imag, axis=0)
