"""Relative residual error, its time average, and method comparison tables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, InvalidInput

__all__ = [
    "DIVERGENCE_THRESHOLD",
    "EvalReport",
    "ComparisonRow",
    "residual_error",
    "residual_series",
    "time_averaged_error",
    "make_report",
    "compare_methods",
]

DIVERGENCE_THRESHOLD = 1e3
ZERO_NORM = 1e-14


def residual_error(truth, pred):
    """``||truth - pred||_2 / ||truth||_2``."""
    x = np.asarray(truth, dtype=np.float64).ravel()
    y = np.asarray(pred, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise InvalidInput(f"shape mismatch {x.shape} vs {y.shape}")
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise DegenerateInput("truth has zero norm")
    return float(np.linalg.norm(x - y) / nx)


def residual_series(truth_traj, pred_traj):
    """Per-column relative error. Columns whose truth norm is below
    ``1e-14`` come back as NaN."""
    X = np.asarray(truth_traj, dtype=np.float64)
    Y = np.asarray(pred_traj, dtype=np.float64)
    if X.shape != Y.shape or X.ndim != 2:
        raise InvalidInput(f"trajectory shapes differ: {X.shape} vs {Y.shape}")
    nx = np.linalg.norm(X, axis=0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        d = np.linalg.norm(X - Y, axis=0) / nx
    d[nx < ZERO_NORM] = np.nan
    # a non-finite prediction is an infinitely wrong one
    d[(nx >= ZERO_NORM) & ~np.isfinite(d)] = np.inf
    return d


def time_averaged_error(truth_traj, pred_traj):
    """Mean residual error over all columns, including the initial one."""
    d = residual_series(truth_traj, pred_traj)
    valid = ~np.isnan(d)
    if not np.any(valid):
        raise DegenerateInput("every truth column has zero norm")
    return float(np.mean(d[valid]))


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Residual-error series of one method at one test parameter."""

    method: str
    theta: tuple
    series: np.ndarray
    mean: float
    divergent: bool
    excluded: int = 0
    note: str = ""
    config_hash: str = ""

    def to_dict(self):
        return {
            "method": self.method,
            "theta": list(self.theta),
            "series": [float(v) for v in self.series],
            "mean": float(self.mean),
            "divergent": bool(self.divergent),
            "excluded": int(self.excluded),
            "note": self.note,
            "config_hash": self.config_hash,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["method"], tuple(d["theta"]), np.asarray(d["series"], dtype=float),
            float(d["mean"]), bool(d["divergent"]), int(d.get("excluded", 0)),
            d.get("note", ""), d.get("config_hash", ""),
        )


def make_report(method, theta, truth_traj, pred_traj, note="", config_hash="", force_divergent=False):
    """Build an :class:`EvalReport`; flags divergence when any
    ``delta(t) > 1e3`` or is non-finite."""
    d = residual_series(truth_traj, pred_traj)
    valid = ~np.isnan(d)
    if not np.any(valid):
        raise DegenerateInput("every truth column has zero norm")
    mean = float(np.mean(d[valid]))
    divergent = bool(force_divergent or np.any(~np.isfinite(d[valid])) or np.any(d[valid] > DIVERGENCE_THRESHOLD))
    th = tuple(float(v) for v in np.atleast_1d(theta))
    return EvalReport(method, th, d, mean, divergent, int((~valid).sum()), note, config_hash)


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    count: int
    divergent: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    thetas: tuple = field(default=())


def compare_methods(reports):
    """Distribution of time-averaged errors over the test parameters, per
    method, in order of first appearance. Divergent reports are counted
    separately and left out of the quantiles."""
    reports = list(reports)
    by_method = {}
    for r in reports:
        by_method.setdefault(r.method, []).append(r)
    test_sets = {m: sorted(r.theta for r in rs) for m, rs in by_method.items()}
    ref = next(iter(test_sets.values()), [])
    for m, ts in test_sets.items():
        if ts != ref:
            raise InvalidInput(f"method {m!r} was evaluated on a different test set")
    rows = []
    for m, rs in by_method.items():
        ok = np.array([r.mean for r in rs if not r.divergent])
        q = np.quantile(ok, [0.0, 0.25, 0.5, 0.75, 1.0]) if ok.size else [np.nan] * 5
        rows.append(ComparisonRow(m, len(rs), sum(r.divergent for r in rs), *map(float, q),
                                  thetas=tuple(r.theta for r in rs)))
    return rows
