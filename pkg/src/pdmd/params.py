"""Known parameter functions ``h(theta)`` built from registered primitives.

A :class:`ParamMap` first normalizes raw ``theta`` coordinatewise
(``scale * theta + offset``) and then evaluates its list of primitives on
the normalized vector. Callers always pass raw ``theta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput

__all__ = [
    "Normalization",
    "ParamFunction",
    "ParamMap",
    "PRIMITIVES",
]

# Range used by default when normalizing training parameters.
DEFAULT_RANGE = (0.0, 0.01)


def _coord(x, index):
    return x[index]


def _affine(x, index, scale=1.0, offset=0.0):
    return scale * x[index] + offset


def _poly(x, index, coeffs):
    # coeffs in increasing degree: c0 + c1 x + c2 x^2 ...
    return float(np.polynomial.polynomial.polyval(x[index], coeffs))


def _sin(x, index, amplitude=1.0, frequency=1.0, phase=0.0):
    return amplitude * np.sin(frequency * x[index] + phase)


PRIMITIVES = {
    "coord": (_coord, ()),
    "affine": (_affine, ("scale", "offset")),
    "poly": (_poly, ("coeffs",)),
    "sin": (_sin, ("amplitude", "frequency", "phase")),
}


@dataclass(frozen=True)
class ParamFunction:
    """One parameter function, e.g. ``ParamFunction("sin", 0, {"frequency": 2})``."""

    kind: str
    index: int = 0
    args: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PRIMITIVES:
            raise InvalidInput(f"unknown parameter primitive {self.kind!r}")
        allowed = PRIMITIVES[self.kind][1]
        unknown = set(self.args) - set(allowed)
        if unknown:
            raise InvalidInput(f"{self.kind}: unexpected arguments {sorted(unknown)}")
        if self.kind == "poly" and "coeffs" not in self.args:
            raise InvalidInput("poly needs coeffs")
        args = {k: (list(map(float, v)) if k == "coeffs" else float(v)) for k, v in self.args.items()}
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "index", int(self.index))

    def __call__(self, x):
        fn = PRIMITIVES[self.kind][0]
        return float(fn(x, self.index, **self.args))

    def to_dict(self):
        return {"kind": self.kind, "index": self.index, "args": dict(sorted(self.args.items()))}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d.get("index", 0), dict(d.get("args", {})))


@dataclass(frozen=True)
class Normalization:
    """Invertible coordinatewise map ``theta -> scale * theta + offset``."""

    scale: tuple
    offset: tuple

    def __post_init__(self):
        scale = tuple(float(s) for s in self.scale)
        offset = tuple(float(o) for o in self.offset)
        if len(scale) != len(offset):
            raise InvalidInput("scale and offset lengths differ")
        if any(s == 0.0 or not np.isfinite(s) for s in scale):
            raise InvalidInput("normalization scale must be finite and nonzero")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "offset", offset)

    @classmethod
    def identity(cls, p):
        return cls((1.0,) * p, (0.0,) * p)

    @classmethod
    def from_range(cls, thetas, lo=DEFAULT_RANGE[0], hi=DEFAULT_RANGE[1]):
        """Map the per-coordinate span of ``thetas`` onto ``[lo, hi]``.

        A coordinate that does not vary is only shifted to ``lo``.
        """
        th = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
        tmin, tmax = th.min(axis=0), th.max(axis=0)
        span = tmax - tmin
        with np.errstate(over="ignore", invalid="ignore"):
            scale = np.where(span > 0, (hi - lo) / np.where(span > 0, span, 1.0), 1.0)
            offset = lo - scale * tmin
        if not (np.all(np.isfinite(scale)) and np.all(np.isfinite(offset))):
            raise InvalidInput("parameter spread too small to normalize")
        return cls(tuple(scale), tuple(offset))

    @property
    def p(self):
        return len(self.scale)

    def apply(self, theta):
        return np.asarray(self.scale) * theta + np.asarray(self.offset)

    def invert(self, z):
        return (np.asarray(z, dtype=np.float64) - np.asarray(self.offset)) / np.asarray(self.scale)

    def to_dict(self):
        return {"scale": list(self.scale), "offset": list(self.offset)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["scale"]), tuple(d["offset"]))


@dataclass(frozen=True)
class ParamMap:
    """``theta in R^p -> h(theta) in R^m`` with stored normalization."""

    p: int
    functions: tuple = ()
    normalization: Normalization | None = None

    def __post_init__(self):
        if self.p < 0:
            raise InvalidInput("p must be >= 0")
        funcs = tuple(f if isinstance(f, ParamFunction) else ParamFunction.from_dict(f) for f in self.functions)
        for f in funcs:
            if not 0 <= f.index < self.p:
                raise InvalidInput(f"{f.kind} refers to coordinate {f.index} but p = {self.p}")
        norm = self.normalization or Normalization.identity(self.p)
        if norm.p != self.p:
            raise InvalidInput(f"normalization has {norm.p} coordinates, p = {self.p}")
        object.__setattr__(self, "functions", funcs)
        object.__setattr__(self, "normalization", norm)

    @property
    def m(self):
        return len(self.functions)

    @classmethod
    def coordinates(cls, p, normalization=None):
        """``h(theta) = normalized theta`` (one function per coordinate)."""
        return cls(p, tuple(ParamFunction("coord", i) for i in range(p)), normalization)

    @classmethod
    def empty(cls, p=0):
        return cls(p, ())

    def check_theta(self, theta):
        th = np.atleast_1d(np.asarray(theta, dtype=np.float64)).ravel()
        if th.size != self.p:
            raise InvalidInput(f"theta has length {th.size}, expected {self.p}")
        if not np.all(np.isfinite(th)):
            raise InvalidInput("theta has non-finite entries")
        return th

    def normalize(self, theta):
        return self.normalization.apply(self.check_theta(theta))

    def __call__(self, theta):
        z = self.normalize(theta)
        h = np.array([f(z) for f in self.functions], dtype=np.float64)
        if not np.all(np.isfinite(h)):
            raise InvalidInput(f"h(theta) is not finite at theta = {theta}")
        return h

    def excitation_matrix(self, thetas):
        """``(m+1) x L`` matrix with columns ``[1; h(theta_l)]``."""
        cols = [np.concatenate(([1.0], self(th))) for th in thetas]
        return np.array(cols).T.reshape(self.m + 1, len(cols))

    def identifiable(self, thetas):
        """Persistency of excitation: ``[1; h(theta_l)]`` has full row rank."""
        E = self.excitation_matrix(thetas)
        return np.linalg.matrix_rank(E) == self.m + 1

    def with_normalization(self, normalization):
        return ParamMap(self.p, self.functions, normalization)

    def to_dict(self):
        return {
            "p": self.p,
            "functions": [f.to_dict() for f in self.functions],
            "normalization": self.normalization.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            int(d["p"]),
            tuple(ParamFunction.from_dict(f) for f in d.get("functions", [])),
            Normalization.from_dict(d["normalization"]) if d.get("normalization") else None,
        )
