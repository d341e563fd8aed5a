"""Ground-truth data: random parameter-affine linear maps and a periodic
advection-diffusion equation whose viscosity enters affinely."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dmd import SnapshotSet
from .errors import InvalidInput, SpecRejected
from .params import ParamMap

__all__ = [
    "AffineSystemSpec",
    "AffineData",
    "AdvDiffSpec",
    "gen_affine_trajectories",
    "advdiff_grid",
    "advdiff_initial_condition",
    "advdiff_step",
    "advdiff_operator",
    "gen_advdiff",
]

SPECTRAL_SLACK = 1e-6


@dataclass(frozen=True, eq=False)
class AffineSystemSpec:
    """``x_{k+1} = (A + sum_i h_i(theta) B_i) x_k`` with random ``A``, ``B_i``.

    ``b_scale`` sets the size of the ``B_i`` relative to ``A`` before the
    joint rescaling that puts the largest spectral radius over the declared
    parameters at ``spectral_radius``.
    """

    n: int
    param_map: ParamMap
    seed: int = 0
    spectral_radius: float = 0.95
    noise_std: float = 0.0
    b_scale: float = 0.5
    dt: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidInput("dt must be positive")
        if self.n < 1:
            raise InvalidInput("n must be >= 1")
        if not 0.0 < self.spectral_radius <= 1.0:
            raise InvalidInput("spectral_radius must be in (0, 1]")
        if self.noise_std < 0:
            raise InvalidInput("noise_std must be >= 0")

    @property
    def m(self):
        return self.param_map.m


@dataclass(frozen=True, eq=False)
class AffineData:
    trajectories: list
    A: np.ndarray
    B: np.ndarray  # (m, n, n)
    param_map: ParamMap
    clean: list = field(default_factory=list)

    def operator(self, theta):
        return self.A + np.tensordot(self.param_map(theta), self.B, axes=1)


def _spectral_radius(M):
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def gen_affine_trajectories(spec, thetas, T, x0s=None, declared_thetas=None):
    """Iterate the random affine system at each ``theta`` for ``T`` steps.

    ``declared_thetas`` (default: ``thetas``) are the parameters over which
    the spectral radius target is enforced; include test parameters there.
    Observation noise, if any, is added after iteration; the noiseless
    trajectories are kept in ``AffineData.clean``.
    """
    pm = spec.param_map
    n, m = spec.n, pm.m
    thetas = [pm.check_theta(t) for t in thetas]
    declared = [pm.check_theta(t) for t in (declared_thetas if declared_thetas is not None else thetas)]
    declared = declared + thetas
    if T < 1:
        raise InvalidInput("T must be >= 1")
    rng = np.random.default_rng(spec.seed)
    A = rng.standard_normal((n, n)) / np.sqrt(n)
    B = spec.b_scale * rng.standard_normal((m, n, n)) / np.sqrt(n)

    def K(th):
        return A + np.tensordot(pm(th), B, axes=1)

    worst = max(_spectral_radius(K(th)) for th in declared)
    if worst == 0.0:
        raise SpecRejected("generated operator is nilpotent at every parameter")
    c = spec.spectral_radius / worst
    A, B = c * A, c * B
    for th in declared:
        rho = _spectral_radius(K(th))
        if rho > 1.0 + SPECTRAL_SLACK:
            raise SpecRejected(f"spectral radius {rho} at theta={th}")

    if x0s is None:
        x0s = [rng.standard_normal(n) for _ in thetas]
    if len(x0s) != len(thetas):
        raise InvalidInput("need one initial condition per theta")

    clean, noisy = [], []
    for j, (th, x0) in enumerate(zip(thetas, x0s)):
        Kth = K(th)
        X = np.empty((n, T + 1))
        X[:, 0] = np.asarray(x0, dtype=np.float64)
        for k in range(T):
            X[:, k + 1] = Kth @ X[:, k]
        clean.append(SnapshotSet(X, spec.dt, th, f"affine-{j}"))
        if spec.noise_std > 0:
            X = X + spec.noise_std * rng.standard_normal(X.shape)
        noisy.append(SnapshotSet(X, spec.dt, th, f"affine-{j}"))
    return AffineData(noisy, A, B, pm, clean)


@dataclass(frozen=True)
class AdvDiffSpec:
    """``u_t = -c u_x + nu u_xx`` on a periodic grid, explicit Euler in time,
    first-order upwind advection and central diffusion.

    ``dt`` is the solver step; snapshots are kept every ``stride`` steps, so
    the sampling interval is ``stride * dt``. With ``stride > 1`` the
    snapshot-to-snapshot map is a polynomial in ``nu`` rather than affine.
    """

    n: int = 128
    length: float = 1.0
    speed: float = 1.0
    dt: float = 1e-3
    initial_condition: str = "gaussian"
    ic_mode: int = 1
    ic_width: float = 0.1
    stride: int = 1

    @property
    def sample_dt(self):
        return self.dt * self.stride

    @property
    def dx(self):
        return self.length / self.n

    def check_stable(self, nus):
        nu_max = max(nus) if len(nus) else 0.0
        if min(nus, default=0.0) < 0:
            raise InvalidInput("viscosity must be >= 0")
        cfl = abs(self.speed) * self.dt / self.dx
        dif = nu_max * self.dt / self.dx**2
        if cfl > 1.0:
            raise InvalidInput(f"CFL number {cfl:.3f} > 1")
        if dif > 0.5:
            raise InvalidInput(f"diffusion number {dif:.3f} > 0.5")


def advdiff_grid(spec):
    return np.arange(spec.n) * spec.dx


def advdiff_initial_condition(spec):
    x = advdiff_grid(spec)
    L = spec.length
    if spec.initial_condition == "sine":
        return np.sin(2 * np.pi * spec.ic_mode * x / L)
    if spec.initial_condition == "gaussian":
        return np.exp(-(((x - 0.5 * L) / (spec.ic_width * L)) ** 2))
    if spec.initial_condition == "wave-packet":
        env = np.exp(-(((x - 0.5 * L) / (spec.ic_width * L)) ** 2))
        return 1.0 + env * np.cos(2 * np.pi * spec.ic_mode * x / L)
    raise InvalidInput(f"unknown initial condition {spec.initial_condition!r}")


def advdiff_step(spec, nu, u):
    a = spec.speed * spec.dt / spec.dx
    d = nu * spec.dt / spec.dx**2
    if spec.speed >= 0:
        adv = u - np.roll(u, 1, axis=0)
    else:
        adv = np.roll(u, -1, axis=0) - u
    return u - a * adv + d * (np.roll(u, 1, axis=0) - 2 * u + np.roll(u, -1, axis=0))


def advdiff_operator(spec, nu):
    """The one-solver-step map as a dense matrix (affine in ``nu``)."""
    return advdiff_step(spec, nu, np.eye(spec.n))


def _advance(spec, nu, u, steps):
    for _ in range(steps):
        u = advdiff_step(spec, nu, u)
    return u


def gen_advdiff(spec, nus, T, transient_skip=0):
    """One SnapshotSet with ``T + 1`` post-transient snapshots per viscosity.

    ``transient_skip`` counts discarded snapshots (each ``stride`` steps).
    """
    nus = [float(v) for v in nus]
    spec.check_stable(nus)
    if T < 1 or transient_skip < 0 or spec.stride < 1:
        raise InvalidInput("need T >= 1, transient_skip >= 0 and stride >= 1")
    out = []
    u0 = advdiff_initial_condition(spec)
    for nu in nus:
        X = np.empty((spec.n, T + 1))
        X[:, 0] = _advance(spec, nu, u0, transient_skip * spec.stride)
        for k in range(T):
            X[:, k + 1] = _advance(spec, nu, X[:, k], spec.stride)
        out.append(SnapshotSet(X, spec.sample_dt, [nu], f"nu={nu:g}"))
    return out
