"""Cosine space-time grating: profile, co-moving constitutive parameters,
event-horizon location and characteristic ray tracing.

The grating is impedance matched, ``eps = mu = eps_b + 2 alpha cos(g x - Omega t)``,
so the local wave speed is ``c(X) = c0 / eps(X)`` with ``X = x - c_g t`` the
co-moving coordinate and ``c_g = Omega / g`` the grating speed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConfigError, HorizonSingularity, NotTransluminal
from .numerics import find_root_bracketed

TOL_ROOT = 1e-12  # times c0
TOL_POLE = 1e-9
RAY_RTOL = 1e-10
STALL_FRACTION = 1e-14  # times the spatial period


@dataclass(frozen=True)
class GratingConfig:
    """Physical parameters of a windowed cosine grating (natural units by default)."""

    eps_b: float = 1.0
    alpha: float = 0.05
    g: float = 1.0
    Omega: float = 1.0
    d: float = 0.0
    c0: float = 1.0
    hbar: float = 1.0
    kB: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.eps_b - 2 * self.alpha <= 0:
            raise ConfigError(
                f"eps_b - 2*alpha must be > 0 (got eps_b={self.eps_b}, alpha={self.alpha})"
            )
        if self.g <= 0:
            raise ConfigError(f"g must be > 0, got {self.g}")
        if self.Omega < 0:
            raise ConfigError(f"Omega must be >= 0, got {self.Omega}")
        if self.d < 0:
            raise ConfigError(f"d must be >= 0, got {self.d}")
        if self.c0 <= 0:
            raise ConfigError(f"c0 must be > 0, got {self.c0}")
        if self.hbar <= 0 or self.kB <= 0:
            raise ConfigError("hbar and kB must be > 0")

    @property
    def c_g(self) -> float:
        return self.Omega / self.g

    @property
    def period(self) -> float:
        """Spatial period 2 pi / g."""
        return 2 * math.pi / self.g

    @property
    def speed_range(self) -> tuple[float, float]:
        return (self.c0 / (self.eps_b + 2 * self.alpha), self.c0 / (self.eps_b - 2 * self.alpha))

    @property
    def transluminal(self) -> bool:
        lo, hi = self.speed_range
        return lo < self.c_g < hi

    def replace(self, **changes) -> "GratingConfig":
        return GratingConfig(**{**asdict(self), **changes})


def refractive_profile(cfg: GratingConfig, X):
    """Relative permittivity (= permeability) at co-moving position ``X``."""
    return cfg.eps_b + 2 * cfg.alpha * np.cos(cfg.g * np.asarray(X, dtype=float))


def local_speed(cfg: GratingConfig, X):
    return cfg.c0 / refractive_profile(cfg, X)


def local_speed_slope(cfg: GratingConfig, X):
    """dc/dX of the local wave speed."""
    X = np.asarray(X, dtype=float)
    eps = refractive_profile(cfg, X)
    return 2 * cfg.alpha * cfg.g * cfg.c0 * np.sin(cfg.g * X) / eps**2


def comoving_params(cfg: GratingConfig, X) -> tuple[float, float, float]:
    """Galilean co-moving ``(eps_mov, mu_mov, xi_mov)`` at a scalar position.

    ``xi_mov`` is reported in units where the background light speed is one,
    i.e. ``-eps mu (c_g/c0) / (1 - c_g^2/c^2)``.
    """
    eps = float(refractive_profile(cfg, X))
    c = cfg.c0 / eps
    denom = 1.0 - (cfg.c_g / c) ** 2
    if abs(denom) < TOL_POLE:
        raise HorizonSingularity(
            f"1 - c_g^2/c^2 = {denom:.3g} at X={float(X):.15g}: event horizon"
        )
    mu = eps
    return eps / denom, mu / denom, -eps * mu * (cfg.c_g / cfg.c0) / denom


class HorizonKind(str, Enum):
    ACCUMULATION = "Accumulation"  # dc/dX < 0, rays converge
    DISPERSAL = "Dispersal"  # dc/dX > 0, rays diverge


@dataclass(frozen=True)
class Horizon:
    X: float
    kind: HorizonKind
    dcdX: float


@dataclass(frozen=True)
class HorizonSet:
    """Event horizons in one spatial period ``[0, 2 pi / g)``.

    The black/white-hole naming is ambiguous in the literature, so only the
    slope sign is used: rays accumulate where dc/dX < 0 and disperse where
    dc/dX > 0.
    """

    entries: tuple[Horizon, ...]
    period: float

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def of_kind(self, kind: HorizonKind) -> list[Horizon]:
        return [h for h in self.entries if h.kind == kind]

    @property
    def accumulation(self) -> Horizon:
        return self.of_kind(HorizonKind.ACCUMULATION)[0]

    @property
    def dispersal(self) -> Horizon:
        return self.of_kind(HorizonKind.DISPERSAL)[0]


def find_horizons(cfg: GratingConfig) -> HorizonSet:
    """All roots of ``c(X) = c_g`` in one period, classified by the sign of dc/dX.

    A grating speed equal to an extremum of ``c`` (tangential root) counts as
    not transluminal.
    """
    if not cfg.transluminal:
        lo, hi = cfg.speed_range
        raise NotTransluminal(
            f"c_g = {cfg.c_g:.6g} is outside the open local-speed range ({lo:.6g}, {hi:.6g})"
        )
    tol = TOL_ROOT * cfg.c0

    def mismatch(X):
        return float(local_speed(cfg, X)) - cfg.c_g

    half = math.pi / cfg.g
    entries = []
    # c is monotone on each half period of the cosine
    for lo, hi in ((0.0, half), (half, 2 * half)):
        X = find_root_bracketed(mismatch, lo, hi, tol=1e-15)
        if abs(mismatch(X)) >= tol:
            raise NotTransluminal(f"root at X={X} not resolved to {tol:g}")
        slope = float(local_speed_slope(cfg, X))
        kind = HorizonKind.DISPERSAL if slope > 0 else HorizonKind.ACCUMULATION
        entries.append(Horizon(X % (2 * half), kind, slope))
    entries.sort(key=lambda h: h.X)
    return HorizonSet(tuple(entries), cfg.period)


@dataclass(frozen=True)
class RayTrajectory:
    """Characteristic ``dx/dt = c(x - c_g t)`` sampled at integrator steps.

    ``X`` is the unwrapped co-moving coordinate; lab positions follow from
    ``x = X + c_g t``.
    """

    t: np.ndarray = field(repr=False)
    X: np.ndarray = field(repr=False)
    c_g: float
    stalled: bool = False

    @property
    def x(self) -> np.ndarray:
        return self.X + self.c_g * self.t

    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), self.x.tolist()))


def trace_ray(
    cfg: GratingConfig,
    x0: float,
    t0: float,
    t_end: float,
    rtol: float = RAY_RTOL,
    max_step: float = np.inf,
) -> RayTrajectory:
    """Integrate one ray with an adaptive embedded Runge-Kutta pair (DOP853).

    The scalar autonomous equation ``dX/dt = c(X) - c_g`` is integrated in the
    co-moving frame, where horizons are fixed points.  If the step size
    collapses below ``1e-14`` of the period the trajectory is returned up to
    that point with ``stalled=True``.
    """
    if not t_end > t0:
        raise ValueError("t_end must be greater than t0")
    X0 = x0 - cfg.c_g * t0

    def rhs(_, X):
        return local_speed(cfg, X) - cfg.c_g

    sol = solve_ivp(
        rhs, (t0, t_end), [X0], method="DOP853", rtol=rtol,
        atol=rtol * cfg.period * 1e-2, max_step=max_step,
    )
    t, X = sol.t, sol.y[0]
    stalled = not sol.success
    if not stalled and t.size > 2:
        steps = np.diff(t)
        stalled = bool(np.any(steps[:-1] < STALL_FRACTION * cfg.period))
    return RayTrajectory(t, X, cfg.c_g, stalled)
