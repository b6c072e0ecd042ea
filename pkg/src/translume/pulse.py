"""Long-grating pulse model: Lorentzian phase map, positive-to-negative
frequency amplitudes and the quantities derived from them.

A wave entering with reduced wavevector ``k_tilde`` on rung ``n`` leaves a long
grating as a compressed pulse whose phase map ``f(x)`` has a Lorentzian
derivative of width ``2 gamma / g`` with ``gamma = exp(-2 alpha g d)``.  Writing
``a = k_tilde/g + n`` and ``q = k_tilde + n' g < 0`` the amplitude on output
rung ``n'`` is the Fourier integral

    F = (1/2 pi) int f'(x) exp(i (k_tilde + n g) f(x) - i q x) dx,

which, after closing the contour around the branch cut of ``f`` on the
imaginary axis, collapses to the real semi-infinite integral

    F = -(q/g) exp(i pi a) sinc(pi a) int_{2 gamma/g}^inf e^{q z} ((g z - 2 gamma)/(g z + 2 gamma))^a dz.

Here ``f`` is measured in length units (``df/dx = f'``), which keeps the
exponent dimensionless for any ``g``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _spi

from .errors import DomainError, NoConvergence
from .grating import GratingConfig
from .numerics import integrate_semi_infinite

LONG_GRATING_GAMMA = 0.05
ASYMPTOTIC_THRESHOLD = 8.0  # |k_tilde/g + n'| * 4 gamma
TAIL_RUNS = 20
TAIL_FRACTION = 1e-6
MAX_RUNGS = 200_000
_TINY = 1e-300


@dataclass(frozen=True)
class PulseModel:
    cfg: GratingConfig

    @property
    def gamma(self) -> float:
        return gamma(self.cfg)

    @property
    def long_grating(self) -> bool:
        """True in the regime where the Lorentzian model is quantitative."""
        return self.gamma < LONG_GRATING_GAMMA

    @property
    def width(self) -> float:
        """Lorentzian half width at half maximum of ``f'``."""
        return 2 * self.gamma / self.cfg.g


@dataclass(frozen=True)
class SpectralAmplitude:
    k_tilde: float
    n: int
    n_prime: int
    value: complex

    @property
    def intensity(self) -> float:
        return abs(self.value) ** 2


def gamma(cfg: GratingConfig) -> float:
    return math.exp(-2 * cfg.alpha * cfg.g * cfg.d)


def phase_map(model: PulseModel, x):
    """Return ``(f, f_prime)``; ``f`` rises monotonically from 0 to ``2 pi / g``."""
    g, gam = model.cfg.g, model.gamma
    x = np.asarray(x, dtype=float)
    f_prime = 4 * gam / (x**2 * g**2 + 4 * gam**2)
    f = (2 / g) * (np.arctan(x * g / (2 * gam)) + math.pi / 2)
    return f, f_prime


def _sinc(a: float) -> float:
    """sin(pi a)/(pi a) with exact zeros at nonzero integers."""
    if a == 0:
        return 1.0
    if float(a).is_integer():
        return 0.0
    return math.sin(math.pi * a) / (math.pi * a)


def _indices(model: PulseModel, k_tilde: float, n: int, n_prime: int | None = None):
    g = model.cfg.g
    if not 0 < k_tilde < g:
        raise DomainError(f"k_tilde must lie in (0, g), got {k_tilde}")
    if k_tilde + n * g <= 0:
        raise DomainError(f"incident frequency k_tilde + n g = {k_tilde + n * g} must be positive")
    if n_prime is not None and k_tilde + n_prime * g >= 0:
        raise DomainError(f"exit frequency k_tilde + n' g = {k_tilde + n_prime * g} must be negative")
    return k_tilde / g + n


def _ratio_power(a: float, scale: float):
    # ((z - z0)/(z + z0))^a evaluated from the offset t = z - z0
    def r(t):
        return (t / (t + scale)) ** a

    return r


def spectral_amplitude(model: PulseModel, k_tilde: float, n: int, n_prime: int) -> complex:
    """Complex amplitude for rung ``n`` (positive frequency) to reach ``n_prime`` (negative)."""
    a = _indices(model, k_tilde, n, n_prime)
    s = _sinc(a)
    if s == 0.0:
        return 0j
    g, gam = model.cfg.g, model.gamma
    q = k_tilde + n_prime * g
    z0 = 2 * gam / g
    r = _ratio_power(a, 2 * z0)

    def integrand(t):
        return np.exp(q * (t + z0)) * r(t)

    # relative accuracy only: values span many decades across n'
    res = integrate_semi_infinite(
        integrand, z0, decay_hint=max(abs(q), 1 / z0), tol=1e-12, tol_abs=_TINY, offset=True
    )
    return -(q / g) * np.exp(1j * math.pi * a) * s * res.value


def spectral_amplitude_fourier(model: PulseModel, k_tilde: float, n: int, n_prime: int) -> complex:
    """Reference value from the x-domain Fourier integral (QUADPACK QAWO/QAWF).

    Independent of the closed form: the oscillatory factor ``exp(-i q x)`` is
    handled by the Fourier-weighted QUADPACK routines on ``[-X1, X1]`` and on
    the two infinite tails.
    """
    _indices(model, k_tilde, n, n_prime)
    g = model.cfg.g
    q = k_tilde + n_prime * g
    ka = k_tilde + n * g
    w = abs(q)
    sign = math.copysign(1.0, q)
    x1 = max(40 * model.width, 20 / w)

    def h(x):
        f, fp = phase_map(model, x)
        return fp * np.exp(1j * ka * f)

    def part(fun, lo, hi, kind):
        kw = dict(weight=kind, wvar=w)
        if math.isinf(hi):
            return _spi.quad(fun, lo, hi, epsabs=1e-15, limlst=200, **kw)[0]
        return _spi.quad(fun, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=2000, **kw)[0]

    total = 0j
    warnings.simplefilter("ignore", _spi.IntegrationWarning)
    # int h(x) e^{-i q x} dx = int h (cos(wx) - i sign sin(wx)) dx
    pieces = [(lambda x: h(x), 0.0, x1), (lambda x: h(x), x1, math.inf),
              (lambda x: h(-x), 0.0, x1), (lambda x: h(-x), x1, math.inf)]
    for idx, (fun, lo, hi) in enumerate(pieces):
        mirrored = idx >= 2
        re_c = part(lambda x: fun(x).real, lo, hi, "cos")
        im_c = part(lambda x: fun(x).imag, lo, hi, "cos")
        re_s = part(lambda x: fun(x).real, lo, hi, "sin")
        im_s = part(lambda x: fun(x).imag, lo, hi, "sin")
        cos_part = re_c + 1j * im_c
        sin_part = re_s + 1j * im_s
        if mirrored:
            sin_part = -sin_part  # sin(-wx) = -sin(wx)
        total += cos_part - 1j * sign * sin_part
    return total / (2 * math.pi)


def in_asymptotic_regime(model: PulseModel, k_tilde: float, n_prime: int) -> bool:
    return abs(k_tilde / model.cfg.g + n_prime) * 4 * model.gamma >= ASYMPTOTIC_THRESHOLD


def asymptotic_amplitude(model: PulseModel, k_tilde: float, n: int, n_prime: int) -> float:
    """Large-|n'| Boltzmann form ``sinc^2(pi a) exp(4 gamma (k_tilde/g + n'))`` of ``|F|^2``.

    Normalized consistently with :func:`spectral_amplitude`.  The caller is
    responsible for staying in the regime of :func:`in_asymptotic_regime`.
    """
    a = k_tilde / model.cfg.g + n
    return _sinc(a) ** 2 * math.exp((k_tilde / model.cfg.g + n_prime) * 4 * model.gamma)


@dataclass(frozen=True)
class HawkingTemperature:
    value: float  # hbar g c0 / (4 kB) e^{2 alpha g d}
    omega_form: float  # hbar Omega / (4 kB) e^{2 alpha g d}

    @property
    def forms_differ(self) -> bool:
        return not math.isclose(self.value, self.omega_form, rel_tol=1e-12)

    def __float__(self) -> float:
        return self.value


def hawking_temperature(cfg: GratingConfig) -> HawkingTemperature:
    growth = math.exp(2 * cfg.alpha * cfg.g * cfg.d)
    return HawkingTemperature(
        cfg.hbar * cfg.g * cfg.c0 / (4 * cfg.kB) * growth,
        cfg.hbar * cfg.Omega / (4 * cfg.kB) * growth,
    )


def _sum_rungs(term, start: int, step: int = -1) -> tuple[float, int]:
    """Sum ``term(n')`` from ``start`` until 20 consecutive terms fall below 1e-6 of the total."""
    total, quiet, count = 0.0, 0, 0
    n_prime = start
    while True:
        v = term(n_prime)
        total += v
        count += 1
        quiet = quiet + 1 if v < TAIL_FRACTION * total else 0
        if total == 0.0 and count >= TAIL_RUNS:
            return 0.0, count
        if quiet >= TAIL_RUNS:
            return total, count
        if count >= MAX_RUNGS:
            raise NoConvergence(f"rung sum did not settle after {MAX_RUNGS} terms")
        n_prime += step


def pair_mode_sum(model: PulseModel, k_tilde: float, n: int) -> float:
    """Photon pairs per incident mode from the discrete sum of ``|F|^2 / (hbar c0 |q|)``."""
    a = _indices(model, k_tilde, n)
    if _sinc(a) == 0.0:
        return 0.0
    cfg = model.cfg

    def term(n_prime):
        q = k_tilde + n_prime * cfg.g
        return abs(spectral_amplitude(model, k_tilde, n, n_prime)) ** 2 / (cfg.hbar * cfg.c0 * abs(q))

    return _sum_rungs(term, -1)[0]


def _double_integral(kernel, z0: float, a: float, decay: float) -> float:
    """int_{z0}^inf int_{z0}^inf kernel(z'+z'') r(z') r(z'') dz' dz'' with r = ((z-z0)/(z+z0))^a."""
    r = _ratio_power(a, 2 * z0)
    hint = 1 / z0

    def inner(t_outer):
        z1 = t_outer + z0
        res = integrate_semi_infinite(
            lambda t: kernel(z1 + t + z0) * r(t), z0, decay_hint=hint, tol=1e-9, tol_abs=_TINY,
            offset=True,
        )
        return res.value * r(t_outer)

    def outer(t):
        flat = np.asarray(t, dtype=float).ravel()
        out = np.fromiter((inner(v) for v in flat), dtype=float, count=flat.size)
        return out.reshape(np.shape(t))

    with np.errstate(over="ignore", under="ignore"):
        return integrate_semi_infinite(outer, z0, decay_hint=hint, tol=1e-8, offset=True).value


def pair_number(model: PulseModel, k_tilde: float, n: int, kernel: str = "limit") -> float:
    """Photon pairs per incident mode as a double integral.

    ``kernel="limit"`` evaluates the gamma-independent long-grating form with
    kernel ``(z'+z'')^-2`` over ``[2, inf)^2`` and prefactor
    ``4 sin^2(pi a) / (hbar c0 g a^2)``.  That kernel decays too slowly for the
    outer integral to converge and :class:`NoConvergence` is raised.

    ``kernel="grating"`` sums the rung series under the integral sign for the
    actual grating length, giving the exact kernel
    ``K(s) = e^{-p s} [p/(1-e^{-g s}) + g e^{-g s}/(1-e^{-g s})^2]`` with
    ``p = g - k_tilde``, over ``[2 gamma/g, inf)^2`` with prefactor
    ``sinc^2(pi a) / (hbar c0 g^2)``.  It reproduces :func:`pair_mode_sum`.
    """
    a = _indices(model, k_tilde, n)
    s = _sinc(a)
    if s == 0.0:
        return 0.0
    cfg = model.cfg
    g = cfg.g
    if kernel == "limit":
        value = _double_integral(lambda z: 1.0 / z**2, 2.0, a, 1.0)
        return abs(4 * math.sin(math.pi * a) ** 2 / (cfg.hbar * cfg.c0 * g * a**2) * value)
    if kernel == "grating":
        p = g - k_tilde

        def K(z):
            e = np.exp(-g * z)
            return np.exp(-p * z) * (p / -np.expm1(-g * z) + g * e / np.expm1(-g * z) ** 2)

        z0 = 2 * model.gamma / g
        value = _double_integral(K, z0, a, p)
        return s**2 / (cfg.hbar * cfg.c0 * g**2) * value
    raise ValueError(f"unknown kernel {kernel!r}")


def intensity_sum(model: PulseModel, k_tilde: float, n: int, mode: str = "analytic") -> float:
    """Total intensity over all negative output rungs.

    ``mode="analytic"`` returns ``sin^2(pi a) e^{2 alpha g d} / (a^2 g)``;
    ``mode="numeric"`` sums ``|F|^2`` over rungs until the tail rule is met.
    """
    a = _indices(model, k_tilde, n)
    if _sinc(a) == 0.0:
        return 0.0
    cfg = model.cfg
    if mode == "analytic":
        return math.sin(math.pi * a) ** 2 * math.exp(2 * cfg.alpha * cfg.g * cfg.d) / (a**2 * cfg.g)
    if mode == "numeric":
        return _sum_rungs(lambda m: abs(spectral_amplitude(model, k_tilde, n, m)) ** 2, -1)[0]
    raise ValueError(f"unknown mode {mode!r}")
