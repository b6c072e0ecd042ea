"""Observables built on the transmission: vacuum emission spectrum, effective
temperature, stimulated negative-frequency conversion, aliasing and photon
bookkeeping."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientPeaks, NoConvergence, NotTransluminal
from .floquet import LEAKAGE_TOL, transmission_column, transmission_rows
from .grating import GratingConfig
from .pulse import PulseModel, _sum_rungs, hawking_temperature, spectral_amplitude

POINTS_PER_PERIOD = 171
DEFAULT_PERIODS = 3
UNIFORM_POINTS = 512
EDGE_FRACTION = 1e-12
NEG_START = 64
NEG_CAP = 16384
TOP_MARGIN = 8


# ---------------------------------------------------------------------------
# output grids


def chebyshev_grid(Omega: float, periods: int = DEFAULT_PERIODS, per_period: int = POINTS_PER_PERIOD):
    """Per-period Chebyshev nodes: dense near every multiple of ``Omega``.

    The same reduced frequencies repeat in every period, so each base
    frequency needs a single transmission solve for all periods.
    """
    j = np.arange(per_period)
    base = (1 - np.cos(math.pi * (j + 0.5) / per_period)) / 2 * Omega
    return (base[None, :] + Omega * np.arange(periods)[:, None]).ravel()


def uniform_grid(Omega: float, periods: int = DEFAULT_PERIODS, points: int = UNIFORM_POINTS):
    """Half-step offset uniform grid on ``(0, periods * Omega)``."""
    step = periods * Omega / points
    return (np.arange(points) + 0.5) * step


def make_grid(Omega: float, kind: str = "chebyshev", periods: int = DEFAULT_PERIODS, points: int | None = None):
    if kind == "chebyshev":
        return chebyshev_grid(Omega, periods, points or POINTS_PER_PERIOD)
    if kind == "uniform":
        return uniform_grid(Omega, periods, points or UNIFORM_POINTS)
    raise ValueError(f"unknown grid kind {kind!r}")


# ---------------------------------------------------------------------------
# spontaneous emission


@dataclass(frozen=True)
class EmissionSpectrum:
    """Emitted photons per grating period per unit frequency on ``omega``.

    ``contributions[i][k]`` is the share of ``density[i]`` from input rung
    ``n = -(k + 1)``.
    """

    omega: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    cfg: GratingConfig
    contributions: tuple = field(repr=False, default=())
    neg_rungs: int = 0

    @property
    def energy_per_period(self) -> float:
        """``int hbar w N(w) dw`` over the sampled range (trapezoid rule)."""
        order = np.argsort(self.omega)
        w = self.omega[order]
        return float(np.trapezoid(self.cfg.hbar * w * self.density[order], w))

    @property
    def peak(self) -> float:
        return float(self.density.max()) if self.density.size else 0.0


def _base_block(cfg: GratingConfig, wb: float, periods: np.ndarray, n_neg: int):
    """Density contributions for output rungs ``periods`` sharing base ``wb``."""
    top = int(periods.max()) + TOP_MARGIN
    T = transmission_rows(cfg, wb, periods, -n_neg, top)
    n = np.arange(-n_neg, top + 1)
    w_in = wb + n * cfg.Omega
    w_out = wb + periods * cfg.Omega
    neg = w_in < 0
    # most negative first in T; reorder so index k <-> n = -(k+1)
    weights = np.abs(w_in[neg])[::-1][None, :] / w_out[:, None]
    terms = 2 * weights * np.abs(T[:, neg][:, ::-1]) ** 2
    return terms


def _solve_base(cfg: GratingConfig, wb: float, periods: np.ndarray, n_start: int):
    if wb == 0.0 or cfg.alpha == 0.0 or cfg.d == 0.0:
        # no positive/negative mixing: zero-frequency rung or unmodulated medium
        return np.zeros((periods.size, 1)), n_start
    n_neg = n_start
    while True:
        terms = _base_block(cfg, wb, periods, n_neg)
        totals = terms.sum(axis=1)
        edge = terms[:, -2:].max(axis=1)
        if np.all(edge <= EDGE_FRACTION * np.maximum(totals, 1e-300)):
            return terms, n_neg
        if n_neg >= NEG_CAP:
            raise NoConvergence(f"negative-rung sum not settled at {n_neg} rungs for base {wb}")
        n_neg *= 2


def _solve_base_task(args):
    cfg, wb, periods, n_start = args
    return _solve_base(cfg, wb, periods, n_start)


def _group_by_base(omega: np.ndarray, Omega: float):
    m = np.floor(omega / Omega).astype(int)
    wb = omega - m * Omega
    # snap bases that differ only by rounding so periods share a solve
    key = np.round(wb / Omega, 12)
    groups: dict[float, list[int]] = {}
    for i, k in enumerate(key):
        groups.setdefault(float(k), []).append(i)
    return [(float(k) * Omega, np.array(idx), m[np.array(idx)]) for k, idx in sorted(groups.items())]


def vacuum_spectrum(
    cfg: GratingConfig,
    omega=None,
    grid: str = "chebyshev",
    periods: int = DEFAULT_PERIODS,
    points: int | None = None,
    workers: int = 1,
    n_neg: int = NEG_START,
) -> EmissionSpectrum:
    """Spontaneous emission density ``N(w) = 2 sum_{w_n<0} (|w_n|/w) |t(w <- w_n)|^2``.

    The factor 2 adds the negative-frequency incident fluctuations.  Output
    frequencies sharing ``w mod Omega`` are computed together from rows of the
    transmission; the number of negative input rungs doubles from ``n_neg``
    until the two outermost contribute less than 1e-12 of each row's sum.
    Points at exact multiples of ``Omega`` have density 0.
    """
    if not cfg.transluminal and cfg.alpha > 0:
        raise NotTransluminal("vacuum emission requires a transluminal grating")
    w = make_grid(cfg.Omega, grid, periods, points) if omega is None else np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("output frequencies must be positive")
    groups = _group_by_base(w, cfg.Omega)
    density = np.zeros(w.size)
    contributions: list = [None] * w.size
    deepest = 0

    def absorb(group, result):
        nonlocal deepest
        _, idx, _ = group
        terms, used = result
        deepest = max(deepest, used)
        density[idx] = terms.sum(axis=1)
        for row, i in enumerate(idx):
            contributions[i] = terms[row]

    if workers > 1 and len(groups) > 1:
        tasks = [(cfg, wb, m, n_neg) for wb, _, m in groups]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for group, result in zip(groups, pool.map(_solve_base_task, tasks)):
                absorb(group, result)
    else:
        start = n_neg
        for group in groups:
            wb, _, m = group
            result = _solve_base(cfg, wb, m, start)
            start = max(n_neg, result[1] // 2)  # neighbouring bases need similar depth
            absorb(group, result)
    return EmissionSpectrum(w, density, cfg, tuple(contributions), deepest)


# ---------------------------------------------------------------------------
# effective temperature


@dataclass(frozen=True)
class ThermalFit:
    T: float
    residual: float
    omega_peaks: np.ndarray = field(repr=False)
    log_peaks: np.ndarray = field(repr=False)
    intercept: float = 0.0


def _refine(x, y, k):
    """Vertex of the parabola through three neighbours of a sampled maximum."""
    if k == 0 or k == len(x) - 1:
        return x[k], y[k]
    xs, ys = x[k - 1:k + 2], y[k - 1:k + 2]
    c2, c1, c0 = np.polyfit(xs - xs[1], ys, 2)
    if c2 >= 0:
        return x[k], y[k]
    dx = float(np.clip(-c1 / (2 * c2), xs[0] - xs[1], xs[2] - xs[1]))
    return xs[1] + dx, c0 + c1 * dx + c2 * dx**2


def lobe_maxima(omega, density, Omega: float):
    """Largest value of ``log(w N(w))`` in every period, refined parabolically."""
    order = np.argsort(omega)
    w, n = np.asarray(omega)[order], np.asarray(density)[order]
    ok = n > 0
    w, y = w[ok], np.log(w[ok] * n[ok])
    period = np.floor(w / Omega).astype(int)
    xs, ys = [], []
    for p in np.unique(period):
        sel = np.flatnonzero(period == p)
        if sel.size < 3:
            continue
        k = sel[np.argmax(y[sel])]
        if k in (sel[0], sel[-1]):
            continue  # lobe maximum not inside this period's samples
        xm, ym = _refine(w, y, k)
        xs.append(xm)
        ys.append(ym)
    return np.array(xs), np.array(ys)


def _line_fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return slope, intercept, resid


def thermal_fit(spectrum: EmissionSpectrum, mode: str = "all", min_peaks: int = 3) -> ThermalFit:
    """Fit ``log(w N) = c - hbar w / (kB T)`` through the lobe maxima.

    ``mode="all"`` uses every lobe.  ``mode="tail"`` iterates to a
    self-consistent fit over lobes with ``hbar w >= 2 kB T`` only, where the
    spectrum has left the low-frequency region shaped by the zeros.
    """
    cfg = spectrum.cfg
    x, y = lobe_maxima(spectrum.omega, spectrum.density, cfg.Omega)
    if x.size < min_peaks:
        raise InsufficientPeaks(f"need at least {min_peaks} lobe maxima, found {x.size}")
    slope, icpt, resid = _line_fit(x, y)
    if mode == "tail":
        for _ in range(50):
            if slope >= 0:
                break
            T = -cfg.hbar / (cfg.kB * slope)
            sel = cfg.hbar * x >= 2 * cfg.kB * T
            if sel.sum() < min_peaks:
                raise InsufficientPeaks(
                    f"only {int(sel.sum())} lobe maxima above 2 kB T / hbar = {2 * cfg.kB * T / cfg.hbar:.4g}"
                )
            new = _line_fit(x[sel], y[sel])
            if math.isclose(new[0], slope, rel_tol=1e-12):
                slope, icpt, resid = new
                break
            slope, icpt, resid = new
    elif mode != "all":
        raise ValueError(f"unknown mode {mode!r}")
    if slope >= 0:
        raise InsufficientPeaks("lobe maxima do not decay with frequency")
    return ThermalFit(-cfg.hbar / (cfg.kB * slope), resid, x, y, icpt)


@dataclass(frozen=True)
class TemperatureRun:
    spectrum: EmissionSpectrum
    fit: ThermalFit
    T_H: float


def fit_temperature(
    cfg: GratingConfig,
    points: int = 24,
    span_factor: float = 4.0,
    start_periods: int = 6,
    max_periods: int = 400,
    workers: int = 1,
) -> TemperatureRun:
    """Tail temperature of the vacuum spectrum with an adaptively grown span.

    The spectrum is recomputed on more periods until it reaches
    ``span_factor * kB T_fit / hbar``.
    """
    periods = start_periods
    while True:
        spec = vacuum_spectrum(cfg, grid="chebyshev", periods=periods, points=points, workers=workers)
        try:
            fit = thermal_fit(spec, mode="tail")
            needed = math.ceil(span_factor * cfg.kB * fit.T / (cfg.hbar * cfg.Omega))
        except InsufficientPeaks:
            rough = thermal_fit(spec, mode="all")
            needed = max(2 * periods, math.ceil(span_factor * cfg.kB * rough.T / (cfg.hbar * cfg.Omega)))
            fit = None
        if fit is not None and periods >= needed:
            return TemperatureRun(spec, fit, hawking_temperature(cfg).value)
        if needed > max_periods:
            raise NoConvergence(f"spectrum span of {needed} periods exceeds {max_periods}")
        periods = max(needed, periods + 1)


# ---------------------------------------------------------------------------
# stimulated conversion


@dataclass(frozen=True)
class StimulatedResult:
    engine: str
    n_prime: np.ndarray = field(repr=False)
    fraction: np.ndarray = field(repr=False)

    @property
    def total(self) -> float:
        return float(self.fraction.sum())


def stimulated_fractions(cfg: GratingConfig, k_tilde: float, n: int, engine: str = "analytic") -> StimulatedResult:
    """Fraction of the input power on each negative-frequency output rung."""
    if engine == "analytic":
        model = PulseModel(cfg)
        seen: list[tuple[int, float]] = []
        if cfg.alpha == 0 or cfg.d == 0:
            return StimulatedResult(engine, np.array([-1]), np.zeros(1))

        def term(m):
            v = abs(spectral_amplitude(model, k_tilde, n, m)) ** 2
            seen.append((m, v))
            return v

        _sum_rungs(term, -1)
        arr = np.array(seen)
        return StimulatedResult(engine, arr[:, 0].astype(int), arr[:, 1])
    if engine == "floquet":
        omega_in = cfg.c0 * (k_tilde + n * cfg.g) / cfg.eps_b
        if omega_in <= 0:
            raise ValueError("input frequency must be positive")
        base = omega_in - n * cfg.Omega
        col = transmission_column(cfg, base, n)
        if not col.converged:
            raise NoConvergence(f"column leakage above {LEAKAGE_TOL}")
        neg = col.frequencies < 0
        rungs = np.arange(-col.N_max, col.N_max + 1)[neg]
        return StimulatedResult(engine, rungs[::-1], np.abs(col.amplitudes[neg][::-1]) ** 2)
    raise ValueError(f"unknown engine {engine!r}")


# ---------------------------------------------------------------------------
# aliasing and photon bookkeeping


@dataclass(frozen=True)
class AliasSignature:
    positive_alias: float
    negative_alias: float
    degenerate: bool


def alias_signature(omega_probe: float, Omega: float) -> AliasSignature:
    """Where a probe and its negative-frequency partner appear after sampling at ``Omega``."""
    pos = math.fmod(omega_probe, Omega)
    if pos < 0:
        pos += Omega
    neg = Omega - pos
    half = 2 * omega_probe / Omega
    degenerate = math.isclose(half, round(half), abs_tol=1e-12)
    return AliasSignature(pos, neg, degenerate)


@dataclass(frozen=True)
class FluxSpectrum:
    omega_n: np.ndarray
    flux: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "omega_n", np.asarray(self.omega_n, dtype=float))
        object.__setattr__(self, "flux", np.asarray(self.flux, dtype=float))
        if self.omega_n.shape != self.flux.shape:
            raise ValueError("omega_n and flux must have the same shape")

    def with_entry(self, omega: float, flux: float) -> "FluxSpectrum":
        return FluxSpectrum(np.append(self.omega_n, omega), np.append(self.flux, flux), self.hbar)


@dataclass(frozen=True)
class PhotonCounts:
    N: float
    N_tilde: float

    @property
    def pairs(self) -> float:
        return (self.N - self.N_tilde) / 2


def photon_counts(flux: FluxSpectrum) -> PhotonCounts:
    if np.any(flux.flux < 0):
        raise ValueError("fluxes must be non-negative")
    if np.any(flux.omega_n == 0):
        raise ValueError("zero-frequency entries carry no photon number")
    quanta = flux.flux / (flux.hbar * flux.omega_n)
    return PhotonCounts(float(np.sum(np.abs(quanta))), float(np.sum(quanta)))
