"""Floquet coupled-mode transmission of a finite travelling-wave grating.

Derivation of the generator
---------------------------
With ``eps = mu`` the impedance is constant, nothing is reflected, and a
forward wave obeys the one-way equation

    d_x F + (1/c0) d_t (eps F) = 0,   eps = eps_b + alpha (e^{i(gx - Omega t)} + c.c.).

Expand ``F = sum_n b_n(x) exp(i n g x - i w_n t)`` with ``w_n = w_base + n Omega``.
Multiplying by ``exp(+-i(gx - Omega t))`` shifts a term from rung ``n -+ 1`` to
rung ``n`` without changing its form, so

    eps F = sum_n [eps_b b_n + alpha (b_{n-1} + b_{n+1})] exp(i n g x - i w_n t).

``d_t`` brings down ``-i w_n`` and ``d_x`` gives ``b_n' + i n g b_n``.  Matching
rungs,

    b_n' = i (w_n eps_b / c0 - n g) b_n + i (w_n alpha / c0) (b_{n-1} + b_{n+1}),

i.e. ``b' = M b`` with an ``x``-independent tridiagonal ``M``.  The
transmission over a length ``d`` is therefore exactly ``exp(M d)``.

Because row ``n`` of ``M`` is ``w_n`` times a symmetric matrix plus a diagonal
term, ``sum_n |b_n|^2 / w_n`` is an exact invariant of the flow (also under
truncation); rung leakage at the ladder ends is the truncation diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NoConvergence
from .grating import GratingConfig
from .numerics import MAX_TRIDIAG_DIMENSION, expm_action, matrix_exponential_tridiag

AUTO_START = 64
AUTO_CAP = (MAX_TRIDIAG_DIMENSION - 1) // 2  # 4097 rungs in total
LEAKAGE_TOL = 1e-8
CORE_RUNGS = 4
TOL_CONSERVE = 1e-6


def rung_frequencies(cfg: GratingConfig, omega_base: float, N_max: int) -> np.ndarray:
    n = np.arange(-N_max, N_max + 1)
    return omega_base + n * cfg.Omega


def coupling_matrix(cfg: GratingConfig, omega_base: float, N_max: int) -> sp.csr_matrix:
    """Tridiagonal generator ``M`` on rungs ``-N_max..N_max`` (see module docstring)."""
    if N_max < 1:
        raise ValueError("N_max must be >= 1")
    n = np.arange(-N_max, N_max + 1)
    w = omega_base + n * cfg.Omega
    diag = 1j * (w * cfg.eps_b / cfg.c0 - n * cfg.g)
    off = 1j * w * cfg.alpha / cfg.c0
    # row n couples to n-1 (lower) and n+1 (upper) with the row's own frequency
    return sp.diags([off[1:], diag, off[:-1]], [-1, 0, 1], format="csr")


@dataclass(frozen=True)
class TransmissionLadder:
    """Dense rung-to-rung amplitudes ``t[n' + N_max, n + N_max]`` for one base frequency."""

    cfg: GratingConfig
    omega_base: float
    N_max: int
    t: np.ndarray = field(repr=False)
    converged: bool
    leakage: float
    core: int = CORE_RUNGS

    @property
    def rungs(self) -> np.ndarray:
        return np.arange(-self.N_max, self.N_max + 1)

    @property
    def frequencies(self) -> np.ndarray:
        return rung_frequencies(self.cfg, self.omega_base, self.N_max)

    def index(self, n: int) -> int:
        if abs(n) > self.N_max:
            raise IndexError(f"rung {n} outside ladder of half-width {self.N_max}")
        return n + self.N_max

    def amplitude(self, n_out: int, n_in: int) -> complex:
        return complex(self.t[self.index(n_out), self.index(n_in)])

    def column(self, n_in: int) -> np.ndarray:
        return self.t[:, self.index(n_in)]


def _boundary_leakage(t: np.ndarray, N_max: int, core: int) -> float:
    core = min(core, N_max)
    edges = np.abs(t[[0, -1], N_max - core:N_max + core + 1])
    return float(edges.max())


def _build(cfg, omega_base, N_max, method, core):
    M = coupling_matrix(cfg, omega_base, N_max)
    t = matrix_exponential_tridiag(M, cfg.d, method=method)
    return t, _boundary_leakage(t, N_max, core)


def transmission_ladder(
    cfg: GratingConfig,
    omega_base: float,
    N_max: int | str = "auto",
    method: str = "pade",
    core: int = CORE_RUNGS,
) -> TransmissionLadder:
    """Transmission matrix ``exp(M d)``.

    A unit input on rung ``n`` spreads over roughly ``|w_n| / gamma`` rungs, so
    convergence is certified for the core inputs ``|n| <= core`` only: the
    amplitude they send to the two end rungs must be below 1e-8 and their
    pseudo-photon residual below 1e-6.  With ``N_max="auto"`` the half-width
    doubles from 64 and :class:`NoConvergence` is raised beyond 2048 (4097
    rungs in total).
    """
    if cfg.d == 0:
        size = 2 * (AUTO_START if N_max == "auto" else int(N_max)) + 1
        eye = np.eye(size, dtype=complex)
        return TransmissionLadder(cfg, omega_base, size // 2, eye, True, 0.0, core)
    if N_max != "auto":
        N_max = int(N_max)
        t, leak = _build(cfg, omega_base, N_max, method, core)
        return _with_verdict(TransmissionLadder(cfg, omega_base, N_max, t, False, leak, core))
    N = AUTO_START
    while N <= AUTO_CAP:
        t, leak = _build(cfg, omega_base, N, method, core)
        ladder = _with_verdict(TransmissionLadder(cfg, omega_base, N, t, False, leak, core))
        if ladder.converged:
            return ladder
        N *= 2
    raise NoConvergence(
        f"ladder not converged at N_max={N // 2} (leakage {leak:.3g}) for omega_base={omega_base}"
    )


def _with_verdict(ladder: TransmissionLadder) -> TransmissionLadder:
    ok = ladder.leakage < LEAKAGE_TOL
    if ok:
        half = min(ladder.core, ladder.N_max)
        w = ladder.frequencies
        for n in range(-half, half + 1):
            if w[ladder.index(n)] != 0 and conservation_residual(ladder, n) >= TOL_CONSERVE:
                ok = False
                break
    return TransmissionLadder(
        ladder.cfg, ladder.omega_base, ladder.N_max, ladder.t, ok, ladder.leakage, ladder.core
    )


def conservation_residual(ladder: TransmissionLadder, n: int) -> float:
    """``|sum_n' (w_n / w_n') |t_n'n|^2 - 1|`` for input rung ``n`` (signed frequencies)."""
    w = ladder.frequencies
    w_in = w[ladder.index(n)]
    if w_in == 0:
        raise ValueError("a zero-frequency input rung carries no pseudo-photons")
    col = np.abs(ladder.column(n)) ** 2
    live = w != 0
    return float(abs(np.sum(w_in / w[live] * col[live]) - 1.0))


@dataclass(frozen=True)
class TransmissionColumn:
    """Amplitudes on every output rung for unit input on rung ``n``."""

    omega_base: float
    n: int
    N_max: int
    amplitudes: np.ndarray = field(repr=False)
    frequencies: np.ndarray = field(repr=False)
    converged: bool


def transmission_column(
    cfg: GratingConfig, omega_base: float, n: int, N_max: int | str = "auto"
) -> TransmissionColumn:
    """Single input column ``exp(M d) e_n`` via the action of the exponential.

    Cheaper than a dense ladder for large ``N_max``; ``"auto"`` doubles the
    half-width until the end rungs hold less than 1e-8.
    """
    N = max(AUTO_START, 2 * abs(n)) if N_max == "auto" else int(N_max)
    if abs(n) > N:
        raise ValueError(f"input rung {n} outside ladder of half-width {N}")
    cap = 8 * AUTO_CAP
    while True:
        e = np.zeros(2 * N + 1, dtype=complex)
        e[n + N] = 1.0
        if cfg.d == 0:
            col = e
        else:
            col = expm_action(coupling_matrix(cfg, omega_base, N), cfg.d, e)
        leak = float(max(abs(col[0]), abs(col[-1])))
        ok = leak < LEAKAGE_TOL
        if ok or N_max != "auto":
            return TransmissionColumn(omega_base, n, N, col, rung_frequencies(cfg, omega_base, N), ok)
        if N >= cap:
            raise NoConvergence(f"column not converged at N_max={N} (leakage {leak:.3g})")
        N *= 2


def transmission_rows(
    cfg: GratingConfig, omega_base: float, rows: np.ndarray, n_lo: int, n_hi: int
) -> np.ndarray:
    """Selected output rows of ``exp(M d)`` on the rung window ``[n_lo, n_hi]``.

    Row ``m`` of the transmission is column ``m`` of ``exp(M^T d)``, so many
    output rungs sharing one base frequency cost one multi-vector action.
    Returns an array of shape ``(len(rows), n_hi - n_lo + 1)`` indexed by input
    rung.
    """
    n = np.arange(n_lo, n_hi + 1)
    w = omega_base + n * cfg.Omega
    diag = 1j * (w * cfg.eps_b / cfg.c0 - n * cfg.g)
    off = 1j * w * cfg.alpha / cfg.c0
    MT = sp.diags([off[:-1], diag, off[1:]], [-1, 0, 1], format="csr")
    E = np.zeros((n.size, len(rows)), dtype=complex)
    for j, m in enumerate(rows):
        E[m - n_lo, j] = 1.0
    if cfg.d == 0:
        return E.T
    return expm_action(MT, cfg.d, E).T


@dataclass(frozen=True)
class WindowKernel:
    N_periods: int
    Delta_g: float

    def __post_init__(self):
        if self.N_periods < 1:
            raise ValueError("N_periods must be >= 1")

    @classmethod
    def for_grating(cls, cfg: GratingConfig, N_periods: int) -> "WindowKernel":
        return cls(N_periods, 2 * math.pi / cfg.Omega)


def window_kernel_weights(kernel: WindowKernel, x) -> np.ndarray:
    """``(1/(pi N)) sin^2(N x) / sin^2(x)``, equal to ``N/pi`` at multiples of pi."""
    N = kernel.N_periods
    x = np.asarray(x, dtype=float)
    s = np.sin(x)
    near = np.abs(s) < 1e-7
    safe = np.where(near, 1.0, s)
    out = np.sin(N * x) ** 2 / safe**2 / (math.pi * N)
    # Dirichlet-kernel limit with its quadratic correction near x = m pi
    dx = x - np.round(x / math.pi) * math.pi
    limit = N / math.pi * (1 - (N**2 - 1) * dx**2 / 3)
    return np.where(near, limit, out)
