"""Numerical kernels shared by the physics modules.

Three families live here:

* adaptive Gauss-Kronrod quadrature on finite intervals and on ``[a, inf)``
  (the latter on a logarithmically stretched axis),
* the exponential of a complex tridiagonal generator, by scaling and squaring
  of a Pade approximant or by integrating the linear ODE column by column,
* bracketed scalar root finding.

All functions are pure; callbacks must be vectorised over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy import integrate as _spi
from scipy import optimize as _spo
from scipy.sparse.linalg import expm_multiply

from .errors import NoConvergence, NoSignChange, OverflowRisk

DEFAULT_TOL = 1e-10
DEFAULT_TOL_ABS = 1e-14
MAX_EVALUATIONS = 10_000_000

# Largest ||M d||_1 (after trace shift) accepted by matrix_exponential_tridiag.
# Beyond this the squaring phase needs more than ~21 squarings and the
# rounding error of the result is no longer controlled.
MAX_EXPONENT_NORM = 1.0e7

MAX_TRIDIAG_DIMENSION = 4097

# 15-point Kronrod rule with its embedded 7-point Gauss rule, on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[1:7:2] = _WG[:3]
_GAUSS[7] = _WG[3]
_GAUSS[9:14:2] = _WG[2::-1]


@dataclass(frozen=True)
class QuadratureResult:
    value: complex | float
    abs_error_estimate: float
    evaluations: int

    def __float__(self) -> float:
        return float(np.real(self.value))


def _gk15(func, lo, hi):
    """Kronrod estimate and |Kronrod - Gauss| on each panel [lo_i, hi_i]."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    y = np.asarray(func(x))
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    kron = half * (y @ _KRONROD)
    gauss = half * (y @ _GAUSS)
    return kron, np.abs(kron - gauss)


def _adaptive(func, a, b, tol, tol_abs, max_evaluations):
    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    vals, errs = _gk15(func, lo, hi)
    evaluations = 15
    done_val = 0.0
    done_err = 0.0
    while True:
        total = done_val + vals.sum()
        err = done_err + errs.sum()
        target = max(tol * abs(total), tol_abs)
        if err <= target:
            return QuadratureResult(total, float(err), evaluations)
        if evaluations >= max_evaluations:
            raise NoConvergence(
                f"quadrature did not reach tolerance after {evaluations} "
                f"evaluations (estimate {total!r}, error {err:.3g})"
            )
        # Panels already below their share of the target are frozen.
        share = target * (hi - lo) / (b - a)
        keep = errs > 0.5 * share
        if not keep.any():
            keep = errs >= errs.max()
        done_val += vals[~keep].sum()
        done_err += errs[~keep].sum()
        lo, hi = lo[keep], hi[keep]
        width = hi - lo
        if np.any(width <= 8 * np.finfo(float).eps * np.maximum(1.0, np.abs(lo))):
            raise NoConvergence("quadrature panel width underflowed")
        mid = lo + 0.5 * width
        lo = np.concatenate([lo, mid])
        hi = np.concatenate([mid, hi])
        vals, errs = _gk15(func, lo, hi)
        evaluations += 15 * lo.size


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
    tol_abs: float = DEFAULT_TOL_ABS,
    max_evaluations: int = MAX_EVALUATIONS,
) -> QuadratureResult:
    """Globally adaptive G7-K15 quadrature of ``f`` over the finite interval [a, b].

    The reported error is the summed |K15 - G7| difference, which bounds the
    error of the (more accurate) Kronrod value with a wide margin.
    """
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)
    if b < a:
        r = integrate(f, b, a, tol, tol_abs, max_evaluations)
        return QuadratureResult(-r.value, r.abs_error_estimate, r.evaluations)
    return _adaptive(f, float(a), float(b), tol, tol_abs, max_evaluations)


def _stretched(f, a, scale, offset):
    # z = a + expm1(u)/scale, dz = exp(u)/scale du
    def g(u):
        t = np.expm1(u) / scale
        vals = f(t) if offset else f(a + t)
        return vals * (np.exp(u) / scale)

    return g


def _decays_to_zero(g, lo, hi) -> bool:
    """Distinguish genuine decay into underflow from a plateau cut off by overflow."""
    u = np.linspace(lo, hi, 257)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        vals = np.abs(np.asarray(g(u[None, :]))).ravel()
    nonzero = np.flatnonzero(vals)
    if nonzero.size < 2:
        return True
    k = nonzero[-1]
    return bool(vals[k] < 0.5 * vals[k - 1])


def _tail_cutoff(g, tol_abs):
    """Smallest u-cutoff whose geometric tail bound is below tol_abs."""
    previous = None
    last_u = 0.0
    for u in (2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 700.0):
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            before, here = np.abs(np.asarray(g(np.array([[u - 1.0, u]])))).ravel()
        if not (np.isfinite(before) and np.isfinite(here)):
            raise NoConvergence("integrand is not finite on the tail")
        if here == 0.0:
            if previous is None or previous < tol_abs or _decays_to_zero(g, last_u, u):
                return u, 0.0
            break
        if here < before and (previous is None or previous >= before):
            bound = here / math.log(before / here)
            if bound < tol_abs:
                return u, bound
        previous, last_u = here, u
    raise NoConvergence(
        "tail of the semi-infinite integral does not decay fast enough "
        "(integrand is not integrable or decay_hint is wrong)"
    )


def integrate_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    decay_hint: float = 1.0,
    tol: float = DEFAULT_TOL,
    tol_abs: float = DEFAULT_TOL_ABS,
    max_evaluations: int = MAX_EVALUATIONS,
    *,
    offset: bool = False,
    verify: bool = False,
) -> QuadratureResult:
    """Integrate ``f`` over ``[a, inf)``.

    The axis is stretched with ``u = log(1 + decay_hint * (z - a))`` so that both
    exponential and algebraic decay become at least geometric in ``u``; the
    ``u`` range is cut where a geometric bound on the remaining tail drops
    below ``tol_abs`` and the rest is handled by adaptive G7-K15 panels.

    ``decay_hint`` is the inverse length over which the integrand changes
    appreciably near ``a`` (e.g. ``|q|`` for ``exp(-|q| z)``).  With
    ``offset=True`` the callback receives ``z - a`` instead of ``z``, which
    avoids cancellation for integrands singular at the lower limit.

    ``verify=True`` re-evaluates the integral on the original axis with
    QUADPACK and raises :class:`NoConvergence` if the two disagree.
    """
    if decay_hint <= 0:
        raise ValueError("decay_hint must be positive")
    g = _stretched(f, float(a), float(decay_hint), offset)
    cutoff, tail = _tail_cutoff(g, tol_abs)
    res = _adaptive(g, 0.0, cutoff, tol, tol_abs, max_evaluations)
    res = QuadratureResult(res.value, res.abs_error_estimate + tail, res.evaluations + 20)
    if verify:
        check = _quadpack_semi_infinite(f, float(a), float(decay_hint), offset, tol)
        allowed = 10 * max(tol * abs(res.value), tol_abs) + 10 * res.abs_error_estimate
        if abs(check - res.value) > max(allowed, 1e3 * np.finfo(float).eps * abs(res.value)):
            raise NoConvergence(
                f"cross-check mismatch: {res.value!r} vs QUADPACK {check!r}"
            )
    return res


def _quadpack_semi_infinite(f, a, scale, offset, tol):
    def scalar(z, part):
        arg = np.array([[z - a if offset else z]])
        v = complex(np.asarray(f(arg)).ravel()[0])
        return v.real if part == 0 else v.imag

    split = a + 10.0 / scale
    out = 0j
    for part, unit in ((0, 1.0), (1, 1j)):
        kw = dict(epsabs=0.0, epsrel=max(tol, 1e-13), limit=500)
        head = _spi.quad(scalar, a, split, args=(part,), **kw)[0]
        rest = _spi.quad(scalar, split, np.inf, args=(part,), **kw)[0]
        out += unit * (head + rest)
    return out


def find_root_bracketed(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
) -> float:
    """Root of ``f`` in ``[lo, hi]`` by Brent's method.

    Terminates when the bracket is narrower than ``tol * max(1, |root|)``.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise NoSignChange(f"f({lo})={flo:g} and f({hi})={fhi:g} have the same sign")
    scale = max(1.0, abs(lo), abs(hi))
    return float(_spo.brentq(f, lo, hi, xtol=tol * scale, rtol=4 * np.finfo(float).eps))


# --------------------------------------------------------------------------
# matrix exponential

_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}
_PADE_B = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}


def _pade(A, m):
    b = _PADE_B[m]
    ident = np.eye(A.shape[0], dtype=A.dtype)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    else:
        U = b[1] * ident
        V = b[0] * ident
        power = ident
        for k in range(1, m // 2 + 1):
            power = power @ A2
            U = U + b[2 * k + 1] * power
            V = V + b[2 * k] * power
        U = A @ U
    return np.linalg.solve(V - U, V + U)


def _as_dense_tridiag(M) -> np.ndarray:
    dense = M.toarray() if sp.issparse(M) else np.asarray(M)
    dense = np.array(dense, dtype=complex)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise ValueError("generator must be a square matrix")
    if dense.shape[0] > MAX_TRIDIAG_DIMENSION:
        raise ValueError(
            f"dimension {dense.shape[0]} exceeds desk-scale bound {MAX_TRIDIAG_DIMENSION}"
        )
    if not np.all(np.isfinite(dense)):
        raise ValueError("generator has non-finite entries")
    if np.any(np.triu(dense, 2)) or np.any(np.tril(dense, -2)):
        raise ValueError("generator is not tridiagonal")
    return dense


def _expm_pade(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    mu = np.trace(A) / n
    A = A - mu * np.eye(n)
    norm = np.linalg.norm(A, 1)
    if norm > MAX_EXPONENT_NORM:
        raise OverflowRisk(
            f"||M d||_1 = {norm:.3g} exceeds the supported bound {MAX_EXPONENT_NORM:.1g}"
        )
    for m in (3, 5, 7, 9):
        if norm <= _PADE_THETA[m]:
            return np.exp(mu) * _pade(A, m)
    s = max(0, int(math.ceil(math.log2(norm / _PADE_THETA[13])))) if norm > 0 else 0
    R = _pade(A / 2.0**s, 13)
    for _ in range(s):
        R = R @ R
    return np.exp(mu) * R


def _expm_ode(A: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    if norm > MAX_EXPONENT_NORM:
        raise OverflowRisk(f"||M d||_1 = {norm:.3g} exceeds {MAX_EXPONENT_NORM:.1g}")

    def rhs(_, y):
        return (A @ y.reshape(n, n)).ravel()

    sol = _spi.solve_ivp(
        rhs, (0.0, 1.0), np.eye(n, dtype=complex).ravel(),
        method="DOP853", rtol=rtol, atol=rtol * 1e-2,
    )
    if not sol.success:
        raise NoConvergence(f"column integration failed: {sol.message}")
    return sol.y[:, -1].reshape(n, n)


def matrix_exponential_tridiag(M, d: float, method: str = "pade", self_check: bool = False) -> np.ndarray:
    """Dense ``exp(M * d)`` for a complex tridiagonal generator ``M``.

    ``method="pade"`` uses scaling and squaring of a diagonal Pade approximant
    (degree chosen from the 1-norm, trace shifted out first).  ``method="ode"``
    integrates ``Y' = M Y`` from the identity with an adaptive 8th-order
    embedded Runge-Kutta pair.  ``self_check=True`` runs both and raises
    :class:`NoConvergence` if they differ by more than 1e-9 in max-norm
    (relative to the largest entry when that exceeds one).
    """
    A = _as_dense_tridiag(M) * d
    if method == "pade":
        P = _expm_pade(A)
    elif method == "ode":
        P = _expm_ode(A)
    else:
        raise ValueError(f"unknown method {method!r}")
    if self_check:
        other = _expm_ode(A) if method == "pade" else _expm_pade(A)
        diff = np.max(np.abs(P - other)) / max(1.0, np.max(np.abs(P)))
        if diff > 1e-9:
            raise NoConvergence(f"Pade and ODE exponentials differ by {diff:.3g}")
    return P


def expm_action(M, d: float, B: np.ndarray) -> np.ndarray:
    """``exp(M * d) @ B`` without forming the exponential (sparse generators)."""
    A = sp.csc_matrix(M) * d
    return expm_multiply(A, np.asarray(B, dtype=complex))


@dataclass(frozen=True)
class BandedPropagator:
    """Dense propagator ``exp(M d)`` of a tridiagonal generator over length ``d``."""

    generator: sp.spmatrix = field(repr=False)
    d: float
    matrix: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def build(cls, generator, d: float, method: str = "pade") -> "BandedPropagator":
        return cls(sp.dia_matrix(generator), float(d), matrix_exponential_tridiag(generator, d, method))
