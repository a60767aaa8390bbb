"""Special functions: Gamma, Pochhammer, Bessel J of real order, j_nu and P_{j,n}.

The Bessel function is summed from its power series in double-double
arithmetic (error-free ``two_sum`` / ``two_prod`` transformations), which keeps
the cancellation in the alternating series under control up to ``T_MAX``.
Beyond ``T_MAX`` the absolute error would exceed ~1e-8 and the functions
refuse the input instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, PoleError, SingularityError

T_MAX = 60.0

_LANCZOS_G = 7.0
_LANCZOS_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


@dataclass(frozen=True)
class SeriesParams:
    """Truncation control for the Bessel power series.

    A series is cut once the current term is below ``rel_tol`` times the
    partial sum (or below the double-double noise floor of the largest term).
    """

    rel_tol: float = 1e-17
    max_terms: int = 400

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if int(self.max_terms) < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_SERIES = SeriesParams()


# -- Gamma ------------------------------------------------------------------


def _sin_pi(x):
    # sin(pi*x) with the argument reduced first, accurate near the integers
    n = np.round(x)
    sign = np.where(np.mod(n, 2) == 0, 1.0, -1.0)
    return sign * np.sin(np.pi * (x - n))


def _lanczos(x):
    # Gamma(x) for x >= 0.5
    x = x - 1.0
    acc = np.full_like(x, _LANCZOS_P[0])
    for i in range(1, len(_LANCZOS_P)):
        acc = acc + _LANCZOS_P[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    half = 0.5 * (x + 0.5)
    # t**(x+0.5) split in two halves to delay overflow
    p = t**half
    return math.sqrt(2.0 * math.pi) * p * (p * np.exp(-t)) * acc


def gamma(x):
    """Gamma function by a Lanczos approximation (g=7, 9 terms).

    Reflection ``Gamma(x) Gamma(1-x) = pi / sin(pi x)`` is used for x < 1/2.
    Raises ``PoleError`` at 0, -1, -2, ...
    """
    xa = np.asarray(x, dtype=float)
    poles = (xa <= 0) & (xa == np.round(xa))
    if np.any(poles):
        bad = xa[poles].ravel()[0]
        raise PoleError(f"Gamma has a pole at x = {bad:g}")
    out = np.empty_like(xa)
    lo = xa < 0.5
    exact = (xa > 0) & (xa == np.round(xa)) & (xa <= 171)
    if np.any(exact):
        out[exact] = [float(math.factorial(int(v) - 1)) for v in xa[exact]]
    lo &= ~exact
    hi = ~lo & ~exact
    if np.any(hi):
        out[hi] = _lanczos(xa[hi])
    if np.any(lo):
        xl = xa[lo]
        out[lo] = np.pi / (_sin_pi(xl) * _lanczos(1.0 - xl))
    return float(out) if out.ndim == 0 else out


def pochhammer(s: float, i: int) -> float:
    """Rising factorial (s)_i = s (s+1) ... (s+i-1), with (s)_0 = 1."""
    if i < 0:
        raise ValueError("pochhammer index must be non-negative")
    out = 1.0
    for j in range(i):
        out *= s + j
    return out


# -- double-double primitives ----------------------------------------------

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return _quick_two_sum(p, e)


def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    e = e + (al + bl)
    return _quick_two_sum(s, e)


def _dd_recip(bh, bl):
    q1 = 1.0 / bh
    ph, pl = _dd_mul(q1, 0.0, bh, bl)
    rh, rl = _dd_add(1.0, 0.0, -ph, -pl)
    q2 = (rh + rl) / bh
    return _quick_two_sum(q1, q2)


def _series_sum(nu: float, t: np.ndarray, params: SeriesParams) -> np.ndarray:
    """Sum_{k>=0} z^k / (k! (nu+1)_k) with z = -(t/2)^2, in double-double."""
    t = np.asarray(t, dtype=float)
    flat = t.ravel()
    half = 0.5 * flat
    zh, zl = _two_prod(half, half)
    zh, zl = -zh, -zl
    sh = np.ones_like(flat)
    sl = np.zeros_like(flat)
    th = np.ones_like(flat)
    tl = np.zeros_like(flat)
    biggest = np.ones_like(flat)
    active = np.arange(flat.size)
    for k in range(1, params.max_terms + 1):
        if active.size == 0:
            break
        # 1 / (k (k + nu)) as a double-double scalar
        kh, kl = _two_sum(float(k), nu)
        kh, kl = _dd_mul(kh, kl, float(k), 0.0)
        ch, cl = _dd_recip(kh, kl)
        a = active
        h, l_ = _dd_mul(th[a], tl[a], zh[a], zl[a])
        h, l_ = _dd_mul(h, l_, ch, cl)
        th[a], tl[a] = h, l_
        sh[a], sl[a] = _dd_add(sh[a], sl[a], h, l_)
        mag = np.abs(h)
        biggest[a] = np.maximum(biggest[a], mag)
        past_peak = (abs(k * (k + nu)) > 2.0 * np.abs(zh[a])) & (k + nu > 0)
        floor = np.maximum(np.abs(sh[a]), 2.0**-104 * biggest[a])
        done = past_peak & (mag <= params.rel_tol * floor)
        active = a[~done]
    else:
        if active.size:
            raise ConvergenceError(
                f"Bessel series of order {nu:g} not converged within "
                f"{params.max_terms} terms (t up to {flat[active].max():g})"
            )
    return (sh + sl).reshape(t.shape)


def _check_argument(t: np.ndarray) -> None:
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise DomainError("Bessel argument must be finite and >= 0")
    if np.any(t > T_MAX):
        raise DomainError(
            f"Bessel argument {t.max():.6g} exceeds the supported range "
            f"[0, {T_MAX:g}] of the power-series evaluation"
        )


def _negative_integer(nu: float) -> bool:
    return nu < 0 and nu == round(nu)


def bessel_j(nu: float, t, params: SeriesParams = DEFAULT_SERIES):
    """Bessel function of the first kind J_nu(t), real order, 0 <= t <= T_MAX.

    Negative integer orders use J_{-m} = (-1)^m J_m.  For t = 0 and non-integer
    nu < 0 the function is singular and ``SingularityError`` is raised.
    """
    nu = float(nu)
    ta = np.asarray(t, dtype=float)
    _check_argument(ta)
    if _negative_integer(nu):
        m = int(round(-nu))
        out = (-1.0) ** m * np.asarray(bessel_j(float(m), ta, params))
        return float(out) if out.ndim == 0 else out
    if nu < 0 and np.any(ta == 0):
        raise SingularityError(f"J_nu is singular at t = 0 for nu = {nu:g} < 0")
    pref = np.power(0.5 * ta, nu) / gamma(nu + 1.0)
    out = pref * _series_sum(nu, ta, params)
    return float(out) if out.ndim == 0 else out


def j_lower(nu: float, r, d: int, params: SeriesParams = DEFAULT_SERIES):
    """j_nu(r) = r^{-(d-2)/2} J_{nu+(d-2)/2}(r), including its limit at r = 0."""
    nu = float(nu)
    h = 0.5 * (d - 2)
    ra = np.asarray(r, dtype=float)
    _check_argument(ra)
    order = nu + h
    if nu < 0 and np.any(ra == 0):
        raise SingularityError(f"j_nu is singular at r = 0 for nu = {nu:g} < 0")
    if _negative_integer(order):
        with np.errstate(divide="ignore"):
            out = np.power(ra, -h) * np.asarray(bessel_j(order, ra, params))
    else:
        # r^{-h} (r/2)^{nu+h} / Gamma(nu+h+1) * S  =  2^{-order} r^nu / Gamma(order+1) * S
        out = (
            2.0 ** (-order)
            * np.power(ra, nu)
            / gamma(order + 1.0)
            * _series_sum(order, ra, params)
        )
    return float(out) if np.ndim(out) == 0 else out


def pjn_coefficients(alpha_j: float, n: int, d: int) -> np.ndarray:
    """Monomial coefficients c_i of P_{j,n}(t) = sum_i c_i t^i (ascending)."""
    b = 0.5 * d - alpha_j
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    for i in range(1, n + 1):
        den = b + i - 1
        if den == 0:
            raise DomainError(
                f"(d/2 - alpha)_i vanishes: d/2 - alpha = {b:g} is a non-positive integer"
            )
        coeffs[i] = coeffs[i - 1] * (-n + i - 1) / den / i
    return coeffs


def pjn_poly(alpha_j: float, n: int, d: int, t):
    """P_{j,n}(t) = sum_{i=0}^n (-n)_i / (d/2 - alpha_j)_i * t^i / i!."""
    coeffs = pjn_coefficients(alpha_j, n, d)
    out = np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), coeffs)
    return float(out) if np.ndim(out) == 0 else out
