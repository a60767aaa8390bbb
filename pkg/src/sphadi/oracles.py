"""Closed-form solutions used as ground truth for the propagator.

``free_gaussian`` evolves e^{-r^2/4w^2} under e^{it Delta}.  The V_{n,j}
family are eigenpackets of H = -Delta + a/|x|^2 whose evolution stays in
closed form:

    V_{n,j}(x) = |x|^{-alpha_j} e^{-|x|^2/4} P_{j,n}(|x|^2/2) psi_j(x/|x|)

and e^{-itH} V_{n,j} = (1+t^2)^{-d/4+alpha_j/2} |x|^{-alpha_j}
e^{-|x|^2/4(1+t^2)} e^{i|x|^2 t/4(1+t^2)} e^{-i gamma arctan t}
P_{j,n}(|x|^2/2(1+t^2)) psi_j.  The rate gamma is not tabulated; it is
recovered by inserting the formula into i psi_t = H psi at t = 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .angular import alpha_beta
from .errors import ConfigError, SingularityError
from .specfun import gamma as gamma_fn
from .specfun import pjn_coefficients, pochhammer

__all__ = [
    "VnjSpec",
    "free_gaussian",
    "resolve_vnj",
    "vnj",
    "vnj_evolved",
    "vnj_derivatives",
    "pde_residual",
]


def free_gaussian(t, r, d: int, width: float = 1.0):
    """Free evolution of exp(-r^2 / (4 width^2)).

    The Fourier transform of the datum is proportional to exp(-width^2 |xi|^2),
    and e^{it Delta} multiplies it by exp(-it |xi|^2), so width^2 is replaced
    by width^2 + it (principal branch of the power).
    """
    if not width > 0:
        raise ValueError("width must be positive")
    w2 = width * width
    z = w2 + 1j * np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    out = (w2 / z) ** (0.5 * d) * np.exp(-(r**2) / (4.0 * z))
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class VnjSpec:
    """Parameters of one V_{n,j}.

    ``j`` follows the 1-based labelling of the family; the corresponding
    ascending mode index of :class:`~sphadi.angular.SpectralData` is ``j - 1``.
    ``gamma_nj`` is the phase rate, ``norm`` the L2 norm of V_{n,j}.
    """

    n: int
    j: int
    mu: float
    alpha_j: float
    gamma_nj: float
    norm: float
    d: int = 3

    def __post_init__(self):
        if self.n < 0 or self.j < 1:
            raise ValueError("need n >= 0 and j >= 1")
        if not self.norm > 0:
            raise ValueError("norm must be positive")

    @property
    def mode_index(self) -> int:
        return self.j - 1

    @property
    def beta_j(self) -> float:
        return 0.5 * (self.d - 2) - self.alpha_j

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "VnjSpec":
        return cls(**doc)


def _closed_norm(n: int, beta: float) -> float:
    # ||V||^2 = 2^beta int u^beta e^{-u} P(u)^2 du with P = n!/(beta+1)_n L_n^beta
    return math.sqrt(2.0**beta * math.factorial(n) * gamma_fn(beta + 1.0) / pochhammer(beta + 1.0, n))


def _poly_derivs(coeffs: np.ndarray, u):
    P = np.polynomial.polynomial
    c1 = P.polyder(coeffs) if coeffs.size > 1 else np.zeros(1)
    c2 = P.polyder(c1) if c1.size > 1 else np.zeros(1)
    return P.polyval(u, coeffs), P.polyval(u, c1), P.polyval(u, c2)


def vnj_derivatives(n: int, alpha: float, d: int, t, r, coeffs=None):
    """Radial profile of the unnormalized evolved packet without the phase
    e^{-i gamma arctan t}, with its first two r-derivatives.

    The profile is (1+t^2)^{-d/4+alpha/2} r^{-alpha} e^{-b r^2} Q(r) with
    b = (1 - it) / (4(1+t^2)) and Q(r) = P(r^2 / 2(1+t^2)).
    """
    if coeffs is None:
        coeffs = pjn_coefficients(alpha, n, d)
    t = float(t)
    r = np.asarray(r, dtype=float)
    s = 1.0 + t * t
    b = (1.0 - 1j * t) / (4.0 * s)
    u = r * r / (2.0 * s)
    p0, p1, p2 = _poly_derivs(coeffs, u)
    Q, Q1, Q2 = p0, p1 * r / s, p2 * (r / s) ** 2 + p1 / s
    e = np.exp(-b * r * r)
    g = e * Q
    g1 = e * (Q1 - 2 * b * r * Q)
    g2 = e * (Q2 - 4 * b * r * Q1 - 2 * b * Q + 4 * b * b * r * r * Q)
    ra = r ** (-alpha)
    v0 = ra * g
    v1 = -alpha * ra / r * g + ra * g1
    v2 = alpha * (alpha + 1) * ra / r**2 * g - 2 * alpha * ra / r * g1 + ra * g2
    c = s ** (-d / 4.0 + alpha / 2.0)
    return c * v0, c * v1, c * v2


def resolve_vnj(
    n: int, mu: float, d: int = 3, j: int = 1, probe=(0.7, 1.3, 2.1), tol: float = 1e-9
) -> VnjSpec:
    """Build a :class:`VnjSpec`, resolving gamma from i psi_t = H psi at t = 0.

    At t = 0 the time derivative of the closed form is i(r^2/4 - gamma) V,
    so gamma = (H V)(r) / V(r) + r^2 / 4 for any r with V(r) != 0.  The value
    is computed at the ``probe`` radii and must agree there to ``tol``.
    """
    alpha, beta = alpha_beta(mu, d)
    coeffs = pjn_coefficients(alpha, n, d)
    rs = np.asarray(probe, dtype=float)
    v0, v1, v2 = vnj_derivatives(n, alpha, d, 0.0, rs, coeffs)
    keep = np.abs(v0) > 1e-8
    if not np.any(keep):
        raise ConfigError("gamma unresolved: V vanishes at every probe radius")
    Hv = -v2 - (d - 1) / rs * v1 + mu / rs**2 * v0
    gam = (Hv[keep] / v0[keep]).real + rs[keep] ** 2 / 4
    if np.ptp(gam) > tol * max(1.0, abs(gam).max()):
        raise ConfigError(f"gamma unresolved: probe values disagree ({gam})")
    return VnjSpec(
        n=n, j=j, mu=float(mu), alpha_j=alpha, gamma_nj=float(np.mean(gam)),
        norm=_closed_norm(n, beta), d=d,
    )


def _check_r(spec: VnjSpec, r: np.ndarray) -> None:
    if spec.alpha_j > 0 and np.any(r == 0):
        raise SingularityError("V_{n,j} is singular at r = 0 when alpha_j > 0")


def vnj(spec: VnjSpec, r):
    """Unnormalized radial profile r^{-alpha} e^{-r^2/4} P_{j,n}(r^2/2)."""
    r = np.asarray(r, dtype=float)
    _check_r(spec, r)
    coeffs = pjn_coefficients(spec.alpha_j, spec.n, spec.d)
    with np.errstate(divide="ignore"):
        out = r ** (-spec.alpha_j) * np.exp(-r * r / 4) * np.polynomial.polynomial.polyval(r * r / 2, coeffs)
    return float(out) if out.ndim == 0 else out


def vnj_evolved(spec: VnjSpec, t, r):
    """e^{-itH} V_{n,j} / ||V_{n,j}||, radial profile."""
    r = np.asarray(r, dtype=float)
    _check_r(spec, r)
    if not math.isfinite(spec.gamma_nj):
        raise ConfigError("gamma_nj is not resolved")
    t = float(t)
    s = 1.0 + t * t
    coeffs = pjn_coefficients(spec.alpha_j, spec.n, spec.d)
    with np.errstate(divide="ignore"):
        out = (
            s ** (-spec.d / 4 + spec.alpha_j / 2)
            * r ** (-spec.alpha_j)
            * np.exp(-r * r / (4 * s))
            * np.exp(1j * r * r * t / (4 * s))
            * np.exp(-1j * spec.gamma_nj * math.atan(t))
            * np.polynomial.polynomial.polyval(r * r / (2 * s), coeffs)
            / spec.norm
        )
    return complex(out) if out.ndim == 0 else out


def pde_residual(spec: VnjSpec, t: float, r, h: float = 1e-4):
    """|i psi_t - H psi| for the normalized closed form, central differences in t
    and exact r-derivatives."""
    r = np.asarray(r, dtype=float)
    dt = (vnj_evolved(spec, t + h, r) - vnj_evolved(spec, t - h, r)) / (2 * h)
    v0, v1, v2 = vnj_derivatives(spec.n, spec.alpha_j, spec.d, t, r)
    phase = np.exp(-1j * spec.gamma_nj * math.atan(t)) / spec.norm
    H = (-v2 - (spec.d - 1) / r * v1 + spec.mu / r**2 * v0) * phase
    return np.abs(1j * dt - H)
