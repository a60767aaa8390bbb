"""Mode-wise Schrodinger propagator, kernel evaluation, norms and decay fits.

The flow is e^{-itH} with H = (-i grad + A/r)^2 + a/r^2 >= 0, so the free
case is e^{it Delta}.  In the eigenbasis phi_k of the angular operator the
flow acts on each radial profile by

    psi_k(t, r) = e^{i r^2/4t} / (i (2t)^{d/2}) i^{-beta_k}
                  int_0^inf j_{-alpha_k}(r rho / 2t) e^{i rho^2/4t} psi_k(0, rho) rho^{d-1} d rho

for t > 0.  Every radial operator is real, so negative times are obtained
by conjugating the data, propagating over |t| and conjugating back.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .angular import SpectralData, harmonic_multiplicity, sphere_area
from .errors import (
    ConvergenceError,
    DomainError,
    FeasibilityError,
    ResolutionError,
    TruncationError,
    UnsupportedDimensionError,
    WindowLossWarning,
)
from .radial import RadialGrid
from .specfun import DEFAULT_SERIES, T_MAX, SeriesParams, j_lower

__all__ = [
    "KernelSpec",
    "ModeField",
    "DecayReport",
    "KernelScanReport",
    "angular_quadrature",
    "unit_vector",
    "decompose",
    "reconstruct",
    "kernel_eval",
    "kernel_sup_scan",
    "propagate",
    "propagate_many",
    "evolution_grid",
    "effective_support",
    "lp_norm",
    "decay_fit",
    "decay_scan",
]


def _n_threads() -> int:
    try:
        return max(1, int(os.environ.get("SPHADI_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    n = min(_n_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class KernelSpec:
    """Truncation and quadrature controls for the kernel and the propagator.

    Parameters
    ----------
    K_max : int
        Highest mode index kept in the kernel sum (only complete eigenvalue
        clusters are used).
    series : SeriesParams
        Bessel series controls.
    tail_tol : float
        Bound on the extrapolated kernel tail.
    quad_tol : float
        Relative L2 change between successive quadrature doublings at which
        the propagator stops refining.
    sub_order : int
        Gauss-Legendre order on the oscillation-sized sub-panels.
    max_doublings : int
        Refinement budget before ``ConvergenceError``.
    support_tol : float
        Relative squared-norm tail of the datum that may be discarded when
        the radial integral is cut at the datum's effective support.
    mass_tol : float
        Relative L2 norm defect of an output field above which
        ``WindowLossWarning`` is issued.
    """

    K_max: int = 40
    series: SeriesParams = DEFAULT_SERIES
    tail_tol: float = 1e-10
    quad_tol: float = 1e-7
    sub_order: int = 8
    max_doublings: int = 4
    support_tol: float = 1e-14
    mass_tol: float = 1e-6

    def __post_init__(self):
        if self.K_max < 0:
            raise ValueError("K_max must be >= 0")
        for name in ("tail_tol", "quad_tol", "support_tol", "mass_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.sub_order < 2 or self.max_doublings < 1:
            raise ValueError("sub_order must be >= 2 and max_doublings >= 1")


# -- fields -----------------------------------------------------------------


@dataclass(eq=False)
class ModeField:
    """psi(r omega) = sum_k coeffs[k](r) phi_k(omega) on a radial grid."""

    grid: RadialGrid
    spec: SpectralData
    coeffs: np.ndarray
    t: float = 0.0
    parseval_defect: float | None = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[None, :]
        if c.shape[1] != self.grid.size:
            raise ValueError(f"coeffs have {c.shape[1]} nodes, grid has {self.grid.size}")
        if c.shape[0] > self.spec.K_max + 1:
            raise ValueError(
                f"{c.shape[0]} modes exceed the {self.spec.K_max + 1} available in spec"
            )
        if c.shape[0] < self.spec.K_max + 1:
            pad = np.zeros((self.spec.K_max + 1 - c.shape[0], c.shape[1]), dtype=complex)
            c = np.vstack([c, pad])
        self.coeffs = c

    @classmethod
    def single_mode(cls, grid: RadialGrid, spec: SpectralData, k: int, profile) -> "ModeField":
        coeffs = np.zeros((spec.K_max + 1, grid.size), dtype=complex)
        coeffs[k] = profile(grid.nodes) if callable(profile) else profile
        return cls(grid, spec, coeffs)

    def mode_norms(self) -> np.ndarray:
        return np.sqrt(self.grid.integrate(np.abs(self.coeffs) ** 2))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.mode_norms() ** 2)))

    def active_modes(self) -> list[int]:
        return [k for k, v in enumerate(self.mode_norms()) if v > 0]

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "grid": self.grid.to_dict(),
            "spec": self.spec.to_dict(),
            "coeffs_real": self.coeffs.real.tolist(),
            "coeffs_imag": self.coeffs.imag.tolist(),
            "parseval_defect": self.parseval_defect,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModeField":
        coeffs = np.asarray(doc["coeffs_real"]) + 1j * np.asarray(doc["coeffs_imag"])
        return cls(
            RadialGrid.from_dict(doc["grid"]),
            SpectralData.from_dict(doc["spec"]),
            coeffs,
            t=float(doc.get("t", 0.0)),
            parseval_defect=doc.get("parseval_defect"),
        )


def angular_quadrature(d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature on S^{d-1}.

    d = 2: ``n`` equispaced angles (trapezoid rule).  d = 3: ``n`` Gauss-Legendre
    nodes in cos(polar) times ``2n`` azimuths; points are (polar, azimuth) pairs.
    """
    if d == 2:
        theta = 2.0 * np.pi * np.arange(n) / n
        return theta, np.full(n, 2.0 * np.pi / n)
    if d == 3:
        x, w = np.polynomial.legendre.leggauss(n)
        phi = np.pi * np.arange(2 * n) / n
        polar = np.repeat(np.arccos(x), 2 * n)
        az = np.tile(phi, n)
        weights = np.repeat(w, 2 * n) * (np.pi / n)
        return np.column_stack([polar, az]), weights
    raise UnsupportedDimensionError("angular quadrature is available for d = 2 and d = 3")


def unit_vector(polar: float, azimuth: float) -> np.ndarray:
    return np.array(
        [math.sin(polar) * math.cos(azimuth), math.sin(polar) * math.sin(azimuth), math.cos(polar)]
    )


def _gram_defect(spec: SpectralData, points, weights) -> float:
    Phi = spec.eigenfunctions(points)
    G = (Phi * weights) @ Phi.conj().T
    return float(np.max(np.abs(G - np.eye(G.shape[0]))))


def decompose(
    samples: np.ndarray,
    spec: SpectralData,
    grid: RadialGrid,
    points=None,
    weights=None,
    gram_tol: float = 1e-10,
) -> ModeField:
    """Project samples psi0(r_i, omega_q) (shape ``(n_r, n_points)``) on the
    eigenfunctions phi_k.

    Without ``points`` the quadrature from :func:`angular_quadrature` matching
    the sample count is assumed.  The fraction of the discrete L2 mass not
    captured by the retained modes is stored as ``parseval_defect``.
    """
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] != grid.size:
        raise ValueError("samples must have shape (grid.size, n_points)")
    n_pts = samples.shape[1]
    if points is None:
        if spec.d == 2:
            points, weights = angular_quadrature(2, n_pts)
        elif spec.d == 3:
            n = int(round(math.sqrt(n_pts / 2)))
            if 2 * n * n != n_pts:
                raise ValueError("d = 3 samples must come from angular_quadrature(3, n)")
            points, weights = angular_quadrature(3, n)
        else:
            raise UnsupportedDimensionError("decompose supports d = 2 and d = 3")
    weights = np.asarray(weights, dtype=float)
    if spec.kind == "fourier":
        need = 4 * max(spec.n_fourier, 1)
        if n_pts < need:
            raise ResolutionError(
                f"{n_pts} angular points; at least 4 * n_fourier = {need} are needed"
            )
    gd = _gram_defect(spec, points, weights)
    if gd > gram_tol:
        raise ResolutionError(
            f"angular quadrature is not exact on the retained modes (Gram defect {gd:.2e})"
        )
    Phi = spec.eigenfunctions(points)
    coeffs = (samples * weights) @ Phi.conj().T
    total = float(np.sum(grid.weights * ((np.abs(samples) ** 2) @ weights)))
    kept = float(np.sum(grid.weights * np.sum(np.abs(coeffs) ** 2, axis=1)))
    defect = (total - kept) / total if total > 0 else 0.0
    return ModeField(grid, spec, coeffs.T, parseval_defect=defect)


def reconstruct(field: ModeField, points) -> np.ndarray:
    """Samples sum_k psi_k(r_i) phi_k(omega_q), shape ``(n_r, n_points)``."""
    modes = field.active_modes()
    if not modes:
        n = np.asarray(points).reshape(-1, 2 if field.spec.d == 3 else 1).shape[0]
        return np.zeros((field.grid.size, n), dtype=complex)
    Phi = field.spec.eigenfunctions(points, modes)
    return field.coeffs[modes].T @ Phi


# -- kernel -----------------------------------------------------------------


def _gegenbauer(ell: int, lam: float, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if ell == 0:
        return np.ones_like(x)
    if lam == 0:
        # d = 2 limit, normalized: C_l^0 / C_l^0(1) -> T_l
        return np.cos(ell * np.arccos(np.clip(x, -1, 1)))
    c0, c1 = np.ones_like(x), 2 * lam * x
    for n in range(2, ell + 1):
        c0, c1 = c1, (2 * x * (n + lam - 1) * c1 - (n + 2 * lam - 2) * c0) / n
    return c1


def _kernel_clusters(spec: SpectralData, K_max: int) -> list[list[int]]:
    limit = min(K_max, spec.K_max) + 1
    out = []
    for g in spec.complete_clusters():
        if g[-1] >= limit:
            break
        out.append(g)
    return out


def _angular_factors(spec: SpectralData, clusters, x_ang, y_ang) -> np.ndarray:
    """sum over each cluster of phi_k(x) conj(phi_k(y)), shape (n_clusters, n_pairs)."""
    if spec.kind == "fourier":
        tx = np.atleast_1d(np.asarray(x_ang, dtype=float))
        ty = np.atleast_1d(np.asarray(y_ang, dtype=float))
        modes = [k for g in clusters for k in g]
        Px = spec.eigenfunctions(tx, modes)
        Py = spec.eigenfunctions(ty, modes)
        prod = Px * Py.conj()
        out, i = [], 0
        for g in clusters:
            out.append(prod[i : i + len(g)].sum(axis=0))
            i += len(g)
        return np.array(out)
    d = spec.d
    xv = np.atleast_2d(np.asarray(x_ang, dtype=float))
    yv = np.atleast_2d(np.asarray(y_ang, dtype=float))
    if xv.shape[1] != d or yv.shape[1] != d:
        raise ValueError(f"angular points for d = {d} must be unit vectors of length {d}")
    cosg = np.clip(np.sum(xv * yv, axis=1), -1.0, 1.0)
    lam = 0.5 * (d - 2)
    area = sphere_area(d)
    out = []
    for g in clusters:
        ell = spec.labels[g[0]][0]
        mult = harmonic_multiplicity(ell, d)
        out.append(mult / area * _gegenbauer(ell, lam, cosg) / _gegenbauer(ell, lam, 1.0))
    return np.array(out, dtype=complex)


def _kernel_sum(spec, kspec, prods, factors, clusters):
    """K at products |x||y| (n_s,) and angular factors (n_c, n_pairs); returns
    values (n_s, n_pairs) and the tail estimate (n_s,)."""
    if len(clusters) < 3:
        raise TruncationError("at least three complete eigenvalue clusters are required")
    prods = np.asarray(prods, dtype=float)
    d = spec.d
    area = sphere_area(d)
    K = np.zeros((prods.size, factors.shape[1]), dtype=complex)
    mags = []
    for c, g in enumerate(clusters):
        k = g[0]
        jv = np.asarray(j_lower(-spec.alphas[k], prods, d, kspec.series))
        K += (1j ** (-spec.betas[k])) * jv[:, None] * factors[c][None, :]
        mags.append(np.abs(jv) * len(g) / area)
    m1, m2, m3 = mags[-3], mags[-2], mags[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.fmax(np.where(m1 > 0, m2 / m1, 0.0), np.where(m2 > 0, m3 / m2, 0.0))
        tail = np.where(m3 == 0, 0.0, np.where(q < 1, m3 * q / (1 - q), np.inf))
    return K, tail


def kernel_eval(x_mag, y_mag, x_ang, y_ang, spec: SpectralData, kspec: KernelSpec) -> complex:
    """Truncated kernel sum_k i^{-beta_k} j_{-alpha_k}(|x||y|) phi_k(x^) conj(phi_k(y^)).

    Angular points are angles for d = 2 and unit vectors for d >= 3.  Raises
    ``TruncationError`` when the extrapolated tail exceeds ``kspec.tail_tol``.
    """
    s = float(x_mag) * float(y_mag)
    if s > T_MAX:
        raise DomainError(f"|x||y| = {s:g} exceeds the supported range {T_MAX:g}")
    clusters = _kernel_clusters(spec, kspec.K_max)
    factors = _angular_factors(spec, clusters, [x_ang], [y_ang])
    K, tail = _kernel_sum(spec, kspec, np.array([s]), factors, clusters)
    if tail[0] > kspec.tail_tol:
        raise TruncationError(
            f"kernel tail estimate {tail[0]:.2e} exceeds tail_tol {kspec.tail_tol:.1e} "
            f"at |x||y| = {s:g}; raise K_max"
        )
    return complex(K[0, 0])


@dataclass
class KernelScanReport:
    """Result of :func:`kernel_sup_scan`.

    ``sup_abs[i]`` is the sup of |K| over the angular pairs at |x| = |y| = s[i];
    ``diag_abs[i]`` is |K(s e, s e)|.  ``blowup_exponent`` is the fitted
    small-s slope of ``diag_abs`` when mu_0 < 0 and ``None`` otherwise.
    """

    s: np.ndarray
    sup_abs: np.ndarray
    diag_abs: np.ndarray
    sup_val: float
    small_s_slope: float
    blowup_exponent: float | None
    mu0: float
    alpha0: float
    max_tail: float

    def to_dict(self) -> dict:
        return {
            "s": self.s.tolist(),
            "sup_abs": self.sup_abs.tolist(),
            "diag_abs": self.diag_abs.tolist(),
            "sup_val": self.sup_val,
            "small_s_slope": self.small_s_slope,
            "blowup_exponent": self.blowup_exponent,
            "mu0": self.mu0,
            "alpha0": self.alpha0,
            "max_tail": self.max_tail,
        }


def default_scan_grid() -> np.ndarray:
    return np.concatenate([2.0 ** -np.arange(20, 0, -1), np.linspace(0.6, math.sqrt(5.0), 8)])


def default_angular_pairs(d: int, n: int = 16):
    if d == 2:
        return np.zeros(n), np.linspace(0.0, np.pi, n)
    g = np.linspace(0.0, np.pi, n)
    x = np.zeros((n, d))
    x[:, 0] = 1.0
    y = np.zeros((n, d))
    y[:, 0], y[:, 1] = np.cos(g), np.sin(g)
    return x, y


def kernel_sup_scan(
    spec: SpectralData,
    kspec: KernelSpec,
    s_grid=None,
    angular_grid=None,
    n_fit: int = 8,
) -> KernelScanReport:
    """Scan |K(s x^, s y^)| over radii ``s_grid`` and angular pairs.

    ``angular_grid`` is a pair ``(x_angs, y_angs)``; its first pair should be
    diagonal (x^ = y^), as in the default.  The small-s slope is a
    least-squares fit of log diag_abs against log s over the ``n_fit``
    smallest radii.  Modes whose tail cannot be certified raise
    ``TruncationError`` only through an infinite ``max_tail``; the report is
    always produced.
    """
    s = np.sort(np.asarray(default_scan_grid() if s_grid is None else s_grid, dtype=float))
    xa, ya = default_angular_pairs(spec.d) if angular_grid is None else angular_grid
    clusters = _kernel_clusters(spec, kspec.K_max)
    factors = _angular_factors(spec, clusters, xa, ya)
    diag_f = _angular_factors(spec, clusters, np.asarray(xa)[:1], np.asarray(xa)[:1])
    K, tail = _kernel_sum(spec, kspec, s * s, np.hstack([diag_f, factors]), clusters)
    diag = np.abs(K[:, 0])
    sup = np.abs(K[:, 1:]).max(axis=1)
    sup = np.maximum(sup, diag)
    m = min(n_fit, s.size)
    slope = float(np.polyfit(np.log(s[:m]), np.log(diag[:m]), 1)[0])
    mu0 = float(spec.mus[0])
    return KernelScanReport(
        s=s,
        sup_abs=sup,
        diag_abs=diag,
        sup_val=float(sup.max()),
        small_s_slope=slope,
        blowup_exponent=slope if mu0 < 0 else None,
        mu0=mu0,
        alpha0=float(spec.alphas[0]),
        max_tail=float(tail.max()),
    )


# -- propagation ------------------------------------------------------------


def effective_support(field: ModeField, support_tol: float = 1e-14) -> int:
    """Number of leading panels outside of which every mode carries at most
    ``support_tol`` of the total squared norm."""
    g = field.grid
    dens = np.abs(field.coeffs) ** 2 * g.weights
    per_panel = g.panel_values(dens).sum(axis=-1).sum(axis=0)
    total = per_panel.sum()
    if total == 0:
        return 1
    tail = np.cumsum(per_panel[::-1])[::-1]  # tail[p] = mass on panels p..end
    keep = int(np.sum(tail > support_tol * total))
    return max(keep, 1)


def evolution_grid(
    field: ModeField,
    t: float,
    kspec: KernelSpec = KernelSpec(),
    n_panels: int = 24,
    order: int = 16,
    safety: float = 0.999,
    coverage_tol: float = 1e-6,
) -> RadialGrid:
    """Largest output grid on which the time-``t`` transform of ``field`` stays
    inside the Bessel range: R = safety * 2|t| T_MAX / rho_eff.

    Raises ``FeasibilityError`` when R would not even cover the radius that
    holds all but ``coverage_tol`` of the datum's mass.
    """
    if t == 0:
        return field.grid
    rho = field.grid.breaks[effective_support(field, kspec.support_tol)]
    R = safety * 2.0 * abs(t) * T_MAX / rho
    R_cov = field.grid.breaks[effective_support(field, coverage_tol)]
    if R < R_cov:
        raise FeasibilityError(
            f"|t| = {abs(t):g} is too small: the Bessel range limits the output grid to "
            f"r <= {R:.4g} but the datum extends to {R_cov:.4g}; the smallest "
            f"supported |t| is {_min_time(R_cov, rho, safety):.4g}"
        )
    return RadialGrid.graded(R, field.grid.d, panel=R / n_panels, order=order)


def _min_time(R_out: float, rho: float, safety: float = 1.0) -> float:
    return R_out * rho / (2.0 * T_MAX * safety)


def _pieces(grid: RadialGrid, P: int, omega_extra: float, tmin: float) -> np.ndarray:
    # panel p split so each sub-panel spans at most a quarter period of the
    # phase e^{i rho^2/4t} J(r rho/2t): local frequency rho/2t + r_max/2t
    b = grid.breaks[: P + 1]
    omega = b[1:] / (2.0 * tmin) + omega_extra
    h = 0.5 * np.pi / omega
    return np.maximum(1, np.ceil(np.diff(b) / h - 1e-12)).astype(int)


class _Transform:
    """Mode transforms of one field for several |t| on a shared similarity
    grid xi = r / 2|t|, reusing the Bessel matrices across times."""

    def __init__(self, field: ModeField, xi: np.ndarray, tmin: float, kspec: KernelSpec):
        self.field = field
        self.kspec = kspec
        self.xi = xi
        g = field.grid
        self.P = effective_support(field, kspec.support_tol)
        rho_end = g.breaks[self.P]
        s_max = float(xi.max()) * rho_end
        if s_max > T_MAX:
            raise FeasibilityError(
                f"Bessel argument r rho / 2|t| reaches {s_max:.4g} > {T_MAX:g}; "
                f"the smallest supported |t| for these grids is "
                f"{float(xi.max()) * 2 * tmin * rho_end / (2 * T_MAX):.4g}"
            )
        self.base = _pieces(g, self.P, float(xi.max()), tmin)
        self.sub = g.truncated(self.P)
        self.modes = field.active_modes()
        self._cache: dict = {}
        self._levels: dict = {}

    def level(self, lev: int):
        if lev not in self._levels:
            self._levels[lev] = self.sub.refined(self.base * 2**lev, self.kspec.sub_order)
        return self._levels[lev]

    def bessel(self, alpha: float, lev: int) -> np.ndarray:
        key = (float(alpha), lev)
        if key not in self._cache:
            nodes = self.level(lev)[0]
            s = np.outer(self.xi, nodes)
            self._cache[key] = np.asarray(
                j_lower(-alpha, s, self.field.grid.d, self.kspec.series)
            )
        return self._cache[key]

    def run(self, taus: Sequence[float], lev: int) -> np.ndarray:
        """Output coefficients, shape (n_t, n_modes, n_xi), for signed times."""
        f = self.field
        d = f.grid.d
        nodes, dr, apply = self.level(lev)
        n = self.P * f.grid.order
        vals = apply(f.coeffs[self.modes][:, :n])
        jac = dr * nodes ** (d - 1)

        def one(i):
            k = self.modes[i]
            J = self.bessel(f.spec.alphas[k], lev)
            res = []
            for tau in taus:
                T = abs(tau)
                v = vals[i] if tau > 0 else vals[i].conj()
                g = v * jac * np.exp(1j * nodes**2 / (4 * T))
                res.append(J @ g)
            return np.array(res)

        # Bessel matrices are filled serially so the cache is deterministic
        for k in self.modes:
            self.bessel(f.spec.alphas[k], lev)
        per_mode = _map(one, range(len(self.modes)))
        out = np.empty((len(taus), len(self.modes), self.xi.size), dtype=complex)
        for i, k in enumerate(self.modes):
            beta = f.spec.betas[k]
            for it, tau in enumerate(taus):
                T = abs(tau)
                r = 2 * T * self.xi
                pref = np.exp(1j * r**2 / (4 * T)) / (1j * (2 * T) ** (d / 2)) * 1j ** (-beta)
                val = pref * per_mode[i][it]
                out[it, i] = val if tau > 0 else val.conj()
        return out


def _converged_transform(tr: _Transform, taus, out_weights) -> np.ndarray:
    kspec = tr.kspec
    prev = tr.run(taus, 0)
    for lev in range(1, kspec.max_doublings + 1):
        cur = tr.run(taus, lev)
        worst = 0.0
        for it in range(len(taus)):
            w = out_weights[it]
            num = np.sum(w * np.abs(cur[it] - prev[it]) ** 2)
            den = np.sum(w * np.abs(cur[it]) ** 2)
            worst = max(worst, math.sqrt(num / den) if den > 0 else 0.0)
        if worst < kspec.quad_tol:
            return cur
        prev = cur
    raise ConvergenceError(
        f"radial quadrature did not reach {kspec.quad_tol:.1e} after "
        f"{kspec.max_doublings} doublings (last change {worst:.2e})"
    )


def propagate(
    field: ModeField,
    t: float,
    kspec: KernelSpec = KernelSpec(),
    out_grid: RadialGrid | None = None,
) -> ModeField:
    """e^{-itH} applied mode by mode.

    Parameters
    ----------
    field : ModeField
        Datum at time 0.
    t : float
        Time; ``t = 0`` returns a copy of the datum.
    kspec : KernelSpec
        Quadrature controls.
    out_grid : RadialGrid, optional
        Output radial grid, by default the input grid.  The transform needs
        r rho / 2|t| <= T_MAX; :func:`evolution_grid` builds the largest grid
        that complies.

    Raises
    ------
    FeasibilityError
        If the grids violate the Bessel range, with the smallest feasible |t|.
    ConvergenceError
        If quadrature doubling does not settle within ``kspec.quad_tol``.
    """
    if t == 0:
        return ModeField(field.grid, field.spec, field.coeffs.copy(), 0.0, field.parseval_defect)
    out = propagate_many(field, [t], kspec, out_grid=out_grid)
    return out[0]


def propagate_many(
    field: ModeField,
    times: Sequence[float],
    kspec: KernelSpec = KernelSpec(),
    out_grid: RadialGrid | None = None,
    xi_grid: RadialGrid | None = None,
) -> list[ModeField]:
    """Propagate to several nonzero times.

    With ``xi_grid`` the output at time t lives on the scaled grid
    r = 2|t| xi, which lets all times share one set of Bessel matrices.
    Otherwise every time uses ``out_grid`` (default: the input grid).
    """
    times = [float(t) for t in times]
    if any(t == 0 for t in times):
        raise DomainError("propagate_many needs nonzero times; use propagate for t = 0")
    spec, d = field.spec, field.grid.d
    results: list[ModeField | None] = [None] * len(times)
    if xi_grid is not None:
        tmin = min(abs(t) for t in times)
        tr = _Transform(field, xi_grid.nodes, tmin, kspec)
        grids = [
            RadialGrid(2 * abs(t) * xi_grid.breaks, xi_grid.order, d) for t in times
        ]
        weights = [g.weights for g in grids]
        vals = _converged_transform(tr, times, weights)
        for it, t in enumerate(times):
            c = np.zeros((spec.K_max + 1, xi_grid.size), dtype=complex)
            c[tr.modes] = vals[it]
            results[it] = ModeField(grids[it], spec, c, t=t)
        _check_mass(field, results, kspec)
        return results
    g_out = field.grid if out_grid is None else out_grid
    for it, t in enumerate(times):
        tr = _Transform(field, g_out.nodes / (2 * abs(t)), abs(t), kspec)
        vals = _converged_transform(tr, [t], [g_out.weights])
        c = np.zeros((spec.K_max + 1, g_out.size), dtype=complex)
        c[tr.modes] = vals[0]
        results[it] = ModeField(g_out, spec, c, t=t)
    _check_mass(field, results, kspec)
    return results


def _check_mass(field: ModeField, results, kspec: KernelSpec) -> None:
    n0 = field.norm()
    if not n0 > 0:
        return
    worst = max(results, key=lambda f: abs(f.norm() / n0 - 1))
    loss = abs(worst.norm() / n0 - 1)
    if loss > kspec.mass_tol:
        warnings.warn(
            f"relative L2 norm defect {loss:.2e} at t = {worst.t:g} exceeds mass_tol "
            f"{kspec.mass_tol:.1e}: spectral mass beyond xi = r/2|t| = "
            f"{worst.grid.R_max / (2 * abs(worst.t)):.4g} is lost (is the datum in the domain of H?)",
            WindowLossWarning,
            stacklevel=3,
        )


# -- norms and decay --------------------------------------------------------


def _default_angles(field: ModeField):
    spec = field.spec
    if spec.kind == "fourier":
        zmax = max((abs(z) for z in spec.labels), default=0)
        n = max(64, 4 * max(spec.n_fourier, zmax, 1))
        return angular_quadrature(2, n)
    if spec.d == 3:
        ell = max((lab[0] for lab in spec.labels), default=0)
        return angular_quadrature(3, max(16, 2 * ell + 2))
    raise UnsupportedDimensionError("norms need pointwise eigenfunctions (d = 2 or 3)")


def lp_norm(
    field: ModeField,
    p: float,
    weight_exp: float = 0.0,
    radial_power: float = 0.0,
    angles=None,
) -> float:
    """Weighted L^p norm of a mode field.

    The integrand is (1 + |x|^{-alpha})^{2-p} |x|^{p c} |psi|^p with
    alpha = ``weight_exp`` and c = ``radial_power``; ``weight_exp = 0`` drops
    the first factor altogether (unweighted norm by convention).  For
    ``p = inf`` the sup over grid nodes of (1 + |x|^{-alpha})^{-1} |x|^c |psi|
    is returned.  ``angles`` is an optional ``(points, weights)`` quadrature.
    """
    if not (p >= 1):
        raise DomainError(f"p must be >= 1, got {p}")
    points, aw = _default_angles(field) if angles is None else angles
    vals = np.abs(reconstruct(field, points))
    r = field.grid.nodes
    if math.isinf(p):
        fac = r**radial_power
        if weight_exp != 0:
            fac = fac / (1.0 + r ** (-weight_exp))
        return float(np.max(vals * fac[:, None]))
    fac = r ** (p * radial_power)
    if weight_exp != 0:
        fac = fac * (1.0 + r ** (-weight_exp)) ** (2.0 - p)
    dens = (vals**p) @ aw
    return float(np.sum(field.grid.weights * fac * dens) ** (1.0 / p))


@dataclass
class DecayReport:
    times: np.ndarray
    norms: np.ndarray
    exponent: float
    residual: float
    intercept: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.norms = np.asarray(self.norms, dtype=float)

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "norms": self.norms.tolist(),
            "exponent": self.exponent,
            "residual": self.residual,
            "intercept": self.intercept,
        }

    def to_csv(self, p: float, weight_exp: float) -> str:
        lines = ["t,norm,p,weight_exp"]
        pstr = "inf" if math.isinf(p) else f"{p:.17g}"
        for t, n in zip(self.times, self.norms):
            lines.append(f"{t:.17g},{n:.17g},{pstr},{weight_exp:.17g}")
        return "\n".join(lines) + "\n"


def _fit_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.size < 5:
        raise DomainError(f"decay fit needs >= 5 samples, got {t.size}")
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise DomainError("times must be positive and strictly ascending")
    if t[-1] / t[0] < 10:
        raise DomainError("times must span at least one decade")
    return t


def decay_fit(times, norms) -> DecayReport:
    """Least-squares slope of log(norm) against log(t)."""
    t = _fit_times(times)
    n = np.asarray(norms, dtype=float)
    if t.size != n.size:
        raise ValueError("times and norms differ in length")
    if np.any(~(n > 0)) or np.any(~np.isfinite(n)):
        raise DomainError("norms must be positive and finite for a log-log fit")
    x, y = np.log(t), np.log(n)
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + icpt))))
    return DecayReport(t, n, float(slope), resid, float(icpt))


def decay_scan(
    field: ModeField,
    times: Sequence[float],
    p: float = math.inf,
    weight_exp: float = 0.0,
    radial_power: float = 0.0,
    kspec: KernelSpec = KernelSpec(),
    n_panels: int = 24,
    order: int = 16,
) -> DecayReport:
    """Propagate ``field`` to each time on similarity grids r = 2t xi and fit
    the decay of the requested norm."""
    # validate before the expensive transforms
    times = _fit_times(np.sort(np.asarray(times, dtype=float)))
    P = effective_support(field, kspec.support_tol)
    xi_max = 0.999 * T_MAX / field.grid.breaks[P]
    R_cov = field.grid.breaks[effective_support(field, 1e-6)]
    if 2 * times[0] * xi_max < R_cov:
        raise FeasibilityError(
            f"t = {times[0]:g} is too small for the Bessel range; the smallest "
            f"supported time is {_min_time(R_cov, field.grid.breaks[P], 0.999):.4g}"
        )
    xi = RadialGrid.graded(xi_max, field.grid.d, panel=xi_max / n_panels, order=order)
    fields = propagate_many(field, times, kspec, xi_grid=xi)
    norms = [lp_norm(f, p, weight_exp, radial_power) for f in fields]
    return decay_fit(times, norms)
