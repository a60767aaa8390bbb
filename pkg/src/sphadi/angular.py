"""Angular operator L = (-i grad_S + A)^2 + a(omega) and its spectrum.

In d = 2 the potentials are trigonometric polynomials in theta and L is
discretized by a Fourier-Galerkin method in the basis e^{i z theta}/sqrt(2 pi).
For d >= 3 only A = 0 with constant a is representable; the spectrum is then
known in closed form, l(l+d-2) + a, with spherical-harmonic eigenfunctions.

Modes are labelled k = 0, 1, 2, ... by ascending eigenvalue.  Inside a
degenerate cluster the basis is rotated to diagonalize the Fourier index and
ordered by decreasing index, so e^{+i theta} precedes e^{-i theta}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import FormUnboundedError, ResolutionError, UnsupportedDimensionError

RESOLUTION_TOL = 1e-8
MAX_FOURIER = 1024


@dataclass(frozen=True)
class AngularPotential:
    """Angular fields A(theta), a(theta) of a scaling-critical Hamiltonian.

    For d = 2, ``A`` is the tangential component of the magnetic potential, so
    the transversal gauge holds by construction::

        A(theta) = A_cos[0] + sum_n A_cos[n] cos(n theta) + A_sin[n-1] sin(n theta)

    and likewise for ``a``.  For d >= 3 only ``a_cos=(c,)`` (a constant) is
    allowed and A must vanish.
    """

    d: int = 2
    A_cos: tuple[float, ...] = (0.0,)
    A_sin: tuple[float, ...] = ()
    a_cos: tuple[float, ...] = (0.0,)
    a_sin: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("A_cos", "A_sin", "a_cos", "a_sin"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not all(math.isfinite(v) for v in vals):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, vals)
        if self.d < 2:
            raise UnsupportedDimensionError(f"dimension must be >= 2, got {self.d}")
        if self.d >= 3:
            magnetic = any(self.A_cos) or any(self.A_sin)
            if magnetic or any(self.a_sin) or any(self.a_cos[1:]):
                raise UnsupportedDimensionError(
                    "for d >= 3 only A = 0 and a constant electric part are supported"
                )

    @classmethod
    def free(cls, d: int = 2) -> "AngularPotential":
        return cls(d=d)

    @classmethod
    def aharonov_bohm(cls, lam: float) -> "AngularPotential":
        return cls(d=2, A_cos=(lam,))

    @classmethod
    def inverse_square(cls, d: int, a: float) -> "AngularPotential":
        return cls(d=d, a_cos=(a,))

    @property
    def a_const(self) -> float:
        return self.a_cos[0] if self.a_cos else 0.0

    @property
    def bandwidth(self) -> int:
        """Highest Fourier frequency present in A or a."""
        return max(len(self.A_cos) - 1, len(self.A_sin), len(self.a_cos) - 1, len(self.a_sin), 0)

    def A_hat(self) -> np.ndarray:
        return _fourier(self.A_cos, self.A_sin, self.bandwidth)

    def a_hat(self) -> np.ndarray:
        return _fourier(self.a_cos, self.a_sin, self.bandwidth)

    def evaluate(self, theta):
        """(A(theta), a(theta)) on an array of angles (d = 2)."""
        theta = np.asarray(theta, dtype=float)
        return _trig(self.A_cos, self.A_sin, theta), _trig(self.a_cos, self.a_sin, theta)

    def A_primitive(self, theta):
        """int_0^theta A(s) ds (d = 2)."""
        theta = np.asarray(theta, dtype=float)
        out = (self.A_cos[0] if self.A_cos else 0.0) * theta
        for n, c in enumerate(self.A_cos[1:], start=1):
            out = out + c * np.sin(n * theta) / n
        for n, s in enumerate(self.A_sin, start=1):
            out = out + s * (1.0 - np.cos(n * theta)) / n
        return out

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "A_cos": list(self.A_cos),
            "A_sin": list(self.A_sin),
            "a_cos": list(self.a_cos),
            "a_sin": list(self.a_sin),
        }


def _trig(cos_c, sin_c, theta):
    out = np.zeros_like(theta)
    for n, c in enumerate(cos_c):
        out = out + c * np.cos(n * theta)
    for n, s in enumerate(sin_c, start=1):
        out = out + s * np.sin(n * theta)
    return out


def _fourier(cos_c, sin_c, m: int) -> np.ndarray:
    # complex coefficients f_q, q = -m..m, f_q = (1/2pi) int f e^{-iq theta}
    out = np.zeros(2 * m + 1, dtype=complex)
    if cos_c:
        out[m] += cos_c[0]
    for n in range(1, m + 1):
        c = cos_c[n] if n < len(cos_c) else 0.0
        s = sin_c[n - 1] if n - 1 < len(sin_c) else 0.0
        out[m + n] += 0.5 * (c - 1j * s)
        out[m - n] += 0.5 * (c + 1j * s)
    return out


@dataclass(frozen=True)
class AsymptoticFields:
    A_mean: float
    a_mean: float
    shift_index: int
    half_integer_flux: bool

    def __post_init__(self):
        if self.shift_index != math.floor(self.A_mean + 0.5):
            raise ValueError("shift_index must equal floor(A_mean + 1/2)")


def mean_fields(pot: AngularPotential) -> AsymptoticFields:
    """Circle means of A and a.  ``half_integer_flux`` flags A_mean in Z/2,
    where the large-|j| eigenvalue expansion does not apply."""
    if pot.d != 2:
        raise UnsupportedDimensionError("mean fields are defined for d = 2 only")
    A_mean = pot.A_cos[0] if pot.A_cos else 0.0
    a_mean = pot.a_cos[0] if pot.a_cos else 0.0
    return AsymptoticFields(
        A_mean=A_mean,
        a_mean=a_mean,
        shift_index=math.floor(A_mean + 0.5),
        half_integer_flux=float(2.0 * A_mean).is_integer(),
    )


def assemble_L(pot: AngularPotential, n_fourier: int) -> np.ndarray:
    """Galerkin matrix of L on span{e^{i z theta}/sqrt(2 pi) : |z| <= n_fourier}.

    Entry (m, n) is m n delta_mn + (m + n) A_{m-n} + (A^2)_{m-n} + a_{m-n},
    exact for trigonometric-polynomial potentials.
    """
    if pot.d != 2:
        raise UnsupportedDimensionError("the Galerkin discretization is implemented for d = 2")
    if n_fourier < pot.bandwidth:
        raise ResolutionError(
            f"n_fourier = {n_fourier} is below the potential bandwidth {pot.bandwidth}"
        )
    N = n_fourier
    bw = pot.bandwidth
    A = pot.A_hat()
    A2 = np.convolve(A, A)  # indices -2bw..2bw
    a = pot.a_hat()

    def band(coeffs, half):
        # Toeplitz matrix T[m, n] = coeffs[m - n]
        full = np.zeros(4 * N + 1, dtype=complex)
        lo = max(-half, -2 * N)
        hi = min(half, 2 * N)
        full[2 * N + lo : 2 * N + hi + 1] = coeffs[half + lo : half + hi + 1]
        col = full[2 * N : 4 * N + 1]  # q = 0..2N  -> T[m, 0]
        row = full[2 * N :: -1]  # q = 0..-2N  -> T[0, n]
        return scipy.linalg.toeplitz(col, row)

    z = np.arange(-N, N + 1, dtype=float)
    M = np.diag(z * z).astype(complex)
    TA = band(A, bw)
    M += (z[:, None] + z[None, :]) * TA
    M += band(A2, 2 * bw)
    M += band(a, bw)
    return 0.5 * (M + M.conj().T)


def alpha_beta(mu: float, d: int) -> tuple[float, float]:
    """alpha = (d-2)/2 - sqrt(((d-2)/2)^2 + mu), beta = sqrt(((d-2)/2)^2 + mu)."""
    h = 0.5 * (d - 2)
    disc = h * h + mu
    if disc < 0:
        raise FormUnboundedError(
            f"mu = {mu:g} is below the Hardy threshold -((d-2)/2)^2 = {-h * h:g}"
        )
    beta = math.sqrt(disc)
    return h - beta, beta


def essentially_selfadjoint(mu0: float, d: int) -> bool:
    """Criterion for A = 0: essentially self-adjoint iff mu0 >= 1 - ((d-2)/2)^2."""
    h = 0.5 * (d - 2)
    return mu0 >= 1.0 - h * h


def harmonic_multiplicity(ell: int, d: int) -> int:
    """Dimension of degree-ell spherical harmonics on S^{d-1}."""
    if d == 2:
        return 1 if ell == 0 else 2
    if ell == 0:
        return 1
    return math.comb(ell + d - 1, d - 1) - math.comb(ell + d - 3, d - 1)


def sphere_area(d: int) -> float:
    """Surface measure of S^{d-1}."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """First K_max+1 eigenpairs of L, ascending.

    ``kind == "fourier"`` (d = 2): ``eigvecs[k]`` holds the coefficients of
    phi_k on e^{i z theta}/sqrt(2 pi), z = -N..N, and ``labels[k]`` is the
    dominant index z.  ``kind == "harmonic"`` (d >= 3): ``labels[k] = (l, m)``
    and phi_k is the spherical harmonic of that degree and order.
    """

    d: int
    mus: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    kind: str
    labels: tuple
    eigvecs: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def K_max(self) -> int:
        return len(self.mus) - 1

    @property
    def n_fourier(self) -> int:
        if self.eigvecs is None:
            return 0
        return (self.eigvecs.shape[1] - 1) // 2

    def clusters(self, tol: float = 1e-9) -> list[list[int]]:
        """Index groups of numerically equal eigenvalues."""
        groups: list[list[int]] = []
        for k, mu in enumerate(self.mus):
            if groups and abs(mu - self.mus[groups[-1][0]]) <= tol * max(1.0, abs(mu)):
                groups[-1].append(k)
            else:
                groups.append([k])
        return groups

    def complete_clusters(self) -> list[list[int]]:
        """Clusters guaranteed to be complete (the last one may be cut by K_max)."""
        groups = self.clusters()
        if self.kind == "harmonic":
            full = []
            for g in groups:
                ell = self.labels[g[0]][0]
                if len(g) == harmonic_multiplicity(ell, self.d):
                    full.append(g)
            return full
        return groups[:-1] if len(groups) > 1 else groups

    def eigenfunctions(self, points, modes: Sequence[int] | None = None) -> np.ndarray:
        """phi_k at angular points, shape (n_modes, n_points).

        d = 2: ``points`` are angles theta.  d = 3: an (n, 2) array of
        (polar, azimuth) angles.
        """
        modes = range(self.K_max + 1) if modes is None else modes
        modes = list(modes)
        if self.kind == "fourier":
            theta = np.asarray(points, dtype=float).ravel()
            N = self.n_fourier
            z = np.arange(-N, N + 1)
            basis = np.exp(1j * np.outer(z, theta)) / math.sqrt(2.0 * math.pi)
            return self.eigvecs[modes] @ basis
        if self.d != 3:
            raise UnsupportedDimensionError(
                "pointwise eigenfunctions are available for d = 2 and d = 3"
            )
        from scipy.special import sph_harm_y

        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        out = np.empty((len(modes), pts.shape[0]), dtype=complex)
        for i, k in enumerate(modes):
            ell, m = self.labels[k]
            out[i] = sph_harm_y(ell, m, pts[:, 0], pts[:, 1])
        return out

    def to_dict(self) -> dict:
        out = {
            "d": self.d,
            "kind": self.kind,
            "mus": self.mus.tolist(),
            "alphas": self.alphas.tolist(),
            "betas": self.betas.tolist(),
            "labels": [list(x) if isinstance(x, tuple) else x for x in self.labels],
            "meta": dict(self.meta),
        }
        if self.eigvecs is not None:
            out["eigvecs_real"] = self.eigvecs.real.tolist()
            out["eigvecs_imag"] = self.eigvecs.imag.tolist()
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "SpectralData":
        eigvecs = None
        if "eigvecs_real" in doc:
            eigvecs = np.asarray(doc["eigvecs_real"]) + 1j * np.asarray(doc["eigvecs_imag"])
        labels = tuple(tuple(x) if isinstance(x, list) else x for x in doc["labels"])
        return cls(
            d=int(doc["d"]),
            mus=np.asarray(doc["mus"], dtype=float),
            alphas=np.asarray(doc["alphas"], dtype=float),
            betas=np.asarray(doc["betas"], dtype=float),
            kind=doc["kind"],
            labels=labels,
            eigvecs=eigvecs,
            meta=dict(doc.get("meta", {})),
        )


def _exponents(mus, d):
    ab = [alpha_beta(float(mu), d) for mu in mus]
    return np.array([x[0] for x in ab]), np.array([x[1] for x in ab])


def _fix_phase(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return v * (abs(v[i]) / v[i])


def _ordered_eigh(M: np.ndarray, z: np.ndarray, tol: float = 1e-9):
    w, V = np.linalg.eigh(M)
    order: list[int] = []
    vecs = V.copy()
    k = 0
    n = len(w)
    while k < n:
        j = k + 1
        while j < n and w[j] - w[k] <= tol * max(1.0, abs(w[k])):
            j += 1
        if j - k > 1:
            Vc = V[:, k:j]
            index_op = Vc.conj().T @ (z[:, None] * Vc)
            zz, U = np.linalg.eigh(0.5 * (index_op + index_op.conj().T))
            Vc = Vc @ U[:, ::-1]  # decreasing Fourier index
            vecs[:, k:j] = Vc
            w[k:j] = np.mean(w[k:j])
        k = j
    for i in range(n):
        vecs[:, i] = _fix_phase(vecs[:, i])
    return w, vecs


def _solve(pot: AngularPotential, N: int, count: int):
    M = assemble_L(pot, N)
    z = np.arange(-N, N + 1, dtype=float)
    w, V = _ordered_eigh(M, z)
    return w[:count], V[:, :count].T.copy()


def spectrum(
    pot: AngularPotential,
    K_max: int,
    n_fourier: int = 32,
    max_fourier: int = MAX_FOURIER,
) -> SpectralData:
    """Lowest K_max+1 eigenpairs of L in d = 2.

    ``n_fourier`` is doubled until the requested eigenvalues move by less than
    1e-8 between N and 2N; the 2N solution is returned.
    """
    if pot.d != 2:
        raise UnsupportedDimensionError(
            "numerical angular spectra are implemented for d = 2; use closed_spectrum"
        )
    count = K_max + 1
    N = max(n_fourier, pot.bandwidth, 1)
    while 2 * N + 1 < 2 * count:
        N *= 2
    w, V = _solve(pot, N, count)
    while True:
        if 2 * N > max_fourier:
            raise ResolutionError(
                f"eigenvalues not resolved to {RESOLUTION_TOL:g} with n_fourier <= "
                f"{max_fourier}; increase n_fourier / max_fourier or lower K_max"
            )
        w2, V2 = _solve(pot, 2 * N, count)
        if np.max(np.abs(w2 - w)) < RESOLUTION_TOL:
            break
        N, w, V = 2 * N, w2, V2
    N2 = 2 * N
    labels = tuple(int(np.argmax(np.abs(v))) - N2 for v in V2)
    alphas, betas = _exponents(w2, 2)
    return SpectralData(
        d=2,
        mus=w2,
        alphas=alphas,
        betas=betas,
        kind="fourier",
        labels=labels,
        eigvecs=V2,
        meta={"source": "galerkin", "potential": pot.to_dict()},
    )


def _unit_fourier(zs: Sequence[int]) -> np.ndarray:
    N = max(abs(z) for z in zs)
    V = np.zeros((len(zs), 2 * N + 1), dtype=complex)
    for i, z in enumerate(zs):
        V[i, z + N] = 1.0
    return V


def ab_spectrum(lam: float, K_max: int) -> SpectralData:
    """Closed-form Aharonov-Bohm spectrum {(lam + z)^2 : z in Z} = {(lam - z)^2}.

    The eigenfunction of (z + lam)^2 is e^{i z theta}/sqrt(2 pi).
    """
    span = K_max + 2 + int(abs(lam))
    zs = sorted(range(-span, span + 1), key=lambda z: ((z + lam) ** 2, -z))[: K_max + 1]
    mus = np.array([(z + lam) ** 2 for z in zs])
    alphas, betas = _exponents(mus, 2)
    return SpectralData(
        d=2,
        mus=mus,
        alphas=alphas,
        betas=betas,
        kind="fourier",
        labels=tuple(zs),
        eigvecs=_unit_fourier(zs),
        meta={"source": "aharonov_bohm", "lambda": lam},
    )


def closed_spectrum(d: int, a_const: float, K_max: int) -> SpectralData:
    """Spectrum l(l+d-2) + a of -Delta_S + a, each level repeated D_l times."""
    if d < 2:
        raise UnsupportedDimensionError(f"dimension must be >= 2, got {d}")
    mus: list[float] = []
    labels: list = []
    ell = 0
    while len(mus) < K_max + 1:
        mu = ell * (ell + d - 2) + a_const
        if d == 2:
            ms = [0] if ell == 0 else [ell, -ell]
            for z in ms:
                mus.append(mu)
                labels.append(z)
        elif d == 3:
            for m in range(ell, -ell - 1, -1):
                mus.append(mu)
                labels.append((ell, m))
        else:
            for m in range(harmonic_multiplicity(ell, d)):
                mus.append(mu)
                labels.append((ell, m))
        ell += 1
    mus_a = np.array(mus[: K_max + 1])
    labels = labels[: K_max + 1]
    alphas, betas = _exponents(mus_a, d)
    meta = {"source": "closed_form", "a": a_const}
    if d == 2:
        return SpectralData(2, mus_a, alphas, betas, "fourier", tuple(labels), _unit_fourier(labels), meta)
    return SpectralData(d, mus_a, alphas, betas, "harmonic", tuple(labels), None, meta)


def asymptotic_eigenvalue(j: int, fields: AsymptoticFields) -> float:
    """Large-|j| prediction a_mean + (j + A_mean - floor(A_mean + 1/2))^2."""
    x = j + fields.A_mean - fields.shift_index
    return fields.a_mean + x * x


@dataclass
class AsymptoticMatch:
    j: int
    k: int
    mu: float
    predicted: float

    @property
    def residual(self) -> float:
        return abs(self.mu - self.predicted)


def match_asymptotic(
    spec: SpectralData, fields: AsymptoticFields, j_values: Sequence[int]
) -> tuple[list[AsymptoticMatch], list[int]]:
    """Assign computed eigenvalues to asymptotic indices j by nearest prediction.

    Returns the matches (one per requested j whose prediction lies inside the
    computed range) and the mode indices below the largest matched eigenvalue
    that no j claimed.  No attempt is made to guess the re-indexing threshold.
    """
    claims: dict[int, AsymptoticMatch] = {}
    top = spec.mus[-1]
    for j in j_values:
        pred = asymptotic_eigenvalue(j, fields)
        if pred > top:
            continue
        k = int(np.argmin(np.abs(spec.mus - pred)))
        m = AsymptoticMatch(j=j, k=k, mu=float(spec.mus[k]), predicted=pred)
        if k not in claims or m.residual < claims[k].residual:
            claims[k] = m
    matches = sorted(claims.values(), key=lambda m: m.j)
    if not matches:
        return [], list(range(len(spec.mus)))
    kmax = max(m.k for m in matches)
    unmatched = [k for k in range(kmax + 1) if k not in claims]
    return matches, unmatched


def eigenfunction_profile(j: int, pot: AngularPotential, theta) -> np.ndarray:
    """Large-|j| eigenfunction shape
    (2 pi)^{-1/2} exp(-i(floor(A_mean+1/2) theta + int_0^theta A)) e^{i(A_mean + j) theta}."""
    fields = mean_fields(pot)
    theta = np.asarray(theta, dtype=float)
    phase = -(fields.shift_index * theta + pot.A_primitive(theta)) + (fields.A_mean + j) * theta
    return np.exp(1j * phase) / math.sqrt(2.0 * math.pi)


def profile_distance(phi: np.ndarray, profile: np.ndarray, theta_weights: np.ndarray) -> float:
    """min over unimodular c of ||phi - c profile||_{L2(S^1)} on a quadrature."""
    inner = np.sum(theta_weights * np.conj(profile) * phi)
    c = inner / abs(inner) if abs(inner) > 0 else 1.0
    diff = phi - c * profile
    return float(np.sqrt(np.sum(theta_weights * np.abs(diff) ** 2)))
