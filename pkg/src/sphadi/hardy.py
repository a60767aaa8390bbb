"""Sharp Hardy constants and their numerical verification.

In the eigenbasis of the angular operator the quadratic form splits into
radial pieces, and with psi_k = r^{-(d-2)/2} g(log r) each piece satisfies

    int (|psi_k'|^2 + mu_k |psi_k|^2 / r^2) r^{d-1} dr
        = ((d-2)^2/4 + mu_k) int |psi_k|^2 r^{d-3} dr + int |g'(u)|^2 du.

The constant is therefore (d-2)^2/4 + min mu_k, approached by profiles whose
log-profile g is almost flat over a long range of scales.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .angular import AngularPotential, SpectralData
from .errors import DomainError, FormUnboundedError
from .propagator import ModeField
from .radial import RadialGrid

__all__ = [
    "HardyReport",
    "sharp_constant",
    "rayleigh_quotient",
    "hardy_grid",
    "near_optimizer",
    "random_trial",
    "verify_hardy",
]

R_MIN = 1e-6
R_MAX = 1e18


@dataclass
class HardyReport:
    constant: float
    min_quotient: float
    near_optimizer_gap: float
    n_trials: int
    near_optimizer_quotient: float = math.nan
    min_mode: int = 0
    d: int = 2

    @property
    def holds(self) -> bool:
        return self.min_quotient >= self.constant - 1e-3

    def to_dict(self) -> dict:
        out = asdict(self)
        out["holds"] = self.holds
        return out


def sharp_constant(mu_low: float, d: int) -> float:
    """(d-2)^2/4 + mu_low, the best constant in the Hardy inequality."""
    floor = -0.25 * (d - 2) ** 2
    if mu_low < floor - 1e-12:
        raise FormUnboundedError(
            f"mu_low = {mu_low:g} is below the Hardy threshold {floor:g}; "
            "the quadratic form is unbounded below"
        )
    return 0.25 * (d - 2) ** 2 + mu_low


def rayleigh_quotient(psi: ModeField, pot: AngularPotential | None, spec: SpectralData) -> float:
    """q[psi] / int |psi|^2 / |x|^2, summed mode by mode.

    Radial derivatives are panel-wise spectral derivatives on ``psi.grid``;
    profiles are expected to vanish at both ends of the grid.
    """
    if pot is not None and pot.d != spec.d:
        raise DomainError(f"potential is {pot.d}-dimensional, spectrum {spec.d}-dimensional")
    g = psi.grid
    d = g.d
    c = psi.coeffs
    n = c.shape[0]
    dc = g.derivative(c)
    mus = spec.mus[:n]
    num = g.integrate(np.abs(dc) ** 2).sum() + np.sum(mus * g.integrate(np.abs(c) ** 2, power=d - 3))
    den = g.integrate(np.abs(c) ** 2, power=d - 3).sum()
    if not den > 0:
        raise DomainError("zero denominator: the trial field vanishes")
    return float(num / den)


def hardy_grid(d: int, r_min: float = R_MIN, R: float = R_MAX, ratio: float = 1.5) -> RadialGrid:
    return RadialGrid.geometric(r_min, R, d, ratio=ratio)


def near_optimizer(grid: RadialGrid, spec: SpectralData, k: int, eps: float = 0.01) -> ModeField:
    """r^{1-d/2+eps} times a half-sine in log r spanning the whole grid, in mode k."""
    u0, u1 = math.log(grid.breaks[0]), math.log(grid.breaks[-1])
    u = np.log(grid.nodes)
    # eps shifts the power; the exponent is centered so values stay O(1)
    prof = np.exp((1 - grid.d / 2) * u + eps * (u - 0.5 * (u0 + u1)))
    prof = prof * np.sin(np.pi * (u - u0) / (u1 - u0))
    return ModeField.single_mode(grid, spec, k, prof)


def random_trial(
    grid: RadialGrid,
    spec: SpectralData,
    rng: np.random.Generator,
    min_mode: int = 0,
    max_modes: int = 3,
    degree: int = 4,
) -> ModeField:
    """Random smooth compactly supported field.

    Each selected mode gets the profile p(v) (1 - v^2)^3 where v is log r
    mapped affinely onto [-1, 1] over a random run of whole panels and p is a
    random complex polynomial.
    """
    K = spec.K_max
    if min_mode > K:
        raise DomainError(f"min_mode {min_mode} exceeds K_max {K}")
    pool = np.arange(min_mode, K + 1)
    m = int(rng.integers(1, min(max_modes, pool.size) + 1))
    modes = rng.choice(pool, size=m, replace=False)
    u = np.log(grid.nodes)
    ub = np.log(grid.breaks)
    P = grid.n_panels
    coeffs = np.zeros((K + 1, grid.size), dtype=complex)
    for k in modes:
        a = int(rng.integers(0, P - 1))
        b = int(rng.integers(a + 1, min(P, a + 40) + 1))
        lo, hi = ub[a], ub[b]
        v = (2 * u - lo - hi) / (hi - lo)
        inside = np.abs(v) < 1
        pc = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
        prof = np.zeros(grid.size, dtype=complex)
        vv = v[inside]
        prof[inside] = np.polynomial.polynomial.polyval(vv, pc) * (1 - vv**2) ** 3
        # scale to the natural size r^{-(d-2)/2} so every scale carries weight
        coeffs[k] = prof * grid.nodes ** (1 - grid.d / 2)
    return ModeField(grid, spec, coeffs)


def verify_hardy(
    pot: AngularPotential | None,
    spec: SpectralData,
    n_trials: int,
    seed: int,
    min_mode: int = 0,
    eps: float = 0.01,
    grid: RadialGrid | None = None,
) -> HardyReport:
    """Evaluate Rayleigh quotients of random trial fields and the near-optimizer.

    Parameters
    ----------
    pot : AngularPotential or None
        Used only for a consistency check against ``spec``.
    spec : SpectralData
        Angular spectrum; ``spec.mus[min_mode]`` fixes the claimed constant.
    n_trials : int
        Number of random fields, restricted to modes ``k >= min_mode``.
    seed : int
        Seed of the pseudorandom generator.
    min_mode : int
        Lowest admitted mode index.
    eps : float
        Power offset of the near-optimizer r^{1-d/2+eps}.
    grid : RadialGrid, optional
        Radial grid, by default ``hardy_grid(spec.d)``.

    Returns
    -------
    HardyReport
        ``near_optimizer_gap`` is (q - C)/C for C > 0 and q - C otherwise.
    """
    if n_trials < 0:
        raise ValueError("n_trials must be >= 0")
    d = spec.d
    C = sharp_constant(float(spec.mus[min_mode]), d)
    grid = hardy_grid(d) if grid is None else grid
    rng = np.random.default_rng(seed)
    qs = [rayleigh_quotient(random_trial(grid, spec, rng, min_mode), pot, spec) for _ in range(n_trials)]
    q_near = rayleigh_quotient(near_optimizer(grid, spec, min_mode, eps), pot, spec)
    gap = (q_near - C) / C if C > 0 else q_near - C
    return HardyReport(
        constant=C,
        min_quotient=float(min(qs + [q_near])),
        near_optimizer_gap=float(gap),
        n_trials=n_trials,
        near_optimizer_quotient=q_near,
        min_mode=min_mode,
        d=d,
    )
