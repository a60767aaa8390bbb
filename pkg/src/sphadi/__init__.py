"""Scaling-critical magnetic Schrodinger operators: angular spectra, Hardy
constants, the Bessel-kernel propagator and closed-form oracles."""

from .angular import (
    AngularPotential,
    SpectralData,
    ab_spectrum,
    alpha_beta,
    closed_spectrum,
    spectrum,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    FeasibilityError,
    ResolutionError,
    SphadiError,
    TruncationError,
    WindowLossWarning,
)
from .hardy import HardyReport, rayleigh_quotient, sharp_constant, verify_hardy
from .oracles import VnjSpec, free_gaussian, resolve_vnj, vnj, vnj_evolved
from .propagator import (
    DecayReport,
    KernelSpec,
    ModeField,
    decay_fit,
    decay_scan,
    decompose,
    kernel_eval,
    kernel_sup_scan,
    lp_norm,
    propagate,
    reconstruct,
)
from .radial import RadialGrid
from .specfun import SeriesParams, bessel_j, gamma, j_lower, pjn_poly, pochhammer

__version__ = "0.1.0"
