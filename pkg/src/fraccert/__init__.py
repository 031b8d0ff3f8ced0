"""Fractional Laplacian toolkit for weighted uniqueness certificates."""

from .certify import (
    CaseLabel,
    DensityModel,
    ProblemSpec,
    classify,
    compute_thresholds,
    growth_membership,
    verify_elliptic,
    verify_parabolic,
)
from .covering import remainder_integral, riesz_potential
from .fraclap import FracOrder, ScalarField, bilinear_form, flap_pv, flap_spectral_field
from .grids import PeriodicGrid
from .heatkernel import KernelProfile, Normalization, kernel_eval
from .solver import evolve, weighted_lp_norm
from .specfun import gamma_fn, hyp2f1, limit_classify

__version__ = "0.1.0"

__all__ = [
    "CaseLabel", "DensityModel", "ProblemSpec", "classify", "compute_thresholds",
    "growth_membership", "verify_elliptic", "verify_parabolic", "remainder_integral",
    "riesz_potential", "FracOrder", "ScalarField", "bilinear_form", "flap_pv",
    "flap_spectral_field", "PeriodicGrid", "KernelProfile", "Normalization", "kernel_eval",
    "evolve", "weighted_lp_norm", "gamma_fn", "hyp2f1", "limit_classify",
]
