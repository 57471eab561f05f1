"""Filtering and state-diffusion unravellings of open quantum systems, and their equivalence."""
from .belavkin import (BelavkinState, belavkin_increment, belavkin_step, detuned_coupling,
                       run_belavkin, run_zakai, zakai_step)
from .canonical import (CanonicalCoefficients, PhaseProcess, build_canonical_model,
                        canonical_coefficients, coupled_pair_run, phase_increment,
                        phase_ito_cross_check)
from .feedback import closed_loop_run, feedback_alpha, feedback_identities, modulated_increment
from .filters import (FilterSeries, belavkin_filter_residuals, belavkin_filter_series,
                      gisin_filter_residuals, gisin_filter_series, proposition2_check)
from .gisin import GisinState, euclidean_transform_gp, gisin_increment, gisin_step, run_gisin
from .lindblad import lindblad_propagate, lindblad_rhs
from .linalg import ModelSpec, apply, expectation, gks_lindblad_apply
from .noise import (NoisePath, canonical_noise_map, coarsen, complex_from_real,
                    ensemble_real_increments, real_increments)
from .records import IntegrationError, TrajectoryRecord
from .slh import EuclideanElement, SLHTriple, euclidean_apply, series_product, weyl_box

__version__ = "0.1.0"

__all__ = [
    "BelavkinState",
    "CanonicalCoefficients",
    "EuclideanElement",
    "FilterSeries",
    "GisinState",
    "IntegrationError",
    "ModelSpec",
    "NoisePath",
    "PhaseProcess",
    "SLHTriple",
    "TrajectoryRecord",
    "apply",
    "belavkin_filter_residuals",
    "belavkin_filter_series",
    "belavkin_increment",
    "belavkin_step",
    "build_canonical_model",
    "canonical_coefficients",
    "canonical_noise_map",
    "closed_loop_run",
    "coarsen",
    "complex_from_real",
    "coupled_pair_run",
    "detuned_coupling",
    "ensemble_real_increments",
    "euclidean_apply",
    "euclidean_transform_gp",
    "expectation",
    "feedback_alpha",
    "feedback_identities",
    "gisin_filter_residuals",
    "gisin_filter_series",
    "gisin_increment",
    "gisin_step",
    "gks_lindblad_apply",
    "lindblad_propagate",
    "lindblad_rhs",
    "modulated_increment",
    "phase_increment",
    "phase_ito_cross_check",
    "proposition2_check",
    "real_increments",
    "run_belavkin",
    "run_gisin",
    "run_zakai",
    "series_product",
    "weyl_box",
    "zakai_step",
]

