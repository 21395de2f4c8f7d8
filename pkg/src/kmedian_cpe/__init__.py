"""Compressive parameter estimation with K-median clustering over parametric dictionaries."""

from .bounds import (BoundReport, InfeasibleBound, fit_decay, t2_min_offbound,
                     t2_min_separation, t3_min_separation, t3_threshold_feasible,
                     t3_threshold_floor)
from .clustering import KMedianError, kmedian, kmedian_objective, weighted_median
from .recovery import (Algorithm, EstimationResult, MeasurementOperator, RecoveryConfig,
                       add_awgn, band_excluded_select, bsp, csp, estimate, hard_threshold,
                       measure, proxy)
from .signal_models import (CorrelationProfile, Dictionary, ParameterGrid, ParametricModel,
                            build_dictionary, build_grid, coherence, compose_signal,
                            correlation_profile, draw_random_scene, inverse_cumulative,
                            synthesize_atom)
from .transport import (SparseCoefVector, emd, emd_lp_oracle, emd_sparse_approx, pee,
                        theorem1_check)

__all__ = [
    "Algorithm", "BoundReport", "CorrelationProfile", "Dictionary", "EstimationResult",
    "InfeasibleBound", "KMedianError", "MeasurementOperator", "ParameterGrid",
    "ParametricModel", "RecoveryConfig", "SparseCoefVector", "add_awgn",
    "band_excluded_select", "bsp", "build_dictionary", "build_grid", "coherence",
    "compose_signal", "correlation_profile", "csp", "draw_random_scene", "emd",
    "emd_lp_oracle", "emd_sparse_approx", "estimate", "fit_decay", "hard_threshold",
    "inverse_cumulative", "kmedian", "kmedian_objective", "measure", "pee", "proxy",
    "synthesize_atom", "t2_min_offbound", "t2_min_separation", "t3_min_separation",
    "t3_threshold_feasible", "t3_threshold_floor", "theorem1_check", "weighted_median",
]
