"""Heuristic (noise-level-free) Tikhonov parameter choice on sequence-space models.

The forward operator is given by its singular system, so every quantity is a
weighted sum over modes.  Submodules:

``spectral_model``  problems ``lambda_i = i**-gamma`` and polynomially decaying noise
``functionals``     Tikhonov solutions, psi-functionals, error splits
``selection``       grid minimisation with boundary flags
``conditions``      numerical checks of noise and regularity conditions
``experiments``     convergence-rate studies and slope fits
``documents``       TOML config/problem documents and CSV output
``cli``             ``heuristic-choice`` command line
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateInputError, DegenerateWeightWarning, FitDegenerateError, ParameterError,
    SaturationError, SelectionFailedError, UsageError,
)
from .spectral_model import (
    NoiseRealization, SpectralProblem, build_polynomial_noise, build_polynomial_problem,
    delta_of, eta_of, scale_noise_to_eta, sign_pattern, with_problem,
)
from .functionals import (
    ERROR_METRICS, RULE_KINDS, RegularizedSolution, RuleSpec, error_metric_curves, error_metrics,
    psi, psi_curve, psi_gcv, psi_pms, psi_via_definition, rho, rho_curve, second_tikhonov,
    second_tikhonov_recursive, spectral_filter, tikhonov,
)
from .selection import (
    AT_MAX_EDGE, AT_MIN_EDGE, INTERIOR, AlphaGrid, SelectionResult, apriori_optimal_alpha,
    geometric_grid, make_alpha_grid, select_alpha,
)
from .conditions import (
    ConditionReport, RefinementVerdict, check_gcv_noise_condition, check_gcv_regularity,
    check_noise_condition, check_pms_noise_condition, check_regularity_condition,
    check_source_tightness, condition_grid, refinement_study,
)
from .experiments import (
    NoiseSpec, ProblemSpec, RateStudyConfig, RateStudyReport, fit_loglog_slope, gcv_bound_check,
    run_rate_study, theoretical_exponent,
)
