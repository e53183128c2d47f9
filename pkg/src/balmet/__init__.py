"""balmet: balanced-metric iterations on projective space.

Implements the three maps T, T_nu, T_K on diagonal Hermitian metrics over
the projective line (and T_nu on torus-invariant metrics over CP^2, CP^3),
their fixed-point dynamics toward balanced metrics, convergence-rate laws,
and the conjectured distance envelope, together with certified semi-infinite
quadrature and a CLI that regenerates the benchmark tables.
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, MetricError, QuadratureError
from .metrics import (
    BalancedFamily,
    DiagonalMetric,
    as_metric,
    balanced_coeffs,
    distance,
    is_palindromic,
    predict_balanced_direction_k2,
    reverse,
    scale,
    trace_relation,
)
from .quadrature import (
    IntegrandSpec,
    QuadratureRule,
    gauss_legendre_unit,
    integrate_box,
    integrate_semi_infinite,
)
from .cp1 import (
    DensityProfile,
    OperatorKind,
    apply_T,
    apply_TK,
    apply_Tnu,
    apply_operator,
    density_profile,
)
from .cpn import (
    MonomialBasis,
    MultiIndexMetric,
    SymmetryClassification,
    apply_Tnu_cpn,
    build_basis,
    classify_symmetry,
    metric_from_class_values,
    multinomial_coeffs,
    full_symmetry_orbits,
    permutation_action,
    sigma_predict_cpn,
)
from .dynamics import (
    NormalizationMode,
    Trajectory,
    bound_series,
    build_trajectory,
    contraction_witness,
    coordinate_sigma_series,
    error_series,
    find_balanced,
    iterate,
    sigma_closed_form,
    sigma_estimate,
    sigma_probe,
)
from .tables import TABLE_IDS, generate_table, golden_table, reproduce

__all__ = [
    "__version__",
    "ConvergenceError", "MetricError", "QuadratureError",
    "BalancedFamily", "DiagonalMetric", "as_metric", "balanced_coeffs",
    "distance", "is_palindromic", "predict_balanced_direction_k2", "reverse",
    "scale", "trace_relation",
    "IntegrandSpec", "QuadratureRule", "gauss_legendre_unit",
    "integrate_box", "integrate_semi_infinite",
    "DensityProfile", "OperatorKind", "apply_T", "apply_TK", "apply_Tnu",
    "apply_operator", "density_profile",
    "MonomialBasis", "MultiIndexMetric", "SymmetryClassification",
    "apply_Tnu_cpn", "build_basis", "classify_symmetry",
    "metric_from_class_values", "multinomial_coeffs", "full_symmetry_orbits",
    "permutation_action", "sigma_predict_cpn",
    "NormalizationMode", "Trajectory", "bound_series", "build_trajectory",
    "contraction_witness", "coordinate_sigma_series", "error_series",
    "find_balanced", "iterate", "sigma_closed_form", "sigma_estimate",
    "sigma_probe",
    "TABLE_IDS", "generate_table", "golden_table", "reproduce",
]
