"""Weighted Hardy inequalities for Δλ-Laplacians, checked numerically."""
from .calculus import (
    BlockVectorField,
    ScalarField,
    Support,
    c_eps,
    div_lambda,
    div_lambda_fd,
    divergence_h_eps,
    eta_eps,
    grad_lambda,
    h_eps_dist,
    h_eps_magnitude,
    h_eps_semi,
    proof_field,
)
from .errors import (
    ConditionsNotMet,
    ConfigParse,
    DegenerateDenominator,
    DegeneratePoint,
    DimensionMismatch,
    DLHError,
    IndexOutOfRange,
    NegativeExponent,
    NonIntegrableSample,
    NonPositiveDivergence,
    NonPositiveEpsilon,
    NonPositiveScale,
    NonTriangularAlpha,
    NotGrushin,
    ValidationError,
)
from .hardy import Mode, check_conditions, hardy_constant, weight_lhs_density, weight_psi
from .integrate import (
    Domain,
    InequalityReport,
    IntegralEstimate,
    RadialPower,
    Uniform,
    Verdict,
    bump,
    lemma_check,
    mc_integrate,
    verify_inequality,
)
from .norms import NormVariant, bracket_norm, dist_norm, euler_residual, evaluate
from .params import HardyParams, Variant
from .sharpness import (
    SharpnessTrend,
    extremal_equation_residual,
    fundamental_identity_residual,
    grushin_sharpness_sweep,
    phi_divergence_identity,
    rayleigh_ratio,
    trial_function,
)
from .system import LambdaSystem, build_system, classical, dilate, grushin, lambda_eval

__all__ = [
    "BlockVectorField",
    "ConditionsNotMet",
    "ConfigParse",
    "DLHError",
    "DegenerateDenominator",
    "DegeneratePoint",
    "DimensionMismatch",
    "Domain",
    "HardyParams",
    "IndexOutOfRange",
    "InequalityReport",
    "IntegralEstimate",
    "LambdaSystem",
    "Mode",
    "NegativeExponent",
    "NonIntegrableSample",
    "NonPositiveDivergence",
    "NonPositiveEpsilon",
    "NonPositiveScale",
    "NonTriangularAlpha",
    "NormVariant",
    "NotGrushin",
    "RadialPower",
    "ScalarField",
    "SharpnessTrend",
    "Support",
    "Uniform",
    "ValidationError",
    "Variant",
    "Verdict",
    "bracket_norm",
    "build_system",
    "bump",
    "c_eps",
    "check_conditions",
    "classical",
    "dilate",
    "dist_norm",
    "div_lambda",
    "div_lambda_fd",
    "divergence_h_eps",
    "eta_eps",
    "euler_residual",
    "evaluate",
    "extremal_equation_residual",
    "fundamental_identity_residual",
    "grad_lambda",
    "grushin",
    "grushin_sharpness_sweep",
    "h_eps_dist",
    "h_eps_magnitude",
    "h_eps_semi",
    "hardy_constant",
    "lambda_eval",
    "lemma_check",
    "mc_integrate",
    "phi_divergence_identity",
    "proof_field",
    "rayleigh_ratio",
    "trial_function",
    "verify_inequality",
    "weight_lhs_density",
    "weight_psi",
]

__version__ = "0.1.0"
