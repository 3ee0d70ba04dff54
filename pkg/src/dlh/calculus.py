"""λ-gradient, λ-divergence and the vector fields behind the Hardy inequalities.

For ε > 0 the fields h_ε are smooth versions of

    h(x) = ∏|x^(i)|^{μ_i} / (‖x‖^t [[x]]^s) · (σ_1 x^(1)/λ_1, ..., σ_k x^(k)/λ_k)

and their λ-divergence factors as density × c_ε (t = 0) or density ×
(c_ε − η_ε).  c_ε and η_ε are evaluated from closed forms; finite
differences are kept as an independent cross-check only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import softmax

from . import fd
from .errors import DegeneratePoint, NotGrushin
from .norms import (
    _check_eps,
    _dist_eps_log_w,
    _log_bracket_terms_eps,
    _xlogy,
    bracket_exponents,
    bracket_norm,
    bracket_norm_regularized,
    dist_norm,
    dist_norm_regularized,
)
from .params import HardyParams, Variant
from .system import LambdaSystem, block_norms, conform, lambdas


@dataclass(frozen=True)
class Support:
    """Where a field may be nonzero: a ball or an axis-aligned box."""

    center: np.ndarray
    radius: float
    shape: str = "ball"

    def contains(self, x) -> np.ndarray:
        d = np.asarray(x, dtype=float) - self.center
        if self.shape == "ball":
            return np.linalg.norm(d, axis=-1) < self.radius
        return np.all(np.abs(d) < self.radius, axis=-1)


@dataclass(frozen=True)
class ScalarField:
    """Vectorized scalar function with an optional analytic euclidean gradient.

    ``log_evaluator`` (optional) returns log|f|; integrators use it to stay
    finite where f itself would overflow.  ``log_grad_norm`` plays the same
    role for |∇_λ f| and takes the system as first argument.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    support: Optional[Support] = None
    log_evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None
    log_grad_norm: Optional[Callable[[LambdaSystem, np.ndarray], np.ndarray]] = None
    name: str = "field"

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(np.asarray(x, dtype=float))

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.gradient is not None:
            return self.gradient(x)
        return fd.gradient(self.evaluator, x)


@dataclass(frozen=True)
class BlockVectorField:
    """Vector field on R^N with an optional analytic λ-divergence."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    divergence: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "vfield"

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(np.asarray(x, dtype=float))


def coord_lambdas(sys: LambdaSystem, x) -> np.ndarray:
    """λ of the owning block for every coordinate, shape (..., N)."""
    return lambdas(sys, x)[..., sys.block_of_coord]


def grad_lambda(field: ScalarField, sys: LambdaSystem, x) -> np.ndarray:
    """∇_λ f = (λ_1 ∇_{x^(1)} f, ..., λ_k ∇_{x^(k)} f)."""
    x = conform(sys, x)
    g = field.grad(x)
    if field.gradient is None and not np.all(np.isfinite(g)):
        raise DegeneratePoint("finite-difference gradient is not finite")
    return coord_lambdas(sys, x) * g


def div_lambda_fd(vfield, sys: LambdaSystem, x, step=None, order: int = 2) -> np.ndarray:
    """Σ_i λ_i div_{x^(i)} h by central differences."""
    x = conform(sys, x)
    out = fd.divergence_weighted(vfield, x, coord_lambdas(sys, x), step, order)
    if not np.all(np.isfinite(out)):
        raise DegeneratePoint("finite-difference divergence is not finite")
    return out


def div_lambda(vfield: BlockVectorField, sys: LambdaSystem, x) -> np.ndarray:
    """div_λ h, analytic when the field carries one, otherwise central differences."""
    x = conform(sys, x)
    if getattr(vfield, "divergence", None) is not None:
        return vfield.divergence(x)
    return div_lambda_fd(vfield, sys, x)


# ---------------------------------------------------------------------------
# proof vector fields


def _log_mu_factor(sys: LambdaSystem, mu: np.ndarray, r: np.ndarray) -> np.ndarray:
    """log ∏|x^(i)|^{μ_i}; DegeneratePoint where a zero block meets μ_i < 0."""
    if np.any((r == 0) & (mu < 0)):
        raise DegeneratePoint("zero block raised to a negative power μ_i")
    return _xlogy(mu, r).sum(axis=-1)


def _euler_fractions(sys: LambdaSystem, r: np.ndarray, eps: float) -> np.ndarray:
    """x^(l)·∇_{x^(l)} log [[x]]_{ε,λ} for every l, shape (..., k)."""
    terms = _log_bracket_terms_eps(sys, r, eps)
    with np.errstate(invalid="ignore"):
        w = softmax(terms, axis=-1)
    A = 0.5 * (bracket_exponents(sys) - 2.0 * np.eye(sys.k))  # Σ_{i≠j} α_il
    f = r**2 / (r**2 + eps)
    per_l = w + np.einsum("...j,jl->...l", w, A) * f
    return per_l / sys.bracket_degree


def _lambda_ratio(sys: LambdaSystem, r: np.ndarray, eps: float) -> np.ndarray:
    """λ_l/λ_l^ε = ∏_j (|x^(j)|²/(|x^(j)|²+ε))^{α_lj/2}."""
    f = r**2 / (r**2 + eps)
    return np.prod(np.power(f[..., None, :], sys.alpha / 2.0), axis=-1)


def c_eps(sys: LambdaSystem, params: HardyParams, eps, x) -> np.ndarray:
    """c_ε(x) = Σ_i (λ_i/λ_i^ε)(N_iσ_i + σ_iμ_i − s σ_i x^(i)·∇_{x^(i)}[[x]]_ε / [[x]]_ε)."""
    eps = _check_eps(eps)
    x = conform(sys, x)
    mu = params.mu_for(sys.k)
    r = block_norms(sys, x)
    ratio = _lambda_ratio(sys, r, eps)
    base = np.sum(ratio * sys.sigma * (np.asarray(sys.dims) + mu), axis=-1)
    euler = np.sum(ratio * sys.sigma * _euler_fractions(sys, r, eps), axis=-1)
    return base - params.s * euler


def eta_eps(sys: LambdaSystem, params: HardyParams, eps, x) -> np.ndarray:
    """η_ε(x) = t/‖x‖_ε Σ_i (λ_i/λ_i^ε) σ_i x^(i)·∇_{x^(i)}‖x‖_ε (zero unless variant is DIST)."""
    eps = _check_eps(eps)
    x = conform(sys, x)
    t = params.effective_t()
    if t == 0:
        return np.zeros(x.shape[:-1])
    r = block_norms(sys, x)
    P = float(np.prod(sys.sigma))
    logs = (P / sys.sigma) * _dist_eps_log_w(sys, r, eps, params.dist_variant)
    v = softmax(logs, axis=-1)
    f = r**2 / (r**2 + eps)
    return t * np.sum(_lambda_ratio(sys, r, eps) * v * f, axis=-1)


def _log_density_eps(sys: LambdaSystem, params: HardyParams, eps: float, x: np.ndarray) -> np.ndarray:
    """log of ∏|x^(i)|^{μ_i} / (‖x‖_ε^t [[x]]_ε^s)."""
    r = block_norms(sys, x)
    mu = params.mu_for(sys.k)
    out = _log_mu_factor(sys, mu, r)
    s = float(params.s)
    if s != 0:
        with np.errstate(divide="ignore"):
            lrho = np.log(bracket_norm_regularized(sys, x, eps))
        if s > 0 and np.any(np.isneginf(lrho)):
            raise DegeneratePoint("[[x]]_ε vanishes and s > 0")
        out = out - s * lrho
    t = params.effective_t()
    if t != 0:
        out = out - t * np.log(dist_norm_regularized(sys, x, eps, params.dist_variant))
    return out


def _h_exact(sys: LambdaSystem, params: HardyParams, x: np.ndarray) -> np.ndarray:
    """Unregularized h at points where every λ_i is nonzero."""
    lam = coord_lambdas(sys, x)
    if np.any(lam == 0):
        raise DegeneratePoint("h is singular where some λ_i vanishes; use ε > 0")
    log_dens = _log_mu_factor(sys, params.mu_for(sys.k), block_norms(sys, x))
    if params.s != 0:
        log_dens = log_dens - params.s * np.log(bracket_norm(sys, x))
    t = params.effective_t()
    if t != 0:
        log_dens = log_dens - t * np.log(dist_norm(sys, x, params.dist_variant))
    return np.exp(log_dens)[..., None] * sys.coord_sigma * x / lam


def _h_eps(sys: LambdaSystem, params: HardyParams, eps, x) -> np.ndarray:
    """h_ε, or the unregularized h when ε = 0."""
    eps = float(eps)
    if eps != 0:
        eps = _check_eps(eps)
    x = conform(sys, x)
    origin = np.all(x == 0, axis=-1)
    if np.any(origin):
        # |h_ε| ~ [[x]]_ε^{1+Σ(σ_i−1)−s} near 0: extend by continuity when that power is positive
        if sys.bracket_degree - params.s <= 0 or np.any(params.mu_for(sys.k) < 0):
            raise DegeneratePoint("h_ε has no finite value at the origin for these parameters")
        out = np.zeros(x.shape)
        keep = ~origin
        if np.any(keep):
            out[keep] = _h_eps(sys, params, eps, x[keep])
        return out
    if eps == 0:
        return _h_exact(sys, params, x)
    lam_eps = coord_lambdas_eps(sys, x, eps)
    dens = np.exp(_log_density_eps(sys, params, eps, x))
    return dens[..., None] * sys.coord_sigma * x / lam_eps


def coord_lambdas_eps(sys: LambdaSystem, x, eps) -> np.ndarray:
    r = block_norms(sys, x)
    lam = np.prod(np.power(r[..., None, :] ** 2 + eps, sys.alpha / 2.0), axis=-1)
    return lam[..., sys.block_of_coord]


def h_eps_semi(sys: LambdaSystem, params: HardyParams, eps, x) -> np.ndarray:
    """h_ε = ∏|x^(i)|^{μ_i}/[[x]]_ε^s · (σ_i x^(i)/λ_i^ε)_i (t ignored); ε = 0 gives h itself."""
    p = params if params.variant is Variant.SEMI else HardyParams(params.p, params.s, 0.0, params.mu)
    return _h_eps(sys, p, eps, x)


def h_eps_dist(sys: LambdaSystem, params: HardyParams, eps, x) -> np.ndarray:
    """h_ε with the extra 1/‖x‖_ε^t factor (DIST variant); equals h_eps_semi for t = 0."""
    return _h_eps(sys, params, eps, x)


def h_eps_magnitude(sys: LambdaSystem, params: HardyParams, eps, x) -> np.ndarray:
    """|h_ε| = ∏|x^(i)|^{μ_i} [[x]]_ε^{(1+Σ(σ_i−1))−s} / (∏λ_i^ε ‖x‖_ε^t)."""
    eps = _check_eps(eps)
    x = conform(sys, x)
    lam_eps = regularized_lambdas_prod(sys, x, eps)
    rho = bracket_norm_regularized(sys, x, eps)
    r = block_norms(sys, x)
    val = np.exp(_log_mu_factor(sys, params.mu_for(sys.k), r)) * rho ** (sys.bracket_degree - params.s) / lam_eps
    t = params.effective_t()
    if t != 0:
        val = val / dist_norm_regularized(sys, x, eps, params.dist_variant) ** t
    return val


def regularized_lambdas_prod(sys: LambdaSystem, x, eps) -> np.ndarray:
    r = block_norms(sys, x)
    return np.prod((r**2 + eps) ** (sys.column_sums / 2.0), axis=-1)


def divergence_h_eps(sys: LambdaSystem, params: HardyParams, eps, x) -> np.ndarray:
    """Closed-form div_λ h_ε = density_ε · (c_ε − η_ε)."""
    x = conform(sys, x)
    dens = np.exp(_log_density_eps(sys, params, _check_eps(eps), x))
    return dens * (c_eps(sys, params, eps, x) - eta_eps(sys, params, eps, x))


def proof_field(sys: LambdaSystem, params: HardyParams, eps) -> BlockVectorField:
    """h_ε of the weighted theorems as a field with analytic divergence."""
    eps = _check_eps(eps)
    if params.variant is Variant.UNWEIGHTED:
        return unweighted_field(sys, params.p, eps)
    return BlockVectorField(
        evaluator=lambda x: _h_eps(sys, params, eps, x),
        divergence=lambda x: divergence_h_eps(sys, params, eps, x),
        name=f"h_eps[{params.variant.value}]",
    )


def unweighted_field(sys: LambdaSystem, p: float, eps) -> BlockVectorField:
    """h_ε = (x^(1), 0, ..., 0)/(|x^(1)|² + ε)^{p/2}; for k = 1 this is the classical field."""
    eps = _check_eps(eps)
    n1 = sys.dims[0]
    first = sys.slices[0]

    def value(x):
        x = conform(sys, x)
        r2 = np.sum(x[..., first] ** 2, axis=-1)
        out = np.zeros(x.shape)
        out[..., first] = x[..., first] / ((r2 + eps) ** (p / 2.0))[..., None]
        return out

    def divergence(x):
        x = conform(sys, x)
        r2 = np.sum(x[..., first] ** 2, axis=-1)
        return (n1 - p * r2 / (r2 + eps)) / (r2 + eps) ** (p / 2.0)

    return BlockVectorField(value, divergence, name="h_eps[unweighted]")


def identity_field(sys: LambdaSystem, scale: float = 1.0) -> BlockVectorField:
    """h(x) = scale·x / λ(x) blockwise, whose λ-divergence is the constant scale·N."""

    def value(x):
        return scale * x / coord_lambdas(sys, x)

    return BlockVectorField(value, lambda x: np.full(np.shape(x)[:-1], scale * sys.N), name="identity")


# ---------------------------------------------------------------------------
# Grushin appendix field


def _require_grushin(sys: LambdaSystem):
    if not sys.is_grushin:
        raise NotGrushin(f"expected a k=2 Grushin system, got k={sys.k}")


def grushin_weight(sys: LambdaSystem, x) -> np.ndarray:
    """|x|^{2α} / [[(x, y)]]^{2(1+α)}."""
    _require_grushin(sys)
    x = conform(sys, x)
    a = sys.grushin_alpha
    r1 = block_norms(sys, x)[..., 0]
    return np.power(r1, 2 * a) / bracket_norm(sys, x) ** (2 * (1 + a))


def appendix_phi(sys: LambdaSystem, x) -> np.ndarray:
    """φ(x, y) = −((Q−2)/2)·|x|^{2α}/[[(x,y)]]^{2(1+α)}·(x, (1+α) y/|x|^α)."""
    _require_grushin(sys)
    x = conform(sys, x)
    a = sys.grushin_alpha
    r1 = block_norms(sys, x)[..., 0]
    if np.any(r1 == 0) and a > 0:
        raise DegeneratePoint("φ needs x^(1) ≠ 0")
    w = grushin_weight(sys, x)
    sx, sy = sys.slices
    out = np.empty(x.shape)
    out[..., sx] = x[..., sx]
    out[..., sy] = (1 + a) * x[..., sy] / np.power(r1, a)[..., None]
    return -(sys.Q - 2) / 2 * w[..., None] * out


def appendix_phi_divergence(sys: LambdaSystem, x) -> np.ndarray:
    """Closed-form div_λ φ = −(Q−2)²/2 · |x|^{2α}/[[(x,y)]]^{2(1+α)}."""
    return -((sys.Q - 2) ** 2) / 2 * grushin_weight(sys, x)


def appendix_phi_field(sys: LambdaSystem) -> BlockVectorField:
    _require_grushin(sys)
    return BlockVectorField(lambda x: appendix_phi(sys, x), lambda x: appendix_phi_divergence(sys, x), name="phi")
