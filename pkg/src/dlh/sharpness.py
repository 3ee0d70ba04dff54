"""Rayleigh quotients, the Grushin extremal family and appendix identities.

The trial family is u_{δ,R} = min(ρ, R)^{−β}·χ(ρ) with ρ = [[x]]_λ,
β = (Q−2)/2 − δ and χ a smoothstep from 1 at ρ = R to 0 at ρ = 2R.

For ρ < R both integrands of the p = 2 inequality are δ_r-homogeneous of
degree 2δ − Q, so the integral over the ball {ρ < R} equals the integral
over the shell {R/e < ρ < R} times 1/(1 − e^{−2δ}).  The sweep samples only
the two shells and applies that factor; this keeps small δ (where mass is
spread evenly over all log-scales of ρ) within reach of double precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .calculus import BlockVectorField, ScalarField, coord_lambdas, div_lambda_fd, grushin_weight
from .errors import DegenerateDenominator, DegeneratePoint, NotGrushin, ValidationError
from .hardy import log_weight_lhs_density, log_weight_psi
from .integrate import Domain, IntegralEstimate, Uniform, _Stats, _field_log_abs, _field_log_grad_lambda, run_chunks
from .norms import _xlogy, bracket_norm, bracket_norm_gradient, degenerate_mask, log_bracket_norm
from .params import HardyParams, Variant
from .system import LambdaSystem, block_norms, conform, lambdas

SHELL_LOG_WIDTH = 1.0
DEFAULT_DELTAS = (0.5, 0.2, 0.1, 0.05)
DEFAULT_RADII = (1.0, 4.0, 16.0)
REFINED_DELTAS = (0.02, 0.01, 0.005, 0.002)


# ---------------------------------------------------------------------------
# ratios


def _ratio_from(stats: _Stats, seed: int) -> IntegralEstimate:
    """RHS/LHS with a delta-method standard error (rows: 0 = lhs, 1 = rhs)."""
    cov = stats.cov_of_mean()
    lhs, rhs = float(stats.mean[0]), float(stats.mean[1])
    lhs_se = math.sqrt(max(float(cov[0, 0]), 0.0))
    if not lhs > 3 * lhs_se:
        raise DegenerateDenominator(f"LHS estimate {lhs:.6g} is within 3 standard errors ({lhs_se:.3g}) of zero")
    ratio = rhs / lhs
    var = (cov[1, 1] - 2 * ratio * cov[0, 1] + ratio**2 * cov[0, 0]) / lhs**2
    return IntegralEstimate(ratio, math.sqrt(max(float(var), 0.0)), stats.n, int(seed), stats.rejected)


def rayleigh_ratio(
    sys: LambdaSystem,
    params: HardyParams,
    u: ScalarField,
    domain: Domain,
    n: int = 1_000_000,
    seed: int = 0,
    *,
    sampler=None,
    workers: Optional[int] = None,
) -> IntegralEstimate:
    """∫ψ|∇_λu|^p / ∫ density·|u|^p estimated on shared samples."""
    from .integrate import _support_mask, default_sampler

    sampler = default_sampler(sys, params, domain) if sampler is None else sampler
    p = params.p

    def contributions(z, inside, log_q):
        out = np.zeros((2, len(z)))
        mask = _support_mask(u, z, inside)
        if mask.any():
            zm, lq = z[mask], log_q[mask]
            lu = _field_log_abs(u, zm)
            lg = _field_log_grad_lambda(u, sys, zm)
            with np.errstate(invalid="ignore"):
                out[0, mask] = np.where(np.isneginf(lu), 0.0, np.exp(log_weight_lhs_density(sys, params, zm) + p * lu - lq))
                out[1, mask] = np.where(np.isneginf(lg), 0.0, np.exp(log_weight_psi(sys, params, zm) + p * lg - lq))
        return out

    return _ratio_from(run_chunks(contributions, domain, sampler, n, seed, sys, workers), seed)


# ---------------------------------------------------------------------------
# trial family


def _log_grad_lambda_bracket(sys: LambdaSystem, x: np.ndarray, log_rho: np.ndarray) -> np.ndarray:
    """log|∇_λ [[x]]|, evaluated at δ_{1/ρ}x (the quantity is 0-homogeneous)."""
    y = x * np.exp(-sys.coord_sigma * log_rho[..., None])
    g = coord_lambdas(sys, y) * bracket_norm_gradient(sys, y)
    with np.errstate(divide="ignore"):
        return np.log(np.linalg.norm(g, axis=-1))


def trial_function(sys: LambdaSystem, delta: float, R: float) -> ScalarField:
    """u_{δ,R} = min([[x]], R)^{−β}·χ([[x]]), β = (Q−2)/2 − δ."""
    if not delta > 0:
        raise ValidationError("the trial family needs δ > 0")
    if not R > 0:
        raise ValidationError("the trial family needs R > 0")
    beta = (sys.Q - 2) / 2 - delta
    logR = math.log(R)

    def profile(log_rho):
        """(log g(ρ), log|g'(ρ)|), with g = 0 beyond 2R."""
        t = np.clip((np.exp(log_rho - logR) - 1.0), 0.0, 1.0)
        cut = 1.0 - t * t * (3.0 - 2.0 * t)
        dcut = 6.0 * t * (1.0 - t) / R
        inner = log_rho < logR
        with np.errstate(divide="ignore"):
            lg = np.where(inner, -beta * log_rho, -beta * logR + np.log(cut))
            inner_d = math.log(abs(beta)) - (beta + 1) * log_rho if beta != 0 else np.full_like(log_rho, -np.inf)
            ldg = np.where(inner, inner_d, -beta * logR + np.log(dcut))
        return lg, ldg

    def sign_d(log_rho):
        return np.where(log_rho < logR, -np.sign(beta), -1.0)

    def log_value(x):
        x = conform(sys, x)
        return profile(log_bracket_norm(sys, x))[0]

    def value(x):
        return np.exp(log_value(x))

    def gradient(x):
        x = conform(sys, x)
        lr = log_bracket_norm(sys, x)
        ldg = profile(lr)[1]
        return (sign_d(lr) * np.exp(ldg))[..., None] * bracket_norm_gradient(sys, x)

    def log_grad_norm(system, x):
        x = conform(system, x)
        lr = log_bracket_norm(system, x)
        return profile(lr)[1] + _log_grad_lambda_bracket(system, x, lr)

    return ScalarField(value, gradient, None, log_value, log_grad_norm, name=f"trial(δ={delta:g},R={R:g})")


def _require_grushin(sys: LambdaSystem):
    if not sys.is_grushin:
        raise NotGrushin(f"expected a two-block Grushin system, got k={sys.k}")


def _grushin_shell_box(sys: LambdaSystem, R: float) -> Domain:
    """Box containing {[[z]] < 2R} for Grushin: |x| ≤ ρ, |y| ≤ ρ^{1+α}/(1+α)."""
    a = sys.grushin_alpha
    half = np.concatenate([np.full(sys.dims[0], 2 * R), np.full(sys.dims[1], (2 * R) ** (1 + a) / (1 + a))])
    return Domain.box(-half, half)


def folded_trial_ratio(
    sys: LambdaSystem,
    params: HardyParams,
    delta: float,
    R: float,
    n: int,
    seed: int,
    *,
    workers: Optional[int] = None,
) -> IntegralEstimate:
    """Rayleigh ratio of u_{δ,R} on R^N via the shell decomposition."""
    u = trial_function(sys, delta, R)
    domain = _grushin_shell_box(sys, R)
    logR = math.log(R)
    fold = 1.0 / -math.expm1(-2.0 * delta * SHELL_LOG_WIDTH)
    p = params.p

    def contributions(z, inside, log_q):
        out = np.zeros((2, len(z)))
        with np.errstate(divide="ignore"):
            lr = log_bracket_norm(sys, z)
        mask = inside & (lr > logR - SHELL_LOG_WIDTH) & (lr < logR + math.log(2.0))
        if mask.any():
            zm, lq = z[mask], log_q[mask]
            w = np.where(lr[mask] < logR, math.log(fold), 0.0)
            lu = u.log_evaluator(zm)
            lg = u.log_grad_norm(sys, zm)
            with np.errstate(invalid="ignore"):
                out[0, mask] = np.where(np.isneginf(lu), 0.0, np.exp(log_weight_lhs_density(sys, params, zm) + p * lu - lq + w))
                out[1, mask] = np.where(np.isneginf(lg), 0.0, np.exp(log_weight_psi(sys, params, zm) + p * lg - lq + w))
        return out

    return _ratio_from(run_chunks(contributions, domain, Uniform(), n, seed, sys, workers), seed)


@dataclass(frozen=True)
class TrendEntry:
    delta: float
    R: float
    ratio: float
    se: float


@dataclass(frozen=True)
class SharpnessTrend:
    entries: tuple[TrendEntry, ...]
    target: float

    @property
    def extrapolated(self) -> TrendEntry:
        """Entry with the smallest observed ratio (no model fit)."""
        return min(self.entries, key=lambda e: e.ratio)

    @property
    def relative_gap(self) -> float:
        return (self.extrapolated.ratio - self.target) / self.target

    def lower_bound_ok(self, k: float = 3.0) -> bool:
        return all(e.ratio >= self.target - k * e.se for e in self.entries)


def default_schedule(refine: bool = True) -> list[tuple[float, float]]:
    sched = [(d, R) for d in DEFAULT_DELTAS for R in DEFAULT_RADII]
    if refine:
        sched += [(d, 1.0) for d in REFINED_DELTAS]
    return sched


def grushin_sharpness_sweep(
    sys: LambdaSystem,
    params: Optional[HardyParams] = None,
    schedule: Optional[Sequence[tuple[float, float]]] = None,
    n: int = 200_000,
    seed: int = 0,
    *,
    workers: Optional[int] = None,
) -> SharpnessTrend:
    """Rayleigh ratios of the trial family against ((Q−2)/2)²."""
    _require_grushin(sys)
    params = HardyParams(p=2, s=2) if params is None else params
    if params.p != 2 or params.s != 2 or params.variant is not Variant.SEMI or np.any(params.mu_for(sys.k) != 0):
        raise ValidationError("the sweep is defined for p = 2, s = 2, μ = 0 on the bracket-norm inequality")
    schedule = default_schedule() if schedule is None else list(schedule)
    entries = []
    for j, (delta, R) in enumerate(schedule):
        sub = int(np.random.SeedSequence([int(seed), j]).generate_state(1)[0])
        est = folded_trial_ratio(sys, params, float(delta), float(R), n, sub, workers=workers)
        entries.append(TrendEntry(float(delta), float(R), est.value, est.std_error))
    return SharpnessTrend(tuple(entries), ((sys.Q - 2) / 2) ** 2)


# ---------------------------------------------------------------------------
# appendix identities


def _check_nondegenerate(sys: LambdaSystem, x: np.ndarray):
    if np.any(degenerate_mask(sys, x)):
        raise DegeneratePoint("identity requested at a point with a vanishing block")


def fundamental_identity_residual(sys: LambdaSystem, x, relative: bool = False) -> np.ndarray:
    """|∇_λΦ|²/Φ² − (Q−2)²|x^(1)|^{2α}/[[z]]^{2(1+α)} for Φ = [[z]]^{2−Q}."""
    _require_grushin(sys)
    x = conform(sys, x)
    _check_nondegenerate(sys, x)
    rho = bracket_norm(sys, x)
    # ∇Φ/Φ = (2−Q) ∇[[z]]/[[z]]
    g = (2 - sys.Q) * coord_lambdas(sys, x) * bracket_norm_gradient(sys, x) / rho[..., None]
    lhs = np.sum(g * g, axis=-1)
    rhs = (sys.Q - 2) ** 2 * grushin_weight(sys, x)
    res = lhs - rhs
    return res / np.maximum(np.abs(rhs), np.finfo(float).tiny) if relative else res


def extremal_coefficient(sys: LambdaSystem, params: HardyParams) -> float:
    """(Q − s + Σσ_iμ_i)/2."""
    return float((sys.Q - params.s + np.dot(sys.sigma, params.mu_for(sys.k))) / 2)


def extremal_ansatz(sys: LambdaSystem, params: Optional[HardyParams] = None) -> ScalarField:
    """u = [[x]]^{−C} with C = (Q − s + Σσμ)/2; exact for Grushin when s = 2, μ = 0."""
    params = HardyParams(p=2, s=2) if params is None else params
    c = extremal_coefficient(sys, params)

    def value(x):
        return bracket_norm(sys, x) ** -c

    def gradient(x):
        rho = bracket_norm(sys, x)
        return (-c * rho ** (-c - 1))[..., None] * bracket_norm_gradient(sys, x)

    return ScalarField(value, gradient, None, lambda x: -c * log_bracket_norm(sys, x), name="extremal")


def extremal_equation_residual(sys: LambdaSystem, params: HardyParams, u: ScalarField, x, relative: bool = False) -> np.ndarray:
    """∇_{x^(i)}u + C·∏_{j≠i}λ_j²/[[x]]^{2D}·σ_i x^(i)·u, blockwise, shape (..., N)."""
    x = conform(sys, x)
    _check_nondegenerate(sys, x)
    c = extremal_coefficient(sys, params)
    lam2 = lambdas(sys, x) ** 2
    others = np.stack([np.prod(np.delete(lam2, i, axis=-1), axis=-1) for i in range(sys.k)], axis=-1)
    D = sys.bracket_degree
    factor = others[..., sys.block_of_coord] * sys.coord_sigma / bracket_norm(sys, x)[..., None] ** (2 * D)
    rhs = -c * factor * x * u(x)[..., None]
    lhs = u.grad(x)
    res = lhs - rhs
    if relative:
        scale = np.maximum(np.linalg.norm(lhs, axis=-1) + np.linalg.norm(rhs, axis=-1), np.finfo(float).tiny)
        return res / scale[..., None]
    return res


def phi_field(sys: LambdaSystem, params: HardyParams) -> BlockVectorField:
    """φ = −C·∏|x^(i)|^{μ_i}/[[x]]^s·(σ_1x^(1)/λ_1, ..., σ_kx^(k)/λ_k)."""
    c = extremal_coefficient(sys, params)
    mu = params.mu_for(sys.k)

    def value(x):
        x = conform(sys, x)
        r = block_norms(sys, x)
        scale = np.exp(_xlogy(mu, r).sum(axis=-1) - params.s * log_bracket_norm(sys, x))
        return -c * scale[..., None] * sys.coord_sigma * x / coord_lambdas(sys, x)

    def divergence(x):
        # div_λ φ = −2C²·∏|x^(i)|^{μ_i}/[[x]]^s by the Euler relation
        x = conform(sys, x)
        r = block_norms(sys, x)
        return -2 * c * c * np.exp(_xlogy(mu, r).sum(axis=-1) - params.s * log_bracket_norm(sys, x))

    return BlockVectorField(value, divergence, name="phi")


def psi_squared(sys: LambdaSystem, params: HardyParams, x) -> np.ndarray:
    """ψ² = [[x]]^{2D−s}/∏|x^(i)|^{2Σ_jα_ji − μ_i}."""
    x = conform(sys, x)
    r = block_norms(sys, x)
    mu = params.mu_for(sys.k)
    return np.exp((2 * sys.bracket_degree - params.s) * log_bracket_norm(sys, x) - _xlogy(2 * sys.column_sums - mu, r).sum(axis=-1))


def phi_divergence_identity(sys: LambdaSystem, params: HardyParams, x, relative: bool = False, step=None) -> np.ndarray:
    """|φ|²/ψ² + div_λφ + C²∏|x^(i)|^{μ_i}/[[x]]^s with div_λφ by central differences."""
    x = conform(sys, x)
    _check_nondegenerate(sys, x)
    phi = phi_field(sys, params)
    c = extremal_coefficient(sys, params)
    mu = params.mu_for(sys.k)
    target = c * c * np.exp(_xlogy(mu, block_norms(sys, x)).sum(axis=-1) - params.s * log_bracket_norm(sys, x))
    v = phi(x)
    res = np.sum(v * v, axis=-1) / psi_squared(sys, params, x) + div_lambda_fd(phi, sys, x, step, order=4) + target
    return res / np.maximum(target, np.finfo(float).tiny) if relative else res
