"""Homogeneous norms attached to a Δλ-Laplacian.

Three norms are available:

* ``BRACKET``: [[x]] = (Σ_j ∏_{i≠j} λ_i² σ_j² |x^(j)|²)^{1/(2(1+Σ(σ_i−1)))}
* ``DIST1``:   ‖x‖ = (Σ_j |x^(j)|^{2∏_{i≠j}σ_i})^{1/(2∏σ_i)}
* ``DIST2``:   same with σ_j |x^(j)| inside each summand

All of them are δ_r-homogeneous of degree one.  Most quantities are
evaluated from logarithms of the summands so that points spanning many
orders of magnitude (as produced by the importance sampler) stay finite.
"""
from __future__ import annotations

import enum

import numpy as np
from scipy.special import logsumexp

from . import fd
from .errors import DegeneratePoint, NonPositiveEpsilon
from .system import LambdaSystem, block_norms, conform, lambdas

ZERO_BLOCK_TOL = 1e-8


class NormVariant(str, enum.Enum):
    BRACKET = "bracket"
    DIST1 = "dist1"
    DIST2 = "dist2"

    @classmethod
    def parse(cls, value) -> "NormVariant":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower())


def _xlogy(a, y):
    """a·log(y) with the convention 0·log 0 = 0 (so that 0^0 = 1)."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ly = np.log(y)
        return np.where(a == 0, 0.0, a * ly)


def bracket_exponents(sys: LambdaSystem) -> np.ndarray:
    """E[j, l]: power of |x^(l)| in the j-th summand of [[x]]^{2(1+Σ(σ_i−1))}.

    E[j, l] = 2 Σ_{i≠j} α_il + 2 δ_jl.
    """
    a = sys.alpha
    col = a.sum(axis=0)
    # Σ_{i≠j} α_il = column sum minus the j-th row
    off = col[None, :] - a
    return 2.0 * off + 2.0 * np.eye(sys.k)


def _log_bracket_terms(sys: LambdaSystem, r: np.ndarray) -> np.ndarray:
    """log of every summand of the bracket norm from block norms r (..., k)."""
    E = bracket_exponents(sys)
    logs = _xlogy(E, r[..., None, :]).sum(axis=-1)
    return logs + 2.0 * np.log(sys.sigma)


def bracket_norm(sys: LambdaSystem, x) -> np.ndarray:
    """[[x]]_λ evaluated directly from the λ_i."""
    x = conform(sys, x)
    r = block_norms(sys, x)
    lam2 = lambdas(sys, x) ** 2
    total = np.zeros(x.shape[:-1])
    for j in range(sys.k):
        others = np.prod(np.delete(lam2, j, axis=-1), axis=-1)
        total = total + others * sys.sigma[j] ** 2 * r[..., j] ** 2
    return total ** (1.0 / (2.0 * sys.bracket_degree))


def log_bracket_norm(sys: LambdaSystem, x) -> np.ndarray:
    x = conform(sys, x)
    terms = _log_bracket_terms(sys, block_norms(sys, x))
    with np.errstate(divide="ignore"):
        return logsumexp(terms, axis=-1) / (2.0 * sys.bracket_degree)


def bracket_norm_expanded(sys: LambdaSystem, x) -> np.ndarray:
    """[[x]]_λ via the pure monomial expansion Σ_j σ_j² ∏_l |x^(l)|^{E[j,l]}.

    Independent of :func:`bracket_norm`: it never forms the λ_i and works
    with logarithms of the monomials.
    """
    return np.exp(log_bracket_norm(sys, x))


def bracket_norm_gradient(sys: LambdaSystem, x) -> np.ndarray:
    """Analytic euclidean gradient of [[x]]_λ, shape (..., N).

    Blocks with |x^(l)| = 0 get a zero gradient when every monomial touching
    them has exponent > 1 (the derivative then vanishes); otherwise NaN.
    """
    x = conform(sys, x)
    r = block_norms(sys, x)
    E = bracket_exponents(sys)
    terms = _log_bracket_terms(sys, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        lse = logsumexp(terms, axis=-1, keepdims=True)
        w = np.exp(terms - lse)
        rho = np.exp(lse[..., 0] / (2.0 * sys.bracket_degree))
        coef = np.einsum("...j,jl->...l", w, E)
        g = np.empty(x.shape)
        for l, s in enumerate(sys.slices):
            rl = r[..., l]
            scale = rho * coef[..., l] / (2.0 * sys.bracket_degree) / np.where(rl > 0, rl * rl, 1.0)
            block = scale[..., None] * x[..., s]
            positive = E[:, l][E[:, l] > 0]
            at_zero = 0.0 if np.all(positive > 1.0) else np.nan
            g[..., s] = np.where((rl > 0)[..., None], block, at_zero)
    return g


def _dist_log_weights(sys: LambdaSystem, variant: NormVariant) -> np.ndarray:
    return np.log(sys.sigma) if variant is NormVariant.DIST2 else np.zeros(sys.k)


def dist_norm(sys: LambdaSystem, x, variant=NormVariant.DIST1) -> np.ndarray:
    """‖x‖_λ of the first or second distance form."""
    variant = NormVariant.parse(variant)
    if variant is NormVariant.BRACKET:
        return bracket_norm(sys, x)
    x = conform(sys, x)
    r = block_norms(sys, x)
    P = float(np.prod(sys.sigma))
    Pj = P / sys.sigma
    with np.errstate(divide="ignore"):
        logs = 2.0 * Pj * (np.log(r) + _dist_log_weights(sys, variant))
        return np.exp(logsumexp(logs, axis=-1) / (2.0 * P))


def log_dist_norm(sys: LambdaSystem, x, variant=NormVariant.DIST1) -> np.ndarray:
    variant = NormVariant.parse(variant)
    if variant is NormVariant.BRACKET:
        return log_bracket_norm(sys, x)
    x = conform(sys, x)
    r = block_norms(sys, x)
    P = float(np.prod(sys.sigma))
    with np.errstate(divide="ignore"):
        logs = 2.0 * (P / sys.sigma) * (np.log(r) + _dist_log_weights(sys, variant))
        return logsumexp(logs, axis=-1) / (2.0 * P)


def _check_eps(eps) -> float:
    eps = float(eps)
    if not eps > 0:
        raise NonPositiveEpsilon(f"epsilon must be positive, got {eps}")
    return eps


def regularized_lambdas(sys: LambdaSystem, x, eps) -> np.ndarray:
    """λ_i^ε(x) = ∏_j (|x^(j)|² + ε)^{α_ij/2}, shape (..., k)."""
    eps = _check_eps(eps)
    r = block_norms(sys, x)
    return np.prod(np.power(r[..., None, :] ** 2 + eps, sys.alpha / 2.0), axis=-1)


def _log_bracket_terms_eps(sys: LambdaSystem, r: np.ndarray, eps: float) -> np.ndarray:
    """log σ_j² |x^(j)|² ∏_{i≠j} λ_i^ε² for every j."""
    E = bracket_exponents(sys) - 2.0 * np.eye(sys.k)  # 2 Σ_{i≠j} α_il
    reg = 0.5 * (E * np.log(r[..., None, :] ** 2 + eps)).sum(axis=-1)
    with np.errstate(divide="ignore"):
        return reg + 2.0 * np.log(r) + 2.0 * np.log(sys.sigma)


def bracket_norm_regularized(sys: LambdaSystem, x, eps) -> np.ndarray:
    """[[x]]_{ε,λ}: the bracket norm with every λ_i replaced by λ_i^ε.

    Only the λ_i are regularized, so the value at x = 0 is 0.
    """
    eps = _check_eps(eps)
    x = conform(sys, x)
    terms = _log_bracket_terms_eps(sys, block_norms(sys, x), eps)
    with np.errstate(divide="ignore"):
        return np.exp(logsumexp(terms, axis=-1) / (2.0 * sys.bracket_degree))


def _dist_eps_log_w(sys: LambdaSystem, r: np.ndarray, eps: float, variant: NormVariant) -> np.ndarray:
    return np.log(r**2 + eps) + 2.0 * _dist_log_weights(sys, variant)


def dist_norm_regularized(sys: LambdaSystem, x, eps, variant=NormVariant.DIST1) -> np.ndarray:
    """‖x‖_{ε,λ} = (Σ_j w_j^{∏_{i≠j}σ_i})^{1/(2∏σ_i)}, strictly positive.

    w_j = |x^(j)|² + ε for DIST1 and σ_j²(|x^(j)|² + ε) for DIST2.
    """
    variant = NormVariant.parse(variant)
    eps = _check_eps(eps)
    if variant is NormVariant.BRACKET:
        return bracket_norm_regularized(sys, x, eps)
    x = conform(sys, x)
    r = block_norms(sys, x)
    P = float(np.prod(sys.sigma))
    logs = (P / sys.sigma) * _dist_eps_log_w(sys, r, eps, variant)
    return np.exp(logsumexp(logs, axis=-1) / (2.0 * P))


def evaluate(sys: LambdaSystem, x, variant=NormVariant.BRACKET, eps=None) -> np.ndarray:
    """Dispatch on ``variant``; ``eps`` selects the regularized form."""
    variant = NormVariant.parse(variant)
    if eps is None:
        return bracket_norm(sys, x) if variant is NormVariant.BRACKET else dist_norm(sys, x, variant)
    if variant is NormVariant.BRACKET:
        return bracket_norm_regularized(sys, x, eps)
    return dist_norm_regularized(sys, x, eps, variant)


def degenerate_mask(sys: LambdaSystem, x, tol: float = ZERO_BLOCK_TOL) -> np.ndarray:
    """True where some block is zero within tol·(1 + |x|)."""
    x = conform(sys, x)
    r = block_norms(sys, x)
    scale = 1.0 + np.linalg.norm(x, axis=-1)
    return np.any(r < tol * scale[..., None], axis=-1)


def euler_residual(sys: LambdaSystem, x, normop=NormVariant.BRACKET, fd_step=None, order: int = 4) -> np.ndarray:
    """Σ_i σ_i x^(i)·∇_{x^(i)}‖x‖ − ‖x‖ with a central-difference gradient.

    Fourth-order differences are the default: large exponents make the
    second-order truncation error visible at the 1e-6 level.

    ``normop`` is a :class:`NormVariant` or any callable (..., N) -> (...).
    """
    x = conform(sys, x)
    if np.any(degenerate_mask(sys, x)):
        raise DegeneratePoint("Euler relation requested at a point with a vanishing block")
    if callable(normop) and not isinstance(normop, (str, NormVariant)):
        f = normop
    else:
        variant = NormVariant.parse(normop)

        def f(y):
            return evaluate(sys, y, variant)

    g = fd.gradient(f, x, fd_step, order)
    return np.sum(sys.coord_sigma * x * g, axis=-1) - f(x)
