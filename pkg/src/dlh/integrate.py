"""Seeded Monte-Carlo integration and end-to-end inequality checks.

Samples are generated in fixed-size chunks.  Chunk ``c`` draws from the
stream ``SeedSequence([seed, c])`` and chunk statistics are merged in chunk
order, so results are bit-identical for any number of worker threads.

Two samplers are provided.  :class:`Uniform` draws uniformly from the
domain.  :class:`RadialPower` mixes a uniform draw with a dilation-based
draw z = δ_{Rρ}(w), w uniform in [−1, 1]^N and ρ a power law on
[ρ_min, 1]; its density behaves like m(z)^{−a} near the origin, where
m(z) = max_c |z_c|^{1/σ_c} is the homogeneous sup-norm, and is known in
closed form, so importance weights are exact.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .calculus import BlockVectorField, ScalarField, Support, div_lambda, grad_lambda
from .errors import (
    ConditionsNotMet,
    DimensionMismatch,
    NonIntegrableSample,
    NonPositiveDivergence,
    ValidationError,
)
from .hardy import (
    ConditionReport,
    Mode,
    check_conditions,
    constant_numerator,
    hardy_constant,
    log_weight_lhs_density,
    log_weight_psi,
)
from .params import HardyParams, Variant
from .system import LambdaSystem, block_norms, dilate

CHUNK = 1 << 15
MIN_SAMPLES = 1000
MAX_REJECT_FRACTION = 1e-3
Z_THRESHOLD = 3.0


def worker_count(workers: Optional[int] = None) -> int:
    """Explicit ``workers`` or ``DLH_THREADS`` (0 or unset = one per CPU)."""
    if workers is None:
        try:
            workers = int(os.environ.get("DLH_THREADS", "0"))
        except ValueError:
            workers = 0
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box (``lo``, ``hi``) or euclidean ball (``center``, ``radius``)."""

    shape: str
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None

    @classmethod
    def box(cls, lo, hi) -> "Domain":
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        if lo.shape != hi.shape or lo.ndim != 1 or np.any(hi <= lo):
            raise ValidationError("box needs lo < hi coordinatewise")
        return cls("box", lo=lo, hi=hi)

    @classmethod
    def ball(cls, center, radius) -> "Domain":
        center = np.asarray(center, float)
        if center.ndim != 1 or not radius > 0:
            raise ValidationError("ball needs a center vector and positive radius")
        return cls("ball", center=center, radius=float(radius))

    @property
    def dim(self) -> int:
        return int((self.lo if self.shape == "box" else self.center).shape[0])

    @property
    def volume(self) -> float:
        if self.shape == "box":
            return float(np.prod(self.hi - self.lo))
        n = self.dim
        return float(math.pi ** (n / 2) / math.gamma(n / 2 + 1) * self.radius**n)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.shape == "box":
            return self.lo, self.hi
        return self.center - self.radius, self.center + self.radius

    @property
    def contains_origin(self) -> bool:
        return bool(self.contains(np.zeros(self.dim)))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        if self.shape == "box":
            return np.all((x > self.lo) & (x < self.hi), axis=-1)
        return np.linalg.norm(x - self.center, axis=-1) < self.radius

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.shape == "box":
            return self.lo + (self.hi - self.lo) * rng.random((n, self.dim))
        d = rng.standard_normal((n, self.dim))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        rad = self.radius * rng.random(n) ** (1.0 / self.dim)
        return self.center + rad[:, None] * d

    def dilated(self, sys: LambdaSystem, r: float) -> "Domain":
        """δ_r(Ω) for a box domain."""
        if self.shape != "box":
            raise ValidationError("only box domains can be dilated exactly")
        scale = np.power(float(r), sys.coord_sigma)
        return Domain.box(self.lo * scale, self.hi * scale)

    def describe(self) -> str:
        if self.shape == "box":
            return "box:" + ",".join(f"{v:.15g}" for v in self.lo) + ":" + ",".join(f"{v:.15g}" for v in self.hi)
        return "ball:" + ",".join(f"{v:.15g}" for v in self.center) + f":{self.radius:.15g}"


# ---------------------------------------------------------------------------
# samplers


class SamplerKind(str, enum.Enum):
    UNIFORM = "uniform"
    RADIAL = "radial"


@dataclass(frozen=True)
class Uniform:
    kind = SamplerKind.UNIFORM

    def describe(self) -> str:
        return "uniform"


@dataclass(frozen=True)
class RadialPower:
    """Origin-centred importance sampler with density ∝ m(z)^{−a} near 0.

    ``uniform_weight`` is the share of plain uniform draws from the domain
    (keeps the density bounded below on the whole domain).  ``log10_rmin``
    truncates the power law at ρ_min·R; by default ρ_min = 10^{−150/σ_max}
    so squared coordinates stay normal doubles.
    """

    a: float
    uniform_weight: float = 0.3
    log10_rmin: Optional[float] = None
    kind = SamplerKind.RADIAL

    def describe(self) -> str:
        return f"radial(a={self.a:.15g},w={self.uniform_weight:.15g})"


def _homogeneous_sup(sys: LambdaSystem, z: np.ndarray) -> np.ndarray:
    """log m(z) = max_c log|z_c|/σ_c."""
    with np.errstate(divide="ignore"):
        return np.max(np.log(np.abs(z)) / sys.coord_sigma, axis=-1)


def _log_power_mass(a: float, u: np.ndarray) -> np.ndarray:
    """log ∫_{e^{−u}}^1 ρ^{−a−1} dρ = log((e^{au} − 1)/a), or log u when a = 0 (u ≥ 0)."""
    with np.errstate(divide="ignore"):
        if a == 0:
            return np.log(u)
        t = a * u
        small = np.log(np.expm1(np.minimum(t, 30.0)))
        large = t + np.log1p(-np.exp(-np.maximum(t, 30.0)))
        return np.where(t > 30, large, small) - math.log(a)


class _Draw:
    """Draws one chunk of points together with log q(z)."""

    def __init__(self, sys: Optional[LambdaSystem], domain: Domain, spec):
        self.domain = domain
        self.spec = spec
        self.log_vol = math.log(domain.volume)
        if isinstance(spec, RadialPower):
            if sys is None:
                raise ValidationError("the radial sampler needs the operator system")
            if not 0 <= spec.a < sys.Q:
                raise ValidationError(f"sampler exponent a={spec.a} must lie in [0, Q={sys.Q})")
            if not 0 <= spec.uniform_weight < 1:
                raise ValidationError("uniform_weight must lie in [0, 1)")
            self.sys = sys
            lo, hi = domain.bounds
            reach = np.maximum(np.abs(lo), np.abs(hi))
            self.log_R = float(np.max(np.log(reach) / sys.coord_sigma))
            self.beta = sys.Q - spec.a
            log10_rmin = spec.log10_rmin if spec.log10_rmin is not None else -150.0 / float(np.max(sys.sigma))
            self.log_rmin = log10_rmin * math.log(10.0)
            self.rmin_beta = math.exp(self.beta * self.log_rmin)
            self.log_const = (
                -sys.Q * self.log_R - sys.N * math.log(2.0) + math.log(self.beta) - math.log1p(-self.rmin_beta)
            )

    def log_q(self, z: np.ndarray, inside: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            log_u = np.where(inside, -self.log_vol, -np.inf)
        if not isinstance(self.spec, RadialPower):
            return log_u
        m = _homogeneous_sup(self.sys, z) - self.log_R
        m0 = np.maximum(m, self.log_rmin)
        log_p = np.where(m <= 0, self.log_const + _log_power_mass(self.spec.a, -m0), -np.inf)
        w = self.spec.uniform_weight
        with np.errstate(divide="ignore"):
            return np.logaddexp(math.log(w) + log_u if w > 0 else -np.inf, math.log1p(-w) + log_p)

    def points(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if not isinstance(self.spec, RadialPower):
            return self.domain.sample(rng, n)
        pick_uniform = rng.random(n) < self.spec.uniform_weight
        z = np.empty((n, self.domain.dim))
        nu = int(pick_uniform.sum())
        z[pick_uniform] = self.domain.sample(rng, nu)
        npow = n - nu
        w = rng.uniform(-1.0, 1.0, (npow, self.domain.dim))
        u = rng.random(npow)
        log_rho = np.log(self.rmin_beta + u * (1.0 - self.rmin_beta)) / self.beta
        scale = np.exp(self.sys.coord_sigma * (self.log_R + log_rho)[:, None])
        z[~pick_uniform] = w * scale
        return z


# ---------------------------------------------------------------------------
# estimates


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    std_error: float
    samples: int
    seed: int
    rejected: int = 0

    def __str__(self) -> str:
        return f"{self.value:.15g} ± {self.std_error:.3g} (n={self.samples}, seed={self.seed})"


@dataclass
class _Stats:
    """Running mean/co-moment accumulator (Chan et al. pairwise merge)."""

    n: int = 0
    mean: Optional[np.ndarray] = None
    comom: Optional[np.ndarray] = None
    rejected: int = 0

    @classmethod
    def of(cls, values: np.ndarray, rejected: int = 0) -> "_Stats":
        n = values.shape[1]
        mean = values.mean(axis=1)
        d = values - mean[:, None]
        return cls(n, mean, d @ d.T, rejected)

    def merge(self, other: "_Stats") -> "_Stats":
        if self.n == 0:
            return other
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        comom = self.comom + other.comom + np.outer(delta, delta) * (self.n * other.n / n)
        return _Stats(n, mean, comom, self.rejected + other.rejected)

    def cov_of_mean(self) -> np.ndarray:
        return self.comom / (self.n - 1) / self.n


def _degenerate_rows(sys: Optional[LambdaSystem], z: np.ndarray) -> np.ndarray:
    if sys is None:
        return np.all(z == 0, axis=-1)
    return np.any(block_norms(sys, z) == 0, axis=-1)


def run_chunks(
    contributions: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    domain: Domain,
    sampler,
    n: int,
    seed: int,
    sys: Optional[LambdaSystem] = None,
    workers: Optional[int] = None,
) -> _Stats:
    """Evaluate per-sample contributions chunk by chunk and merge statistics.

    ``contributions(z, inside, log_q)`` returns an array (m, len(z)) of
    f_j(z)·1_Ω(z)/q(z) for m integrands sharing the same samples.
    """
    if n < MIN_SAMPLES:
        raise ValidationError(f"need at least {MIN_SAMPLES} samples, got {n}")
    if sys is not None and domain.dim != sys.N:
        raise DimensionMismatch(f"domain has dimension {domain.dim}, system has N={sys.N}")
    draw = _Draw(sys, domain, sampler)
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])

    def one(c: int) -> _Stats:
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), c]))
        size = sizes[c]
        z = draw.points(rng, size)
        bad = _degenerate_rows(sys, z)
        rejected = 0
        while bad.any():
            rejected += int(bad.sum())
            if rejected > max(1, MAX_REJECT_FRACTION * size):
                break
            z[bad] = draw.points(rng, int(bad.sum()))
            bad = _degenerate_rows(sys, z)
        inside = domain.contains(z)
        values = contributions(z, inside, draw.log_q(z, inside))
        if not np.all(np.isfinite(values)):
            idx = int(np.argwhere(~np.all(np.isfinite(values), axis=0))[0, 0])
            raise NonIntegrableSample(f"integrand is not finite at sampled point {z[idx].tolist()}")
        return _Stats.of(np.atleast_2d(values), rejected)

    nw = min(worker_count(workers), len(sizes))
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(c) for c in range(len(sizes))]
    total = _Stats()
    for part in parts:
        total = total.merge(part)
    if total.rejected > MAX_REJECT_FRACTION * n:
        raise NonIntegrableSample(f"{total.rejected} of {n} samples fell on the degenerate set")
    return total


def _estimate(stats: _Stats, j: int, seed: int) -> IntegralEstimate:
    var = max(float(stats.cov_of_mean()[j, j]), 0.0)
    return IntegralEstimate(float(stats.mean[j]), math.sqrt(var), stats.n, int(seed), stats.rejected)


def _field_log_abs(field: ScalarField, z: np.ndarray) -> np.ndarray:
    if field.log_evaluator is not None:
        return field.log_evaluator(z)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(field(z)))


def _field_log_grad_lambda(field: ScalarField, sys: LambdaSystem, z: np.ndarray) -> np.ndarray:
    if field.log_grad_norm is not None:
        return field.log_grad_norm(sys, z)
    with np.errstate(divide="ignore"):
        return np.log(np.linalg.norm(grad_lambda(field, sys, z), axis=-1))


def mc_integrate(
    density: ScalarField | Callable,
    domain: Domain,
    sampler=None,
    n: int = 100_000,
    seed: int = 0,
    *,
    sys: Optional[LambdaSystem] = None,
    workers: Optional[int] = None,
) -> IntegralEstimate:
    """∫_Ω density dx by (importance-weighted) Monte Carlo."""
    sampler = Uniform() if sampler is None else sampler
    field = density if isinstance(density, ScalarField) else ScalarField(density)

    def contributions(z, inside, log_q):
        out = np.zeros(len(z))
        if inside.any():
            zi = z[inside]
            if field.log_evaluator is not None:
                sign = 1.0
                lf = field.log_evaluator(zi)
            else:
                f = field(zi)
                sign = np.sign(f)
                with np.errstate(divide="ignore"):
                    lf = np.log(np.abs(f))
            with np.errstate(invalid="ignore"):
                out[inside] = sign * np.exp(lf - log_q[inside])
            out[inside] = np.where(np.isneginf(lf), 0.0, out[inside])
        return out[None, :]

    stats = run_chunks(contributions, domain, sampler, n, seed, sys, workers)
    return _estimate(stats, 0, seed)


# ---------------------------------------------------------------------------
# test functions


def bump(center, radius: float, sys: Optional[LambdaSystem] = None) -> ScalarField:
    """u(x) = exp(−1/(1−ρ²)) for ρ = |x − center|/radius < 1, else 0."""
    center = np.asarray(center, dtype=float)
    if not radius > 0:
        raise ValidationError("bump radius must be positive")
    if sys is not None and center.shape != (sys.N,):
        raise DimensionMismatch(f"bump center must have {sys.N} coordinates")
    r2 = float(radius) ** 2

    def rho2(x):
        return np.sum((x - center) ** 2, axis=-1) / r2

    def value(x):
        q = rho2(x)
        inside = q < 1
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(inside, np.exp(-1.0 / np.where(inside, 1.0 - q, 1.0)), 0.0)

    def log_value(x):
        q = rho2(x)
        inside = q < 1
        return np.where(inside, -1.0 / np.where(inside, 1.0 - q, 1.0), -np.inf)

    def gradient(x):
        q = rho2(x)
        inside = q < 1
        g = 1.0 - np.where(inside, q, 0.0)
        with np.errstate(under="ignore"):
            factor = np.where(inside, -2.0 * np.exp(-1.0 / g) / (r2 * g * g), 0.0)
        return factor[..., None] * (x - center)

    return ScalarField(value, gradient, Support(center, float(radius), "ball"), log_value, name="bump")


def zero_field() -> ScalarField:
    return ScalarField(lambda x: np.zeros(np.shape(x)[:-1]), lambda x: np.zeros(np.shape(x)), name="zero")


def compose_dilation(field: ScalarField, sys: LambdaSystem, r: float) -> ScalarField:
    """v(x) = u(δ_r x); ∇_λ v(x) = r (∇_λ u)(δ_r x)."""
    r = float(r)
    scale = np.power(r, sys.coord_sigma)

    def value(x):
        return field(dilate(sys, r, x))

    def gradient(x):
        return scale * field.grad(dilate(sys, r, x))

    log_value = None if field.log_evaluator is None else (lambda x: field.log_evaluator(dilate(sys, r, x)))
    return ScalarField(value, gradient, None, log_value, name=f"{field.name}∘δ_{r:g}")


# ---------------------------------------------------------------------------
# inequality reports


class Verdict(str, enum.Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class InequalityReport:
    """constant·lhs ≤ rhs tested with a paired Monte-Carlo estimate.

    ``margin_se`` is the standard error of the per-sample difference
    rhs_i − constant·lhs_i (both sides share the samples).
    """

    constant: float
    lhs: IntegralEstimate
    rhs: IntegralEstimate
    margin: float
    margin_se: float
    z_score: float
    verdict: Verdict
    applicable: bool = True
    label: str = ""
    conditions: Optional[ConditionReport] = None

    def fields(self) -> dict:
        return {
            "constant": self.constant,
            "lhs": self.lhs.value,
            "lhs_se": self.lhs.std_error,
            "rhs": self.rhs.value,
            "rhs_se": self.rhs.std_error,
            "margin": self.margin,
            "margin_se": self.margin_se,
            "z": self.z_score,
            "verdict": self.verdict.value,
            "applicable": self.applicable,
            "samples": self.lhs.samples,
            "seed": self.lhs.seed,
            "rejected": self.lhs.rejected,
        }


def verdict_for(z: float) -> Verdict:
    if z > Z_THRESHOLD:
        return Verdict.HOLDS
    if z < -Z_THRESHOLD:
        return Verdict.VIOLATED
    return Verdict.INCONCLUSIVE


def _report(stats: _Stats, constant: float, seed: int, **extra) -> InequalityReport:
    lhs, rhs = _estimate(stats, 0, seed), _estimate(stats, 1, seed)
    cov = stats.cov_of_mean()
    var = cov[1, 1] - 2 * constant * cov[0, 1] + constant**2 * cov[0, 0]
    se = math.sqrt(max(float(var), 0.0))
    margin = rhs.value - constant * lhs.value
    if se > 0:
        z = margin / se
    else:
        z = 0.0 if margin == 0 else math.copysign(math.inf, margin)
    return InequalityReport(constant, lhs, rhs, margin, se, z, verdict_for(z), **extra)


def _support_mask(u: ScalarField, z: np.ndarray, inside: np.ndarray) -> np.ndarray:
    if u.support is None:
        return inside
    return inside & u.support.contains(z)


def default_sampler(sys: LambdaSystem, params: HardyParams, domain: Domain):
    """Radial sampler with a = s + t (singularity order of the LHS weight) when Ω contains 0."""
    if not domain.contains_origin:
        return Uniform()
    a = params.p if params.variant is Variant.UNWEIGHTED else params.s + params.effective_t()
    a = min(max(a, 0.0), 0.95 * sys.Q)
    return RadialPower(a)


def verify_inequality(
    sys: LambdaSystem,
    params: HardyParams,
    u: ScalarField,
    domain: Domain,
    n: int = 1_000_000,
    seed: int = 0,
    *,
    sampler=None,
    mode=Mode.VERBATIM,
    index: str = "column",
    override: bool = False,
    workers: Optional[int] = None,
) -> InequalityReport:
    """Estimate both sides of the inequality selected by ``params`` and compare."""
    report = check_conditions(sys, params, mode, index)
    if not report.overall and not override:
        raise ConditionsNotMet(report)
    constant = hardy_constant(sys, params)
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

    stats = run_chunks(contributions, domain, sampler, n, seed, sys, workers)
    return _report(stats, constant, seed, applicable=constant_numerator(sys, params) > 0, conditions=report)


def lemma_check(
    sys: LambdaSystem,
    h: BlockVectorField,
    u: ScalarField,
    p: float,
    domain: Domain,
    n: int = 1_000_000,
    seed: int = 0,
    *,
    sampler=None,
    workers: Optional[int] = None,
) -> InequalityReport:
    """∫|u|^p div_λ h ≤ p^p ∫ |h|^p/(div_λ h)^{p−1} |∇_λ u|^p.

    Reported as constant·lhs ≤ rhs with constant = p^{−p}.
    """
    sampler = Uniform() if sampler is None else sampler

    def contributions(z, inside, log_q):
        out = np.zeros((2, len(z)))
        mask = _support_mask(u, z, inside)
        if mask.any():
            zm, lq = z[mask], log_q[mask]
            div = div_lambda(h, sys, zm)
            if np.any(~(div > 0)):
                raise NonPositiveDivergence("div_λ h is not positive at a sampled point")
            hn = np.linalg.norm(h(zm), axis=-1)
            lu = _field_log_abs(u, zm)
            lg = _field_log_grad_lambda(u, sys, zm)
            with np.errstate(divide="ignore", invalid="ignore"):
                out[0, mask] = np.where(np.isneginf(lu), 0.0, np.exp(p * lu + np.log(div) - lq))
                lr = p * np.log(hn) - (p - 1) * np.log(div) + p * lg - lq
                out[1, mask] = np.where(np.isneginf(lg) | (hn == 0), 0.0, np.exp(lr))
        return out

    stats = run_chunks(contributions, domain, sampler, n, seed, sys, workers)
    return _report(stats, float(p) ** (-p), seed, label="lemma")
