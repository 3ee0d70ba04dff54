"""Admissibility conditions, weights and explicit constants of the Hardy inequalities.

Three families are covered (see :class:`~dlh.params.Variant`):

SEMI        ((Q − s + Σσ_iμ_i)/p)^p ∫ ∏|x^(i)|^{μ_i}/[[x]]^s |u|^p ≤ ∫ ψ |∇_λ u|^p
DIST        ((Q − s − t + Σσ_iμ_i)/p)^p ∫ ∏|x^(i)|^{μ_i}/(‖x‖^t [[x]]^s) |u|^p ≤ ∫ ψ |∇_λ u|^p
UNWEIGHTED  ((N_1 − p)/p)^p ∫ |u|^p/|x^(1)|^p (or /‖x‖^p) ≤ ∫ |∇_λ u|^p
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePoint
from .norms import NormVariant, _xlogy, log_bracket_norm, log_dist_norm
from .params import BLOCK1, HardyParams, Variant
from .system import LambdaSystem, block_norms, conform


class Mode(str, enum.Enum):
    VERBATIM = "verbatim"
    RELAXED = "relaxed"

    @classmethod
    def parse(cls, value) -> "Mode":
        return value if isinstance(value, cls) else cls(str(value).strip().lower())


@dataclass(frozen=True)
class ConditionRecord:
    i: int  # block label, 0 for conditions not tied to one block
    label: str
    lhs: float
    rhs: float
    satisfied: bool


@dataclass(frozen=True)
class ConditionReport:
    overall: bool
    records: tuple[ConditionRecord, ...]
    mode: Mode
    index: str = "column"
    variant: Variant = Variant.SEMI
    notes: tuple[str, ...] = field(default_factory=tuple)

    def lines(self) -> list[str]:
        out = [
            f"variant = {self.variant.value}",
            f"mode = {self.mode.value}" + ("" if self.mode is Mode.VERBATIM else "  (relaxed reading)"),
            f"index = {self.index}",
        ]
        for r in self.records:
            verdict = "pass" if r.satisfied else "FAIL"
            out.append(f"condition[{r.i}] {r.label}: lhs = {r.lhs:.15g} rhs = {r.rhs:.15g} -> {verdict}")
        out.extend(f"note: {n}" for n in self.notes)
        out.append(f"overall = {'pass' if self.overall else 'fail'}")
        return out


def _exponent_set(sys: LambdaSystem, i: int, mode: Mode, index: str) -> np.ndarray:
    """{α_1i, ..., α_ki, 1} (column i) or the row-i reading; RELAXED drops zeros."""
    vals = sys.alpha[:, i] if index == "column" else sys.alpha[i, :]
    vals = np.append(vals, 1.0)
    if mode is Mode.RELAXED:
        vals = vals[vals != 0]
    return vals


def check_conditions(sys: LambdaSystem, params: HardyParams, mode=Mode.VERBATIM, index: str = "column") -> ConditionReport:
    """Evaluate every admissibility inequality literally.

    ``index`` chooses how min{α_1i, ..., α_ki, 1} is read: ``"column"`` takes
    the exponents of |x^(i)| across all λ_j, ``"row"`` the exponents inside
    λ_i.  Neither reading is privileged; the report records the choice.
    """
    mode = Mode.parse(mode)
    if index not in ("column", "row"):
        raise ValueError("index must be 'column' or 'row'")
    p, s = params.p, params.s
    records: list[ConditionRecord] = []
    notes: list[str] = []

    if params.variant is Variant.UNWEIGHTED:
        n1 = sys.dims[0]
        records.append(ConditionRecord(0, "N_1 > p", float(n1), p, n1 > p))
        records.append(ConditionRecord(0, "p > 1", p, 1.0, p > 1))
        return ConditionReport(all(r.satisfied for r in records), tuple(records), mode, index, params.variant)

    mu = params.mu_for(sys.k)
    t = params.effective_t()
    lead = s + t
    label = "s + t < N_1 + mu_1" if params.variant is Variant.DIST else "s < N_1 + mu_1"
    records.append(ConditionRecord(0, label, lead, sys.dims[0] + mu[0], lead < sys.dims[0] + mu[0]))
    for i in range(sys.k):
        m = float(np.min(_exponent_set(sys, i, mode, index)))
        lhs = -p * m + s + (t / sys.sigma[i] if params.variant is Variant.DIST else 0.0)
        rhs = sys.dims[i] + mu[i]
        text = "-p min{...} + s" + (" + t/sigma_i" if params.variant is Variant.DIST else "") + " < N_i + mu_i"
        records.append(ConditionRecord(i + 1, text, float(lhs), float(rhs), bool(lhs < rhs)))
    if mode is Mode.RELAXED:
        notes.append("relaxed: min taken over nonzero exponents and 1")
    if constant_numerator(sys, params) <= 0:
        notes.append("constant numerator is not positive; constant reported as 0")
    return ConditionReport(all(r.satisfied for r in records), tuple(records), mode, index, params.variant, tuple(notes))


def constant_numerator(sys: LambdaSystem, params: HardyParams) -> float:
    if params.variant is Variant.UNWEIGHTED:
        return float(sys.dims[0] - params.p)
    mu = params.mu_for(sys.k)
    return float(sys.Q - params.s - params.effective_t() + np.dot(sys.sigma, mu))


def is_applicable(sys: LambdaSystem, params: HardyParams) -> bool:
    return constant_numerator(sys, params) > 0


def hardy_constant(sys: LambdaSystem, params: HardyParams) -> float:
    """(numerator/p)^p, or 0.0 when the numerator is not positive."""
    num = constant_numerator(sys, params)
    if num <= 0:
        return 0.0
    return float((num / params.p) ** params.p)


def _raise_if_nonfinite(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise DegeneratePoint(f"{what} is singular at a requested point")
    return values


def log_weight_psi(sys: LambdaSystem, params: HardyParams, x) -> np.ndarray:
    """log ψ; −inf where ψ vanishes, DegeneratePoint where it blows up."""
    x = conform(sys, x)
    if params.variant is Variant.UNWEIGHTED:
        return np.zeros(x.shape[:-1])
    r = block_norms(sys, x)
    mu = params.mu_for(sys.k)
    D = sys.bracket_degree
    out = -_xlogy(params.p * sys.column_sums - mu, r).sum(axis=-1)
    power = params.p * D - params.s
    if power != 0:
        out = out + power * log_bracket_norm(sys, x)
    t = params.effective_t()
    if t != 0:
        out = out - t * log_dist_norm(sys, x, params.dist_variant)
    with np.errstate(invalid="ignore"):
        if np.any(np.isnan(out)) or np.any(np.isposinf(out)):
            raise DegeneratePoint("ψ is singular at a requested point")
    return out


def weight_psi(sys: LambdaSystem, params: HardyParams, x) -> np.ndarray:
    """ψ(x), the weight on |∇_λ u|^p (identically 1 for UNWEIGHTED)."""
    return np.exp(log_weight_psi(sys, params, x))


def log_weight_lhs_density(sys: LambdaSystem, params: HardyParams, x) -> np.ndarray:
    x = conform(sys, x)
    r = block_norms(sys, x)
    if params.variant is Variant.UNWEIGHTED:
        if params.norm == BLOCK1:
            with np.errstate(divide="ignore"):
                out = -params.p * np.log(r[..., 0])
        else:
            out = -params.p * log_dist_norm(sys, x, NormVariant.parse(params.norm))
    else:
        mu = params.mu_for(sys.k)
        if np.any((r == 0) & (mu < 0)):
            raise DegeneratePoint("zero block raised to a negative power μ_i")
        out = _xlogy(mu, r).sum(axis=-1)
        if params.s != 0:
            out = out - params.s * log_bracket_norm(sys, x)
        t = params.effective_t()
        if t != 0:
            out = out - t * log_dist_norm(sys, x, params.dist_variant)
    if np.any(np.isposinf(out)) or np.any(np.isnan(out)):
        raise DegeneratePoint("LHS weight is singular at a requested point")
    return out


def weight_lhs_density(sys: LambdaSystem, params: HardyParams, x) -> np.ndarray:
    """Factor multiplying |u|^p on the left-hand side."""
    return np.exp(log_weight_lhs_density(sys, params, x))
