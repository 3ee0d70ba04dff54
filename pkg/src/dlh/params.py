"""Parameters of one Hardy inequality instance."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .norms import NormVariant


class Variant(str, enum.Enum):
    SEMI = "semi"  # weighted inequality with the bracket norm
    DIST = "dist"  # weighted inequality with an extra ‖x‖^t factor
    UNWEIGHTED = "unweighted"  # ((N_1 − p)/p)^p with |x^(1)| or ‖x‖

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        aliases = {"seminorm": "semi", "distnorm": "dist", "bracket": "semi"}
        return cls(aliases.get(v, v))


# Norm used by the unweighted inequality's first form, 1/|x^(1)|^p.
BLOCK1 = "block1"


@dataclass(frozen=True)
class HardyParams:
    """(p, s, t, μ, variant, norm) for one inequality.

    ``norm`` is only consulted by the DIST variant (dist1 | dist2) and the
    UNWEIGHTED variant (block1 | dist1 | dist2).
    """

    p: float
    s: float = 0.0
    t: float = 0.0
    mu: tuple[float, ...] = field(default_factory=tuple)
    variant: Variant = Variant.SEMI
    norm: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        for name in ("p", "s", "t"):
            object.__setattr__(self, name, float(getattr(self, name)))
        default_norm = {Variant.SEMI: "bracket", Variant.DIST: "dist1", Variant.UNWEIGHTED: BLOCK1}
        norm = str(self.norm or default_norm[self.variant]).strip().lower()
        allowed = {Variant.SEMI: {"bracket"},
                   Variant.DIST: {"dist1", "dist2"},
                   Variant.UNWEIGHTED: {BLOCK1, "dist1", "dist2"}}[self.variant]
        if norm not in allowed:
            raise ValidationError(f"norm {norm!r} not valid for variant {self.variant.value}")
        object.__setattr__(self, "norm", norm)
        if not self.p > 1:
            raise ValidationError(f"p must exceed 1, got {self.p}")
        if self.variant is Variant.SEMI and self.t != 0:
            raise ValidationError("the semi-norm variant has t = 0")

    @property
    def dist_variant(self) -> NormVariant:
        return NormVariant.parse(self.norm)

    def mu_for(self, k: int) -> np.ndarray:
        """μ as an array of length k; an empty μ means all zeros."""
        if not self.mu:
            return np.zeros(k)
        if len(self.mu) != k:
            raise DimensionMismatch(f"mu has {len(self.mu)} entries, system has {k} blocks")
        return np.asarray(self.mu, dtype=float)

    def effective_t(self) -> float:
        return float(self.t) if self.variant is Variant.DIST else 0.0
