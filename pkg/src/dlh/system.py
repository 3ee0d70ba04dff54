"""Operator structure: blocks, exponent matrix, dilations and homogeneous dimension.

Points of R^N are plain float arrays of shape ``(..., N)``; the block
partition x = (x^(1), ..., x^(k)) is carried by the :class:`LambdaSystem`
and recovered with :func:`split` / :func:`join`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    NegativeExponent,
    NonPositiveScale,
    NonTriangularAlpha,
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LambdaSystem:
    """Validated description of Δλ = Σ λ_i² Δ_{x^(i)}.

    Build instances with :func:`build_system`; the derived fields are filled
    there and never change afterwards.
    """

    k: int
    dims: tuple[int, ...]
    alpha: np.ndarray
    sigma: np.ndarray
    Q: float

    @property
    def N(self) -> int:
        return int(sum(self.dims))

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(o) for o in np.concatenate([[0], np.cumsum(self.dims)]))

    @property
    def slices(self) -> tuple[slice, ...]:
        o = self.offsets
        return tuple(slice(o[i], o[i + 1]) for i in range(self.k))

    @property
    def block_of_coord(self) -> np.ndarray:
        """Block index (0-based) of every coordinate."""
        return np.repeat(np.arange(self.k), self.dims)

    @property
    def coord_sigma(self) -> np.ndarray:
        """σ of the block each coordinate belongs to, shape (N,)."""
        return self.sigma[self.block_of_coord]

    @property
    def bracket_degree(self) -> float:
        """1 + Σ(σ_i − 1), the exponent scale used by the bracket norm."""
        return float(1.0 + np.sum(self.sigma - 1.0))

    @property
    def column_sums(self) -> np.ndarray:
        """Σ_i α_ij for each j, i.e. the exponent of |x^(j)| in ∏ λ_i."""
        return self.alpha.sum(axis=0)

    @property
    def is_grushin(self) -> bool:
        """k = 2 with λ = (1, |x^(1)|^α)."""
        return self.k == 2

    @property
    def grushin_alpha(self) -> float:
        return float(self.alpha[1, 0])

    def __repr__(self) -> str:
        rows = "; ".join(" ".join(f"{v:g}" for v in row) for row in self.alpha)
        return f"LambdaSystem(k={self.k}, dims={self.dims}, alpha=[{rows}], sigma={self.sigma.tolist()}, Q={self.Q:g})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LambdaSystem):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.alpha, other.alpha)

    def __hash__(self) -> int:
        return hash((self.dims, self.alpha.tobytes()))


def build_system(k: int, dims: Sequence[int], alpha) -> LambdaSystem:
    """Validate ``(k, dims, alpha)`` and derive σ and Q.

    ``alpha`` is the full k×k matrix; only its strictly lower triangle may be
    nonzero.  σ follows σ_1 = 1, σ_i = 1 + Σ_{j<i} α_ij σ_j.
    """
    if int(k) != k or k < 1:
        raise DimensionMismatch(f"k must be a positive integer, got {k!r}")
    k = int(k)
    dims = tuple(dims)
    if len(dims) != k:
        raise DimensionMismatch(f"expected {k} block dimensions, got {len(dims)}")
    if any(int(d) != d or d < 1 for d in dims):
        raise DimensionMismatch(f"block dimensions must be positive integers, got {dims}")
    dims = tuple(int(d) for d in dims)

    a = np.asarray(alpha, dtype=float)
    if a.ndim == 0 and k == 1:
        a = a.reshape(1, 1)
    if a.shape != (k, k):
        raise DimensionMismatch(f"alpha must be {k}x{k}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NegativeExponent("alpha entries must be finite")
    if np.any(a < 0):
        raise NegativeExponent("alpha entries must be non-negative")
    upper = np.triu(a)
    if np.any(upper != 0):
        i, j = np.argwhere(upper != 0)[0]
        raise NonTriangularAlpha(f"alpha[{i + 1},{j + 1}] = {a[i, j]} must vanish (j >= i)")

    sigma = np.ones(k)
    for i in range(1, k):
        sigma[i] = 1.0 + float(np.dot(a[i, :i], sigma[:i]))
    Q = float(np.dot(sigma, dims))
    return LambdaSystem(k=k, dims=dims, alpha=_frozen(a), sigma=_frozen(sigma), Q=Q)


def grushin(alpha: float, dims: Sequence[int] = (1, 1)) -> LambdaSystem:
    """Δ_x + |x|^{2α} Δ_y on R^{N_1} × R^{N_2}."""
    return build_system(2, dims, [[0.0, 0.0], [alpha, 0.0]])


def classical(n: int) -> LambdaSystem:
    return build_system(1, (n,), [[0.0]])


def conform(sys: LambdaSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != sys.N:
        raise DimensionMismatch(f"point must have trailing dimension {sys.N}, got shape {x.shape}")
    return x


def split(sys: LambdaSystem, x) -> list[np.ndarray]:
    """Blocks x^(1), ..., x^(k) as views of ``x``."""
    x = conform(sys, x)
    return [x[..., s] for s in sys.slices]


def join(sys: LambdaSystem, blocks: Sequence) -> np.ndarray:
    blocks = [np.atleast_1d(np.asarray(b, dtype=float)) for b in blocks]
    if len(blocks) != sys.k or any(b.shape[-1] != d for b, d in zip(blocks, sys.dims)):
        raise DimensionMismatch("block lengths do not match the system dims")
    lead = np.broadcast_shapes(*(b.shape[:-1] for b in blocks))
    return np.concatenate([np.broadcast_to(b, lead + b.shape[-1:]) for b in blocks], axis=-1)


def block_norms(sys: LambdaSystem, x) -> np.ndarray:
    """Euclidean norms |x^(j)|, shape (..., k)."""
    x = conform(sys, x)
    return np.stack([np.linalg.norm(x[..., s], axis=-1) for s in sys.slices], axis=-1)


def lambdas(sys: LambdaSystem, x) -> np.ndarray:
    """All λ_i(x) = ∏_j |x^(j)|^{α_ij}, shape (..., k); uses 0^0 = 1."""
    r = block_norms(sys, x)
    return np.prod(np.power(r[..., None, :], sys.alpha), axis=-1)


def lambda_eval(sys: LambdaSystem, i: int, x) -> np.ndarray | float:
    """λ_i(x) for the block label ``i`` in 1..k."""
    if not 1 <= i <= sys.k:
        raise IndexOutOfRange(f"block index {i} outside 1..{sys.k}")
    out = lambdas(sys, x)[..., i - 1]
    return float(out) if np.ndim(out) == 0 else out


def dilate(sys: LambdaSystem, r, x) -> np.ndarray:
    """δ_r x = (r^{σ_1} x^(1), ..., r^{σ_k} x^(k))."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise NonPositiveScale(f"dilation factor must be positive, got {r}")
    x = conform(sys, x)
    return x * np.power(r[..., None], sys.coord_sigma)


def homogeneous_dimension_alt(sys: LambdaSystem) -> float:
    """Q rearranged as N + Σ(σ_i − 1) N_i."""
    return float(sys.N + np.dot(sys.sigma - 1.0, sys.dims))
