"""Central finite differences, used only as an independent oracle."""
from __future__ import annotations

import numpy as np

REL_STEP = 1e-5


def default_step(x: np.ndarray) -> np.ndarray:
    """Step 1e-5·(1 + |x|) per point, broadcast over coordinates."""
    return REL_STEP * (1.0 + np.linalg.norm(x, axis=-1, keepdims=True))


def gradient(f, x, step=None, order: int = 2) -> np.ndarray:
    """∇f at points ``x`` of shape (..., N); ``f`` maps (..., N) -> (...)."""
    x = np.asarray(x, dtype=float)
    h = default_step(x) if step is None else np.broadcast_to(np.asarray(step, float), x.shape[:-1] + (1,))
    n = x.shape[-1]
    g = np.empty(x.shape)
    for c in range(n):
        e = np.zeros(n)
        e[c] = 1.0
        d = h * e
        if order == 2:
            g[..., c] = (f(x + d) - f(x - d)) / (2.0 * h[..., 0])
        elif order == 4:
            g[..., c] = (-f(x + 2 * d) + 8 * f(x + d) - 8 * f(x - d) + f(x - 2 * d)) / (12.0 * h[..., 0])
        else:
            raise ValueError("order must be 2 or 4")
    return g


def divergence_weighted(v, x, weights, step=None, order: int = 2) -> np.ndarray:
    """Σ_c weights[..., c] · ∂_c v_c(x) for a vector field ``v`` mapping (..., N) -> (..., N)."""
    x = np.asarray(x, dtype=float)
    h = default_step(x) if step is None else np.broadcast_to(np.asarray(step, float), x.shape[:-1] + (1,))
    n = x.shape[-1]
    out = np.zeros(x.shape[:-1])
    for c in range(n):
        e = np.zeros(n)
        e[c] = 1.0
        d = h * e
        if order == 2:
            dc = (v(x + d)[..., c] - v(x - d)[..., c]) / (2.0 * h[..., 0])
        elif order == 4:
            dc = (-v(x + 2 * d)[..., c] + 8 * v(x + d)[..., c] - 8 * v(x - d)[..., c] + v(x - 2 * d)[..., c]) / (
                12.0 * h[..., 0]
            )
        else:
            raise ValueError("order must be 2 or 4")
        out = out + weights[..., c] * dc
    return out
