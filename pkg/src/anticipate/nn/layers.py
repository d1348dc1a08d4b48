"""Dense layers, activations, pooling, and the temporal Gaussian filter.

Everything here is cheap relative to the recurrent/convolutional kernels
and stays in NumPy regardless of the active kernel backend. All forward
passes are deterministic; paired ``*_backward`` functions implement the
exact analytic gradients verified by the finite-difference checker.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "dense_forward",
    "dense_backward",
    "relu",
    "relu_backward",
    "softmax",
    "l2_normalize_rows",
    "l2_normalize_rows_backward",
    "maxpool_rows",
    "maxpool_rows_backward",
    "gaussian_kernel",
    "gaussian_filter_columns",
    "glorot_uniform",
]


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine map ``y = W x + b`` with ``W`` shaped (out, in).

    ``x`` may be a single vector ``(in,)`` or a batch of rows ``(n, in)``.
    """
    if x.shape[-1] != w.shape[1]:
        raise ValueError(f"input size {x.shape[-1]} does not match weight shape {w.shape}")
    return x @ w.T + b


def dense_backward(x: np.ndarray, w: np.ndarray, d_y: np.ndarray):
    """Gradients of :func:`dense_forward`; returns ``(dx, dw, db)``."""
    if x.ndim == 1:
        dw = np.outer(d_y, x)
        db = d_y.copy()
    else:
        dw = d_y.T @ x
        db = d_y.sum(axis=0)
    return d_y @ w, dw, db


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, d_y: np.ndarray) -> np.ndarray:
    return d_y * (x > 0.0)


def softmax(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax (last axis) with max subtraction for stability."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def l2_normalize_rows(x: np.ndarray) -> np.ndarray:
    """Scale each row to unit Euclidean norm; all-zero rows stay zero."""
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    return x / safe


def l2_normalize_rows_backward(x: np.ndarray, d_y: np.ndarray) -> np.ndarray:
    """Gradient of row normalization: ``(dy - y * <dy, y>) / ||x||``."""
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    y = x / safe
    inner = (d_y * y).sum(axis=-1, keepdims=True)
    dx = (d_y - y * inner) / safe
    return np.where(norms > 0.0, dx, 0.0)


def maxpool_rows(x: np.ndarray) -> np.ndarray:
    """Max over non-overlapping pairs of rows; an odd final row passes through."""
    s = x.shape[0]
    pairs = s // 2
    out = np.empty((s - pairs,) + x.shape[1:])
    if pairs:
        out[:pairs] = np.maximum(x[0 : 2 * pairs : 2], x[1 : 2 * pairs : 2])
    if s % 2:
        out[-1] = x[-1]
    return out


def maxpool_rows_backward(x: np.ndarray, d_y: np.ndarray) -> np.ndarray:
    """Route pooled gradients back to each window's max (first row on ties)."""
    s = x.shape[0]
    pairs = s // 2
    dx = np.zeros_like(x)
    if pairs:
        first = x[0 : 2 * pairs : 2]
        second = x[1 : 2 * pairs : 2]
        take_first = first >= second
        dx[0 : 2 * pairs : 2] = d_y[:pairs] * take_first
        dx[1 : 2 * pairs : 2] = d_y[:pairs] * ~take_first
    if s % 2:
        dx[-1] = d_y[-1]
    return dx


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized Gaussian taps truncated at radius ``ceil(3 * sigma)``."""
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_filter_columns(y: np.ndarray, sigma: float) -> np.ndarray:
    """Smooth each column with a unit-sum Gaussian, replicating edge rows.

    Replicate padding keeps constant columns exactly constant, so the
    filter never attenuates values near the boundaries.
    """
    kernel = gaussian_kernel(sigma)
    radius = (kernel.size - 1) // 2
    padded = np.concatenate(
        (np.repeat(y[:1], radius, axis=0), y, np.repeat(y[-1:], radius, axis=0)), axis=0
    )
    s = y.shape[0]
    out = np.zeros_like(y, dtype=np.float64)
    for d, weight in enumerate(kernel):
        out += weight * padded[d : d + s]
    return out


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Uniform init in [-a, a] with ``a = sqrt(6 / (fan_in + fan_out))``.

    For 2-D shapes the two dims are the fans; for conv kernels (K, Cin, W)
    fan_in = Cin * W and fan_out = K * W.
    """
    if len(shape) == 2:
        fan_in, fan_out = shape[1], shape[0]
    elif len(shape) == 3:
        k, cin, width = shape
        fan_in, fan_out = cin * width, k * width
    else:
        fan_in = fan_out = shape[0]
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)
