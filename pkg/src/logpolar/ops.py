"""Pointwise, pooling, dense, and loss primitives with exact adjoints.

Window pooling is non-overlapping by default (stride = window) with floor
semantics and no padding. Max-pool ties route the gradient to the first
window cell in row-major order; relu'(0) = 0.
"""

from __future__ import annotations

import numpy as np

from .conv import _im2col, as_pair, ensure_batched

__all__ = [
    "relu",
    "relu_backward",
    "max_pool",
    "max_pool_backward",
    "mean_pool",
    "mean_pool_backward",
    "dense",
    "dense_backward",
    "softmax",
    "softmax_cross_entropy",
    "softmax_cross_entropy_backward",
]


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(x, grad_output):
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(grad_output, dtype=np.float64)
    if g.shape != x.shape:
        raise ValueError(f"grad shape {g.shape} does not match input {x.shape}")
    return g * (x > 0.0)


def _pool_setup(x, size, stride):
    xb, batched = ensure_batched(x)
    kh, kw = as_pair(size, "pool size")
    sh, sw = as_pair(size if stride is None else stride, "pool stride")
    if kh < 1 or kw < 1 or sh < 1 or sw < 1:
        raise ValueError("pool size and stride must be positive")
    if xb.shape[1] < kh or xb.shape[2] < kw:
        raise ValueError(
            f"pool window {kh}x{kw} larger than input {xb.shape[1]}x{xb.shape[2]}"
        )
    ho = (xb.shape[1] - kh) // sh + 1
    wo = (xb.shape[2] - kw) // sw + 1
    return xb, batched, (kh, kw), (sh, sw), (ho, wo)


def max_pool(x, size, stride=None):
    xb, batched, (kh, kw), s, out_hw = _pool_setup(x, size, stride)
    cols = _im2col(xb, kh, kw, s, (1, 1), out_hw)
    out = cols.max(axis=(3, 4))
    return out if batched else out[0]


def max_pool_backward(x, grad_output, size, stride=None):
    xb, batched, (kh, kw), (sh, sw), (ho, wo) = _pool_setup(x, size, stride)
    g, _ = ensure_batched(grad_output)
    if g.shape != (xb.shape[0], ho, wo, xb.shape[3]):
        raise ValueError(f"grad_output shape {g.shape} does not match pooled output")
    cols = _im2col(xb, kh, kw, (sh, sw), (1, 1), (ho, wo))
    flat = cols.reshape(xb.shape[0], ho, wo, kh * kw, xb.shape[3])
    winner = flat.argmax(axis=3)  # first max in row-major window order
    grad_x = np.zeros_like(xb)
    for t in range(kh * kw):
        a, b = divmod(t, kw)
        grad_x[:, a : a + (ho - 1) * sh + 1 : sh, b : b + (wo - 1) * sw + 1 : sw, :] += (
            g * (winner == t)
        )
    return grad_x if batched else grad_x[0]


def mean_pool(x, size, stride=None):
    xb, batched, (kh, kw), s, out_hw = _pool_setup(x, size, stride)
    cols = _im2col(xb, kh, kw, s, (1, 1), out_hw)
    out = cols.mean(axis=(3, 4))
    return out if batched else out[0]


def mean_pool_backward(x, grad_output, size, stride=None):
    xb, batched, (kh, kw), (sh, sw), (ho, wo) = _pool_setup(x, size, stride)
    g, _ = ensure_batched(grad_output)
    if g.shape != (xb.shape[0], ho, wo, xb.shape[3]):
        raise ValueError(f"grad_output shape {g.shape} does not match pooled output")
    share = g / (kh * kw)
    grad_x = np.zeros_like(xb)
    for a in range(kh):
        for b in range(kw):
            grad_x[:, a : a + (ho - 1) * sh + 1 : sh, b : b + (wo - 1) * sw + 1 : sw, :] += share
    return grad_x if batched else grad_x[0]


def dense(x, weights, bias=None):
    """Affine map on feature rows: (N, F) @ (F, U) + bias."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ValueError(f"dense shapes incompatible: x {x.shape}, weights {w.shape}")
    out = x @ w
    if bias is not None:
        out = out + np.asarray(bias, dtype=np.float64)
    return out


def dense_backward(x, weights, grad_output, has_bias=False):
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    g = np.asarray(grad_output, dtype=np.float64)
    if g.shape != (x.shape[0], w.shape[1]):
        raise ValueError(f"grad_output shape {g.shape} does not match dense output")
    grad_x = g @ w.T
    grad_w = x.T @ g
    grad_b = g.sum(axis=0) if has_bias else None
    return grad_x, grad_w, grad_b


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_labels(logits, labels):
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2:
        raise ValueError(f"logits must be (N, K), got shape {logits.shape}")
    if labels.shape != (logits.shape[0],):
        raise ValueError(f"labels shape {labels.shape} does not match {logits.shape[0]} rows")
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise ValueError("label index out of range")
    return logits, labels.astype(np.int64)


def softmax_cross_entropy(logits, labels) -> float:
    """Mean negative log-likelihood of integer labels under softmax(logits)."""
    logits, labels = _check_labels(logits, labels)
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    picked = z[np.arange(len(labels)), labels]
    return float(np.mean(log_norm - picked))


def softmax_cross_entropy_backward(logits, labels):
    logits, labels = _check_labels(logits, labels)
    p = softmax(logits)
    p[np.arange(len(labels)), labels] -= 1.0
    return p / len(labels)
