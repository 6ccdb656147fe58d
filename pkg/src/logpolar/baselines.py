"""Comparison operators: dilated convolution and square-shared convolution.

Dilated convolution spaces the k x k kernel taps by a dilation rate,
reading (k-1)*rate + 1 input cells per axis while keeping k^2 parameters.
Square-shared convolution tiles a k x k kernel into (k/p)^2 equal square
blocks of side p; all positions inside a block share one parameter. The
sharing is uniform (no population normalization and no separate center
weight), which is the deliberate contrast with the log-polar operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conv import ConvKernel, as_pair, conv2d_raw, conv2d_raw_backward

__all__ = [
    "DilatedConfig",
    "SquareShareConfig",
    "dilated_conv2d",
    "dilated_conv2d_backward",
    "expand_square_weights",
    "square_share_conv2d",
    "square_share_conv2d_backward",
]


@dataclass(frozen=True)
class DilatedConfig:
    kernel_size: int
    dilation: int = 1
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)

    def __post_init__(self):
        object.__setattr__(self, "stride", as_pair(self.stride, "stride"))
        object.__setattr__(self, "padding", as_pair(self.padding, "padding"))
        if self.kernel_size < 1:
            raise ValueError(f"kernel_size must be >= 1, got {self.kernel_size}")
        if self.dilation < 1:
            raise ValueError(f"dilation must be >= 1, got {self.dilation}")

    @property
    def effective_extent(self) -> int:
        return (self.kernel_size - 1) * self.dilation + 1


@dataclass(frozen=True)
class SquareShareConfig:
    kernel_size: int
    pool_size: int = 1
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)

    def __post_init__(self):
        object.__setattr__(self, "stride", as_pair(self.stride, "stride"))
        object.__setattr__(self, "padding", as_pair(self.padding, "padding"))
        if self.pool_size < 1:
            raise ValueError(f"pool_size must be >= 1, got {self.pool_size}")
        if self.kernel_size < 1 or self.kernel_size % self.pool_size != 0:
            raise ValueError(
                f"kernel_size {self.kernel_size} must be divisible by pool_size {self.pool_size}"
            )

    @property
    def regions_per_side(self) -> int:
        return self.kernel_size // self.pool_size


def dilated_conv2d(input, kernel: ConvKernel, config: DilatedConfig):
    """Convolution with taps spaced by the dilation rate (zeros skipped)."""
    if kernel.weights.shape[0] != config.kernel_size or kernel.weights.shape[1] != config.kernel_size:
        raise ValueError(
            f"kernel is {kernel.weights.shape[:2]}, config wants {config.kernel_size}"
        )
    return conv2d_raw(
        input,
        kernel.weights,
        stride=config.stride,
        padding=config.padding,
        dilation=(config.dilation, config.dilation),
        bias=kernel.bias,
    )


def dilated_conv2d_backward(input, kernel: ConvKernel, config: DilatedConfig, grad_output):
    grad_x, grad_w, grad_b = conv2d_raw_backward(
        input,
        kernel.weights,
        grad_output,
        stride=config.stride,
        padding=config.padding,
        dilation=(config.dilation, config.dilation),
        has_bias=kernel.bias is not None,
    )
    return grad_x, ConvKernel(weights=grad_w, bias=grad_b)


def expand_square_weights(region_weights, pool_size: int) -> np.ndarray:
    """Tile each region weight into a pool_size x pool_size block."""
    w = np.asarray(region_weights, dtype=np.float64)
    if w.ndim != 4:
        raise ValueError(f"region weights must be rank-4, got rank {w.ndim}")
    return np.repeat(np.repeat(w, pool_size, axis=0), pool_size, axis=1)


def square_share_conv2d(input, region_weights, config: SquareShareConfig, bias=None):
    """Convolution whose effective kernel repeats each region weight."""
    w = np.asarray(region_weights, dtype=np.float64)
    side = config.regions_per_side
    if w.shape[:2] != (side, side):
        raise ValueError(
            f"region grid is {w.shape[:2]}, config wants ({side}, {side})"
        )
    full = expand_square_weights(w, config.pool_size)
    return conv2d_raw(input, full, stride=config.stride, padding=config.padding, bias=bias)


def square_share_conv2d_backward(input, region_weights, config: SquareShareConfig, grad_output, has_bias=False):
    """Adjoints; the region-weight gradient sums its block of the full-kernel gradient."""
    w = np.asarray(region_weights, dtype=np.float64)
    full = expand_square_weights(w, config.pool_size)
    grad_x, grad_full, grad_b = conv2d_raw_backward(
        input,
        full,
        grad_output,
        stride=config.stride,
        padding=config.padding,
        has_bias=has_bias,
    )
    p = config.pool_size
    side = config.regions_per_side
    grad_regions = grad_full.reshape(side, p, side, p, *grad_full.shape[2:]).sum(axis=(1, 3))
    return grad_x, grad_regions, grad_b
