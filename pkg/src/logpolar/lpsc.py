"""The log-polar space convolution operator.

Two evaluation paths compute the same linear map:

* ``lpsc_forward_reference`` is the normative definition. For each window
  position it mixes the center pixel through the center weight and every
  region's pooled cells through that region's weight, scaled by 1/N in
  mean mode (N = region population in the mask, padding cells included).
* ``lpsc_forward_fast`` realizes the operator with ordinary machinery:
  log-polar pooling rewrites each window as a (2*levels_r, levels_theta/2)
  block inside an upsampled map, a single conventional convolution with
  kernel size and stride equal to the block shape produces the context
  response, and a separate 1x1 convolution over the window centers adds
  the center-pixel response.

Block layout (fixed bijection; any fixed choice is equivalent because the
block kernel has one free weight per cell): column c holds the direction
pair (m = c+1, m' = levels_theta - c); rows 0..levels_r-1 hold shells of m
from outermost to innermost; rows levels_r..2*levels_r-1 hold shells of m'
from innermost to outermost, mirroring the radial adjacency of the disk.

Pooling modes: ``mean`` divides each region sum by its mask population
(empty regions stay 0 and never contribute), ``sum`` skips the division,
``max`` takes the region maximum over the zero-padded window; max-mode
gradients route to the first maximal cell in row-major mask order.

LPSCW v1 weight file: ASCII header line

    LPSCW v1 <levels_r> <levels_theta> <C_in> <C_out> <has_bias>

followed by little-endian float64: center block (C_in, C_out), region
block in (level, sector, C_in, C_out) order, then the bias if present.

Forward and backward are pure; cell accumulation follows the fixed
row-major mask order, so repeated evaluations are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .conv import as_pair, conv2d_raw, conv2d_raw_backward, ensure_batched
from .geometry import LogPolarMask, LpscConfig, build_mask

__all__ = [
    "LpscWeights",
    "PooledMap",
    "block_layout",
    "region_offsets",
    "log_polar_pool",
    "lpsc_forward_fast",
    "lpsc_forward_reference",
    "lpsc_backward",
    "lpsc_output_shape",
    "save_lpsc_weights",
    "load_lpsc_weights",
]


@dataclass
class LpscWeights:
    """Per-channel-pair weights: center w(0,0) and one weight per region."""

    center: np.ndarray  # (C_in, C_out)
    regions: np.ndarray  # (levels_r, levels_theta, C_in, C_out)
    bias: np.ndarray | None = None  # (C_out,)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        self.regions = np.asarray(self.regions, dtype=np.float64)
        if self.center.ndim != 2:
            raise ValueError(f"center weights must be (C_in, C_out), got {self.center.shape}")
        if self.regions.ndim != 4:
            raise ValueError(
                f"region weights must be (levels_r, levels_theta, C_in, C_out), got {self.regions.shape}"
            )
        if self.regions.shape[2:] != self.center.shape:
            raise ValueError(
                f"center block {self.center.shape} does not match region channels {self.regions.shape[2:]}"
            )
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64)
            if self.bias.shape != (self.center.shape[1],):
                raise ValueError(
                    f"bias shape {self.bias.shape} does not match {self.center.shape[1]} output channels"
                )

    @property
    def in_channels(self) -> int:
        return self.center.shape[0]

    @property
    def out_channels(self) -> int:
        return self.center.shape[1]

    @property
    def weights_per_pair(self) -> int:
        return self.regions.shape[0] * self.regions.shape[1] + 1


@dataclass
class PooledMap:
    """Upsampled map after log-polar pooling.

    ``data`` has spatial shape (grid_h * 2*levels_r, grid_w *
    levels_theta/2); block (i, j) holds the pooled regions of window
    position (i, j).
    """

    data: np.ndarray
    grid_h: int
    grid_w: int
    levels_r: int
    levels_theta: int

    @property
    def block_shape(self) -> tuple[int, int]:
        return (2 * self.levels_r, self.levels_theta // 2)


def block_layout(levels_r: int, levels_theta: int) -> np.ndarray:
    """(2*levels_r, levels_theta/2, 2) array of 1-based (level, sector)."""
    lt2 = levels_theta // 2
    lay = np.empty((2 * levels_r, lt2, 2), dtype=np.int64)
    for c in range(lt2):
        for r in range(levels_r):
            lay[r, c] = (levels_r - r, c + 1)
            lay[levels_r + r, c] = (r + 1, levels_theta - c)
    return lay


def region_offsets(mask: LogPolarMask) -> list[np.ndarray]:
    """Per region k (1-based), the (n_k, 2) cell offsets in row-major order."""
    n_regions = mask.levels_r * mask.levels_theta
    offsets: list[list[tuple[int, int]]] = [[] for _ in range(n_regions)]
    radius = mask.radius
    for i in range(mask.size):
        for j in range(mask.size):
            k = mask.index_grid[i, j]
            if k > 0:
                offsets[k - 1].append((i - radius, j - radius))
    return [np.array(cells, dtype=np.int64).reshape(-1, 2) for cells in offsets]


@lru_cache(maxsize=None)
def _plan(config: LpscConfig):
    """Mask, per-region offsets, block layout, and layout inverse for a config."""
    mask = build_mask(config)
    offsets = region_offsets(mask)
    lay = block_layout(config.levels_r, config.levels_theta)
    inverse = {}
    for r in range(lay.shape[0]):
        for c in range(lay.shape[1]):
            level, sector = lay[r, c]
            inverse[(int(level), int(sector))] = (r, c)
    return mask, offsets, lay, inverse


def _grid_extent(size, k, stride, pad):
    padded = size + 2 * pad
    if padded < k:
        raise ValueError(f"mask of size {k} larger than padded input extent {padded}")
    return (padded - k) // stride + 1


def lpsc_output_shape(input_hw, config: LpscConfig) -> tuple[int, int]:
    """(grid_h, grid_w) of window positions for the given input extent."""
    sh, sw = config.stride
    ph, pw = config.padding
    gh = _grid_extent(input_hw[0], config.kernel_size, sh, ph)
    gw = _grid_extent(input_hw[1], config.kernel_size, sw, pw)
    return gh, gw


def _pad(xb, padding):
    ph, pw = padding
    return np.pad(xb, ((0, 0), (ph, ph), (pw, pw), (0, 0)))


def _cell_slice(xp, radius, dr, dc, stride, grid_hw):
    """Strided view of a single mask cell across all window positions."""
    sh, sw = stride
    gh, gw = grid_hw
    r0 = radius + dr
    c0 = radius + dc
    return xp[:, r0 : r0 + (gh - 1) * sh + 1 : sh, c0 : c0 + (gw - 1) * sw + 1 : sw, :]


def _pooled_regions(xp, mask, offsets, stride, grid_hw, mode):
    """Pooled value per region: (n_regions, N, grid_h, grid_w, C)."""
    n, _, _, c = xp.shape
    gh, gw = grid_hw
    out = np.zeros((len(offsets), n, gh, gw, c), dtype=np.float64)
    counts = mask.counts.ravel()
    for k, cells in enumerate(offsets):
        if len(cells) == 0:
            continue
        if mode == "max":
            out[k] = _cell_slice(xp, mask.radius, cells[0][0], cells[0][1], stride, grid_hw)
            for dr, dc in cells[1:]:
                np.maximum(out[k], _cell_slice(xp, mask.radius, dr, dc, stride, grid_hw), out=out[k])
        else:
            acc = out[k]
            for dr, dc in cells:
                acc += _cell_slice(xp, mask.radius, dr, dc, stride, grid_hw)
            if mode == "mean":
                acc /= max(int(counts[k]), 1)
    return out


def log_polar_pool(input, mask: LogPolarMask, stride=(1, 1), padding=(0, 0), mode="mean") -> PooledMap:
    """Pool every window's regions and rearrange them into the block map."""
    if mode not in ("mean", "sum", "max"):
        raise ValueError(f"unknown pooling mode {mode!r}")
    xb, batched = ensure_batched(input)
    stride = as_pair(stride, "stride")
    padding = as_pair(padding, "padding")
    gh = _grid_extent(xb.shape[1], mask.size, stride[0], padding[0])
    gw = _grid_extent(xb.shape[2], mask.size, stride[1], padding[1])
    xp = _pad(xb, padding)
    offsets = region_offsets(mask)
    pooled = _pooled_regions(xp, mask, offsets, stride, (gh, gw), mode)
    lr, lt = mask.levels_r, mask.levels_theta
    lt2 = lt // 2
    lay = block_layout(lr, lt)
    data = np.zeros((xb.shape[0], gh * 2 * lr, gw * lt2, xb.shape[3]), dtype=np.float64)
    for r in range(2 * lr):
        for c in range(lt2):
            level, sector = lay[r, c]
            k = (level - 1) * lt + sector
            data[:, r :: 2 * lr, c::lt2, :] = pooled[k - 1]
    return PooledMap(
        data=data if batched else data[0],
        grid_h=gh,
        grid_w=gw,
        levels_r=lr,
        levels_theta=lt,
    )


def _check_weights(config: LpscConfig, weights: LpscWeights, channels: int):
    if weights.regions.shape[:2] != (config.levels_r, config.levels_theta):
        raise ValueError(
            f"weights cover {weights.regions.shape[:2]} regions, config wants "
            f"({config.levels_r}, {config.levels_theta})"
        )
    if weights.in_channels != channels:
        raise ValueError(
            f"input has {channels} channels but weights expect {weights.in_channels}"
        )


def _block_kernel(weights: LpscWeights, lay: np.ndarray) -> np.ndarray:
    return weights.regions[lay[:, :, 0] - 1, lay[:, :, 1] - 1]


def lpsc_forward_fast(input, config: LpscConfig, weights: LpscWeights):
    """Pooling + block convolution + separate center convolution."""
    xb, batched = ensure_batched(input)
    _check_weights(config, weights, xb.shape[3])
    mask, _, lay, _ = _plan(config)
    pm = log_polar_pool(xb, mask, config.stride, config.padding, config.pooling_mode)
    kernel = _block_kernel(weights, lay)
    out = conv2d_raw(pm.data, kernel, stride=pm.block_shape, padding=(0, 0))
    if config.center_conv:
        xp = _pad(xb, config.padding)
        centers = _cell_slice(xp, mask.radius, 0, 0, config.stride, (pm.grid_h, pm.grid_w))
        out = out + np.einsum("nijc,cd->nijd", centers, weights.center)
    if weights.bias is not None:
        out = out + weights.bias
    return out if batched else out[0]


def lpsc_forward_reference(input, config: LpscConfig, weights: LpscWeights):
    """Direct evaluation of the region-weighted definition, cell by cell."""
    xb, batched = ensure_batched(input)
    _check_weights(config, weights, xb.shape[3])
    mask, offsets, _, _ = _plan(config)
    grid_hw = lpsc_output_shape(xb.shape[1:3], config)
    xp = _pad(xb, config.padding)
    lt = config.levels_theta
    counts = mask.counts.ravel()
    out = np.zeros(
        (xb.shape[0], grid_hw[0], grid_hw[1], weights.out_channels), dtype=np.float64
    )
    for k, cells in enumerate(offsets):
        if len(cells) == 0:
            continue
        level, sector = k // lt, k % lt
        w = weights.regions[level, sector]
        if config.pooling_mode == "max":
            best = _cell_slice(xp, mask.radius, cells[0][0], cells[0][1], config.stride, grid_hw)
            for dr, dc in cells[1:]:
                best = np.maximum(
                    best, _cell_slice(xp, mask.radius, dr, dc, config.stride, grid_hw)
                )
            out += np.einsum("nijc,cd->nijd", best, w)
        else:
            if config.pooling_mode == "mean":
                w = w / max(int(counts[k]), 1)
            for dr, dc in cells:
                sl = _cell_slice(xp, mask.radius, dr, dc, config.stride, grid_hw)
                out += np.einsum("nijc,cd->nijd", sl, w)
    if config.center_conv:
        centers = _cell_slice(xp, mask.radius, 0, 0, config.stride, grid_hw)
        out += np.einsum("nijc,cd->nijd", centers, weights.center)
    if weights.bias is not None:
        out += weights.bias
    return out if batched else out[0]


def lpsc_backward(input, config: LpscConfig, weights: LpscWeights, grad_output):
    """Exact adjoints of the forward map: (grad_input, LpscWeights grads).

    Computed against the fast path: block-convolution adjoint, then the
    pooling adjoint scatters back through each region's cells.
    """
    xb, batched = ensure_batched(input)
    _check_weights(config, weights, xb.shape[3])
    mask, offsets, lay, inverse = _plan(config)
    grid_hw = lpsc_output_shape(xb.shape[1:3], config)
    g, _ = ensure_batched(grad_output)
    expected = (xb.shape[0], grid_hw[0], grid_hw[1], weights.out_channels)
    if g.shape != expected:
        raise ValueError(f"grad_output shape {g.shape} does not match output {expected}")

    pm = log_polar_pool(xb, mask, config.stride, config.padding, config.pooling_mode)
    kernel = _block_kernel(weights, lay)
    grad_pm, grad_kernel, _ = conv2d_raw_backward(
        pm.data, kernel, g, stride=pm.block_shape, padding=(0, 0)
    )

    grad_regions = np.zeros_like(weights.regions)
    grad_regions[lay[:, :, 0] - 1, lay[:, :, 1] - 1] = grad_kernel

    xp = _pad(xb, config.padding)
    grad_xp = np.zeros_like(xp)
    lr, lt = config.levels_r, config.levels_theta
    lt2 = lt // 2
    counts = mask.counts.ravel()
    stride = config.stride
    for k, cells in enumerate(offsets):
        if len(cells) == 0:
            continue
        level, sector = k // lt + 1, k % lt + 1
        r, c = inverse[(level, sector)]
        gk = grad_pm[:, r :: 2 * lr, c::lt2, :]
        if config.pooling_mode == "max":
            stack = np.stack(
                [_cell_slice(xp, mask.radius, dr, dc, stride, grid_hw) for dr, dc in cells]
            )
            winner = stack.argmax(axis=0)  # first maximal cell wins ties
            for t, (dr, dc) in enumerate(cells):
                _cell_slice(grad_xp, mask.radius, dr, dc, stride, grid_hw)[...] += gk * (
                    winner == t
                )
        else:
            share = gk / max(int(counts[k]), 1) if config.pooling_mode == "mean" else gk
            for dr, dc in cells:
                _cell_slice(grad_xp, mask.radius, dr, dc, stride, grid_hw)[...] += share

    grad_center = np.zeros_like(weights.center)
    if config.center_conv:
        centers = _cell_slice(xp, mask.radius, 0, 0, stride, grid_hw)
        grad_center += np.einsum("nijc,nijd->cd", centers, g)
        _cell_slice(grad_xp, mask.radius, 0, 0, stride, grid_hw)[...] += np.einsum(
            "nijd,cd->nijc", g, weights.center
        )

    ph, pw = config.padding
    grad_input = grad_xp[:, ph : ph + xb.shape[1], pw : pw + xb.shape[2], :]
    grad_bias = g.sum(axis=(0, 1, 2)) if weights.bias is not None else None
    if not batched:
        grad_input = grad_input[0]
    return grad_input, LpscWeights(center=grad_center, regions=grad_regions, bias=grad_bias)


def save_lpsc_weights(path, weights: LpscWeights) -> None:
    """Write weights to *path* in LPSCW v1 format."""
    lr, lt, cin, cout = weights.regions.shape
    has_bias = 1 if weights.bias is not None else 0
    header = f"LPSCW v1 {lr} {lt} {cin} {cout} {has_bias}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(weights.center.astype("<f8").tobytes(order="C"))
        fh.write(weights.regions.astype("<f8").tobytes(order="C"))
        if weights.bias is not None:
            fh.write(weights.bias.astype("<f8").tobytes(order="C"))


def load_lpsc_weights(path) -> LpscWeights:
    """Read and validate an LPSCW v1 file."""
    with open(path, "rb") as fh:
        header = fh.readline()
        blob = fh.read()
    parts = header.decode("ascii", errors="replace").split()
    if len(parts) != 7 or parts[0] != "LPSCW" or parts[1] != "v1":
        raise ValueError(f"{path}: not a LPSCW v1 file")
    try:
        lr, lt, cin, cout, has_bias = (int(p) for p in parts[2:])
    except ValueError:
        raise ValueError(f"{path}: malformed LPSCW header") from None
    if min(lr, lt, cin, cout) < 1 or has_bias not in (0, 1):
        raise ValueError(f"{path}: invalid LPSCW dimensions")
    n_center = cin * cout
    n_regions = lr * lt * cin * cout
    expected = 8 * (n_center + n_regions + (cout if has_bias else 0))
    if len(blob) != expected:
        raise ValueError(f"{path}: payload holds {len(blob)} bytes, expected {expected}")
    flat = np.frombuffer(blob, dtype="<f8").astype(np.float64)
    if not np.all(np.isfinite(flat)):
        raise ValueError(f"{path}: non-finite values in payload")
    center = flat[:n_center].reshape(cin, cout)
    regions = flat[n_center : n_center + n_regions].reshape(lr, lt, cin, cout)
    bias = flat[n_center + n_regions :].copy() if has_bias else None
    return LpscWeights(center=center.copy(), regions=regions.copy(), bias=bias)
