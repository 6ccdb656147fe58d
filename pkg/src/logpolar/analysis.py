"""Quantitative instruments: cost accounting, receptive fields, kernel images.

Counting rules, applied exactly (not asymptotically):

* one multiply and one add per kernel-tap/channel contribution, so a
  k x k convolution over C_in -> C_out costs H'*W'*k*k*C_in*C_out of each;
* the bias adds one addition per output element;
* log-polar layers split into the block convolution
  (H'*W'*levels_r*levels_theta*C_in*C_out), the 1x1 center convolution
  (H'*W'*C_in*C_out, when enabled), and pooling: one add per gathered
  window cell (H'*W'*n_cells*C_in) plus, in mean mode, one multiply per
  region and channel for the 1/N scaling (H'*W'*levels_r*levels_theta*C_in);
* the pooled map occupies H'*W'*2*levels_r*(levels_theta/2)*C_in cells;
* dilated convolution touches only its k*k real taps (holes are free);
  square-shared convolution executes its expanded k x k kernel;
* mean pooling over a p x p window costs p*p adds plus one multiply per
  output element; max pooling and relu count zero (comparisons are free).

Receptive fields are estimated by backpropagating a unit gradient from a
single output location (channel 0) on a fixed random input and reading
the support of |grad| > 1e-12, which identifies structural support under
float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import LogPolarMask, build_mask, squared_cell_distance
from .lpsc import LpscWeights
from .network import Network, NetSpec, build_network
from .raster import pgm_bytes, ppm_bytes, to_gray

__all__ = [
    "LayerCost",
    "CostReport",
    "count_costs",
    "RfReport",
    "estimate_rf",
    "visualize_kernel",
    "nearest_region_grid",
    "kernel_to_pgm",
    "kernel_to_ppm",
    "rf_to_pgm",
]

SUPPORT_THRESHOLD = 1e-12


@dataclass
class LayerCost:
    name: str
    kind: str
    output_shape: tuple
    params: int
    mults: int
    adds: int
    pooled_cells: int = 0
    detail: dict = field(default_factory=dict)


@dataclass
class CostReport:
    input_shape: tuple
    layers: list

    @property
    def total_params(self) -> int:
        return sum(l.params for l in self.layers)

    @property
    def total_mults(self) -> int:
        return sum(l.mults for l in self.layers)

    @property
    def total_adds(self) -> int:
        return sum(l.adds for l in self.layers)

    @property
    def total_pooled_cells(self) -> int:
        return sum(l.pooled_cells for l in self.layers)

    def to_text(self) -> str:
        rows = [("layer", "kind", "output", "params", "mults", "adds", "pooled")]
        for l in self.layers:
            rows.append(
                (
                    l.name,
                    l.kind,
                    "x".join(str(d) for d in l.output_shape),
                    str(l.params),
                    str(l.mults),
                    str(l.adds),
                    str(l.pooled_cells),
                )
            )
        rows.append(
            (
                "total",
                "",
                "",
                str(self.total_params),
                str(self.total_mults),
                str(self.total_adds),
                str(self.total_pooled_cells),
            )
        )
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        return "\n".join(
            "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows
        )

    def to_csv(self) -> str:
        lines = ["layer,kind,output,params,mults,adds,pooled_cells"]
        for l in self.layers:
            shape = "x".join(str(d) for d in l.output_shape)
            lines.append(
                f"{l.name},{l.kind},{shape},{l.params},{l.mults},{l.adds},{l.pooled_cells}"
            )
        lines.append(
            f"total,,,{self.total_params},{self.total_mults},{self.total_adds},{self.total_pooled_cells}"
        )
        return "\n".join(lines) + "\n"


def _conv_cost(layer, in_shape, out_shape, taps):
    locations = out_shape[0] * out_shape[1]
    cin, cout = in_shape[2], out_shape[2]
    mults = locations * taps * cin * cout
    adds = mults
    if layer.use_bias:
        adds += locations * cout
    return mults, adds


def _layer_cost(layer, in_shape, out_shape) -> LayerCost:
    params = sum(int(np.prod(a.shape)) for a in layer.params().values())
    kind = layer.kind
    mults = adds = pooled = 0
    detail = {}
    if kind == "conv":
        mults, adds = _conv_cost(layer, in_shape, out_shape, layer.kernel_size**2)
    elif kind == "dilated":
        mults, adds = _conv_cost(layer, in_shape, out_shape, layer.config.kernel_size**2)
    elif kind == "square_share":
        mults, adds = _conv_cost(layer, in_shape, out_shape, layer.config.kernel_size**2)
    elif kind == "lpsc":
        cfg = layer.config
        locations = out_shape[0] * out_shape[1]
        cin, cout = in_shape[2], out_shape[2]
        regions = cfg.levels_r * cfg.levels_theta
        mask = build_mask(cfg)
        n_cells = int((mask.index_grid > 0).sum())
        conv_mults = locations * regions * cin * cout
        center_mults = locations * cin * cout if cfg.center_conv else 0
        pool_mults = locations * regions * cin if cfg.pooling_mode == "mean" else 0
        pool_adds = locations * n_cells * cin if cfg.pooling_mode != "max" else 0
        mults = conv_mults + center_mults + pool_mults
        adds = conv_mults + center_mults + pool_adds
        if layer.use_bias:
            adds += locations * cout
        pooled = locations * 2 * cfg.levels_r * (cfg.levels_theta // 2) * cin
        detail = {
            "conv_mults": conv_mults,
            "center_mults": center_mults,
            "pool_mults": pool_mults,
            "pool_adds": pool_adds,
            "in_field_cells": n_cells,
        }
    elif kind == "dense":
        mults = in_shape[0] * layer.units
        adds = mults + (layer.units if layer.use_bias else 0)
    elif kind == "meanpool":
        locations = out_shape[0] * out_shape[1] * out_shape[2]
        adds = locations * layer.size**2
        mults = locations
    # relu, maxpool, flatten cost nothing under these rules
    return LayerCost(
        name=layer.name,
        kind=kind,
        output_shape=tuple(out_shape),
        params=params,
        mults=mults,
        adds=adds,
        pooled_cells=pooled,
        detail=detail,
    )


def count_costs(spec: NetSpec, input_shape=None) -> CostReport:
    """Exact per-layer parameter and operation counts for a network spec."""
    if input_shape is not None:
        spec = NetSpec(
            layers=spec.layers, input_shape=tuple(input_shape), num_classes=spec.num_classes
        )
    net = build_network(spec, seed=0, require_logits=False)
    layers = [
        _layer_cost(layer, in_shape, out_shape)
        for layer, in_shape, out_shape in zip(net.layers, net.shapes[:-1], net.shapes[1:])
    ]
    return CostReport(input_shape=tuple(spec.input_shape), layers=layers)


@dataclass
class RfReport:
    """Gradient map of one output location over the input plane."""

    location: tuple[int, int]
    grad_map: np.ndarray  # (H, W), |grad| summed over channels
    support: np.ndarray  # boolean (H, W)
    bbox: tuple[int, int]  # nonzero-support bounding box (rows, cols)


def estimate_rf(network: Network, input_shape, output_location=None, seed=0) -> RfReport:
    """Backpropagate a unit gradient from one spatial output location."""
    input_shape = tuple(int(d) for d in input_shape)
    if len(input_shape) != 3:
        raise ValueError(f"input_shape must be (H, W, C), got {input_shape}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.25, 1.0, size=(1,) + input_shape)
    out = network.forward(x)
    if out.ndim != 4:
        raise ValueError("receptive-field estimation needs a spatial network output")
    _, ho, wo, _ = out.shape
    if output_location is None:
        output_location = (ho // 2, wo // 2)
    i, j = (int(v) for v in output_location)
    if not (0 <= i < ho and 0 <= j < wo):
        raise ValueError(f"output location {output_location} outside {ho}x{wo} grid")
    seed_grad = np.zeros_like(out)
    seed_grad[0, i, j, 0] = 1.0
    grad_input, _ = network.backward(seed_grad)
    grad_map = np.abs(grad_input[0]).sum(axis=-1)
    support = grad_map > SUPPORT_THRESHOLD
    if support.any():
        rows = np.flatnonzero(support.any(axis=1))
        cols = np.flatnonzero(support.any(axis=0))
        bbox = (int(rows[-1] - rows[0] + 1), int(cols[-1] - cols[0] + 1))
    else:
        bbox = (0, 0)
    return RfReport(location=(i, j), grad_map=grad_map, support=support, bbox=bbox)


def nearest_region_grid(mask: LogPolarMask) -> np.ndarray:
    """Region index of the nearest in-field cell, for every outside cell.

    Distance between cells uses the mask's own metric (elliptical when its
    eccentricity is nonzero); ties resolve to the first cell in row-major
    order. In-field cells keep their own region; the center keeps -1.
    """
    grid = mask.index_grid
    filled = grid.copy()
    inside = np.argwhere(grid > 0)
    for i, j in np.argwhere(grid == 0):
        best_k = 0
        best_d = np.inf
        for a, b in inside:
            d = squared_cell_distance(i - a, j - b, mask.alpha, mask.eccentricity)
            if d < best_d:
                best_d = d
                best_k = grid[a, b]
        filled[i, j] = best_k
    return filled


def visualize_kernel(weights: LpscWeights, mask: LogPolarMask, fill_corners=True) -> np.ndarray:
    """Paint region weights onto the kernel grid.

    Returns (C_in, C_out, size, size) float64. Each in-field cell carries
    its region's weight and the center carries the center weight; outside
    cells carry the nearest region's weight when fill_corners is on, NaN
    otherwise (rendered distinctly).
    """
    lr, lt = weights.regions.shape[:2]
    if (lr, lt) != (mask.levels_r, mask.levels_theta):
        raise ValueError(
            f"weights cover ({lr}, {lt}) regions, mask has ({mask.levels_r}, {mask.levels_theta})"
        )
    grid = nearest_region_grid(mask) if fill_corners else mask.index_grid
    cin, cout = weights.center.shape
    out = np.full((cin, cout, mask.size, mask.size), np.nan)
    flat_regions = weights.regions.reshape(lr * lt, cin, cout)
    for i in range(mask.size):
        for j in range(mask.size):
            k = grid[i, j]
            if k == -1:
                out[:, :, i, j] = weights.center
            elif k > 0:
                out[:, :, i, j] = flat_regions[k - 1]
    return out


def kernel_to_pgm(kernel_image) -> bytes:
    """Render one (size, size) kernel image; NaN cells show as black."""
    return pgm_bytes(to_gray(kernel_image, floor=32))


def kernel_to_ppm(kernel_image) -> bytes:
    """Color render of one kernel image; unfilled (NaN) cells show red."""
    kernel_image = np.asarray(kernel_image, dtype=np.float64)
    gray = to_gray(kernel_image, floor=32)
    rgb = np.stack([gray, gray, gray], axis=-1)
    sentinel = ~np.isfinite(kernel_image)
    rgb[sentinel] = (200, 0, 0)
    return ppm_bytes(rgb)


def rf_to_pgm(report: RfReport) -> bytes:
    """Render a gradient map normalized by its maximum absolute value."""
    gm = report.grad_map
    peak = float(gm.max())
    scaled = gm / peak if peak > 0 else gm
    return pgm_bytes(np.rint(scaled * 255).astype(np.uint8))
