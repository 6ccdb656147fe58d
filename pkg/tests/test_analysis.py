"""Cost accounting, receptive-field estimation, kernel visualization."""

import numpy as np
import pytest

from logpolar.analysis import (
    count_costs,
    estimate_rf,
    kernel_to_pgm,
    kernel_to_ppm,
    nearest_region_grid,
    rf_to_pgm,
    visualize_kernel,
)
from logpolar.geometry import LpscConfig, build_mask
from logpolar.lpsc import LpscWeights
from logpolar.network import LayerSpec, NetSpec, build_network

RNG = np.random.default_rng(31)


def lpsc_spec(size, lr, lt, g, hw=16, cin=1, cout=1, bias=False, **extra):
    options = {
        "out_channels": cout,
        "size": size,
        "levels_r": lr,
        "levels_theta": lt,
        "growth": g,
        "padding": (size - 1) // 2,
        "bias": bias,
    }
    options.update(extra)
    return NetSpec(
        layers=[LayerSpec("lpsc", options)],
        input_shape=(hw, hw, cin),
        num_classes=2,
    )


def conv_stack_spec(n_layers, hw=12, channels=2, kernel=3, bias=False):
    layers = [
        LayerSpec(
            "conv",
            {"out_channels": channels, "kernel_size": kernel, "padding": kernel // 2, "bias": bias},
        )
        for _ in range(n_layers)
    ]
    return NetSpec(layers=layers, input_shape=(hw, hw, 1), num_classes=2)


class TestCounting:
    def test_one_by_one_conv_multiplies(self):
        spec = NetSpec(
            layers=[LayerSpec("conv", {"out_channels": 5, "kernel_size": 1, "bias": False})],
            input_shape=(7, 9, 3),
            num_classes=2,
        )
        report = count_costs(spec)
        assert report.layers[0].mults == 7 * 9 * 3 * 5

    @pytest.mark.parametrize("lr,lt,want", [(3, 8, 25), (2, 6, 13)])
    def test_lpsc_params_per_channel_pair(self, lr, lt, want):
        report = count_costs(lpsc_spec(11, lr, lt, 2))
        assert report.layers[0].params == want

    def test_conventional_11x11_params(self):
        spec = NetSpec(
            layers=[LayerSpec("conv", {"out_channels": 1, "kernel_size": 11, "padding": 5, "bias": False})],
            input_shape=(16, 16, 1),
            num_classes=2,
        )
        assert count_costs(spec).layers[0].params == 121

    def test_lpsc_conv_term_formula(self):
        # conv + center multiplies = H'W'(Lr*Lt*C*C' + C*C') exactly
        report = count_costs(lpsc_spec(11, 3, 8, 2, hw=16, cin=3, cout=4))
        row = report.layers[0]
        assert row.detail["conv_mults"] + row.detail["center_mults"] == 16 * 16 * (
            3 * 8 * 3 * 4 + 3 * 4
        )

    def test_conv_term_invariant_in_kernel_size(self):
        # same-padding keeps H'W' fixed, so the block-convolution term
        # ignores the kernel radius entirely
        r_small = count_costs(lpsc_spec(7, 2, 8, 2)).layers[0]
        r_large = count_costs(lpsc_spec(13, 2, 8, 2)).layers[0]
        assert r_small.detail["conv_mults"] == r_large.detail["conv_mults"]
        assert r_small.detail["center_mults"] == r_large.detail["center_mults"]
        # pooling additions do grow with the footprint
        assert r_small.detail["pool_adds"] < r_large.detail["pool_adds"]

    def test_conv_term_linear_in_region_count(self):
        base = count_costs(lpsc_spec(11, 2, 6, 2)).layers[0]
        double = count_costs(lpsc_spec(11, 2, 12, 2)).layers[0]
        assert double.detail["conv_mults"] == 2 * base.detail["conv_mults"]

    def test_pooled_map_cells(self):
        report = count_costs(lpsc_spec(5, 2, 6, 2, hw=8, cin=3))
        assert report.layers[0].pooled_cells == 8 * 8 * 2 * 2 * 3 * 3

    def test_totals_sum_rows(self):
        spec = NetSpec(
            layers=[
                LayerSpec("conv", {"out_channels": 2, "kernel_size": 3, "padding": 1}),
                LayerSpec("relu"),
                LayerSpec("meanpool", {"size": 2}),
                LayerSpec("flatten"),
                LayerSpec("dense", {"units": 2}),
            ],
            input_shape=(8, 8, 1),
            num_classes=2,
        )
        report = count_costs(spec)
        assert report.total_mults == sum(r.mults for r in report.layers)
        assert report.layers[1].mults == 0  # relu is free
        csv = report.to_csv()
        assert csv.splitlines()[0] == "layer,kind,output,params,mults,adds,pooled_cells"
        assert len(csv.splitlines()) == 7


class TestReceptiveField:
    def test_single_conv_footprint(self):
        net = build_network(conv_stack_spec(1), require_logits=False)
        report = estimate_rf(net, (12, 12, 1))
        assert report.bbox == (3, 3)

    def test_two_stacked_convs(self):
        net = build_network(conv_stack_spec(2), require_logits=False)
        report = estimate_rf(net, (12, 12, 1))
        assert report.bbox == (5, 5)

    def test_three_stacked_convs(self):
        net = build_network(conv_stack_spec(3), require_logits=False)
        report = estimate_rf(net, (12, 12, 1))
        assert report.bbox == (7, 7)

    def test_lpsc_support_equals_mask_footprint(self):
        config = LpscConfig(kernel_size=11, levels_r=3, levels_theta=8, growth=2, padding=(5, 5))
        spec = lpsc_spec(11, 3, 8, 2, hw=32)
        net = build_network(spec, seed=4, require_logits=False)
        report = estimate_rf(net, (32, 32, 1), output_location=(16, 16))
        mask = build_mask(config)
        want = np.zeros((32, 32), dtype=bool)
        want[16 - 5 : 16 + 6, 16 - 5 : 16 + 6] = mask.index_grid != 0
        assert np.array_equal(report.support, want)
        assert report.bbox == (11, 11)
        # strictly wider than a 3x3 footprint
        assert int(report.support.sum()) > 9

    def test_location_out_of_range(self):
        net = build_network(conv_stack_spec(1), require_logits=False)
        with pytest.raises(ValueError, match="location"):
            estimate_rf(net, (12, 12, 1), output_location=(40, 0))

    def test_pgm_renders_normalized(self):
        net = build_network(conv_stack_spec(1), require_logits=False)
        report = estimate_rf(net, (12, 12, 1))
        blob = rf_to_pgm(report)
        assert blob.startswith(b"P5\n12 12\n255\n")
        assert max(blob[len(b"P5\n12 12\n255\n") :]) == 255


class TestVisualization:
    def make_weights(self, config, value=None):
        lr, lt = config.levels_r, config.levels_theta
        if value is not None:
            regions = np.full((lr, lt, 1, 1), value)
            center = np.full((1, 1), value)
        else:
            regions = RNG.normal(size=(lr, lt, 1, 1))
            center = RNG.normal(size=(1, 1))
        return LpscWeights(center=center, regions=regions)

    def test_constant_weights_constant_image(self):
        config = LpscConfig(kernel_size=5, levels_r=2, levels_theta=8, growth=2)
        mask = build_mask(config)
        img = visualize_kernel(self.make_weights(config, value=2.5), mask, fill_corners=True)
        assert img.shape == (1, 1, 5, 5)
        assert np.all(img == 2.5)

    def test_unfilled_corners_are_sentinel(self):
        config = LpscConfig(kernel_size=5, levels_r=2, levels_theta=8, growth=2)
        mask = build_mask(config)
        img = visualize_kernel(self.make_weights(config), mask, fill_corners=False)[0, 0]
        assert np.isnan(img[0, 0])
        assert np.isnan(img[0, 1])  # squared distance 5 is outside
        assert not np.isnan(img[2, 2])

    def test_corner_fill_matches_bruteforce_nearest(self):
        config = LpscConfig(kernel_size=11, levels_r=3, levels_theta=8, growth=2)
        mask = build_mask(config)
        filled = nearest_region_grid(mask)
        inside = [(a, b) for a in range(11) for b in range(11) if mask.index_grid[a, b] > 0]
        for i in range(11):
            for j in range(11):
                if mask.index_grid[i, j] != 0:
                    assert filled[i, j] == mask.index_grid[i, j]
                    continue
                dists = [
                    ((i - a) ** 2 + (j - b) ** 2, pos)
                    for pos, (a, b) in enumerate(inside)
                ]
                best = min(dists)[1]
                a, b = inside[best]
                assert filled[i, j] == mask.index_grid[a, b]

    def test_far_corner_takes_outermost_shell_of_its_sector(self):
        config = LpscConfig(kernel_size=11, levels_r=3, levels_theta=8, growth=2)
        mask = build_mask(config)
        filled = nearest_region_grid(mask)
        k = filled[10, 10]  # offset (R, R), direction sector 8
        level = (k - 1) // 8 + 1
        sector = (k - 1) % 8 + 1
        assert level == 3
        assert sector == 8

    def test_pgm_sentinel_distinct(self):
        config = LpscConfig(kernel_size=5, levels_r=2, levels_theta=8, growth=2)
        mask = build_mask(config)
        img = visualize_kernel(self.make_weights(config, value=1.0), mask, fill_corners=False)
        blob = kernel_to_pgm(img[0, 0])
        pixels = np.frombuffer(blob.split(b"\n", 3)[3], dtype=np.uint8).reshape(5, 5)
        assert pixels[0, 0] == 0  # sentinel renders black
        assert pixels[2, 2] == 255  # constant weights render at full white

    def test_ppm_sentinel_is_red(self):
        config = LpscConfig(kernel_size=5, levels_r=2, levels_theta=8, growth=2)
        mask = build_mask(config)
        img = visualize_kernel(self.make_weights(config, value=1.0), mask, fill_corners=False)
        blob = kernel_to_ppm(img[0, 0])
        assert blob.startswith(b"P6\n5 5\n255\n")
        pixels = np.frombuffer(blob.split(b"\n", 3)[3], dtype=np.uint8).reshape(5, 5, 3)
        assert tuple(pixels[0, 0]) == (200, 0, 0)
        assert tuple(pixels[2, 2]) == (255, 255, 255)
