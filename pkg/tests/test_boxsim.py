import math
from fractions import Fraction

import numpy as np
import pytest

from dtmask import (
    BinaryMask,
    BitPlaneStack,
    Box,
    Perturbation,
    QuantizationScheme,
    RobustnessRecord,
    TruncatedDistanceMap,
    WindowSpec,
    crop,
    decode_to_canvas,
    edt_with_external_boundary,
    encode,
    encode_window,
    hard_decode,
    interior_mask,
    make_uniform_scheme,
    mask_iou,
    perturb_box,
    robustness_sweep,
    shrink_perturbation,
    truncated_edt,
)
from dtmask.grid import resize_nearest_raster

from helpers import disk_mask, random_mask, tight_box


class TestWindowSpec:
    def test_scale_properties(self):
        spec = WindowSpec(Box(0, 0, 14, 7), 28, 28)
        assert spec.scale_x == 2.0
        assert spec.scale_y == 4.0
        assert spec.min_scale_fraction() == (28, 14)

    def test_fraction_matches_float_min(self):
        rng = np.random.default_rng(101)
        for _ in range(100):
            w, h = int(rng.integers(1, 60)), int(rng.integers(1, 60))
            nw, nh = int(rng.integers(1, 60)), int(rng.integers(1, 60))
            spec = WindowSpec(Box(0, 0, w, h), nw, nh)
            num, den = spec.min_scale_fraction()
            assert Fraction(num, den) == min(
                Fraction(nw, w), Fraction(nh, h)
            )

    def test_norm_dims_validated(self):
        with pytest.raises(ValueError):
            WindowSpec(Box(0, 0, 4, 4), 0, 28)


class TestPerturbBox:
    def test_identity(self):
        box = Box(3, 5, 17, 11)
        assert perturb_box(box, Perturbation()) == box

    def test_half_scale(self):
        assert perturb_box(Box(0, 0, 10, 10), Perturbation(sx=0.5, sy=0.5)) == Box(
            3, 3, 8, 8
        )

    def test_pure_shift(self):
        assert perturb_box(Box(0, 0, 10, 10), Perturbation(dx=2, dy=-1)) == Box(
            2, -1, 12, 9
        )

    def test_collapse_rejected(self):
        with pytest.raises(ValueError, match="collapses"):
            perturb_box(Box(0, 0, 2, 2), Perturbation(sx=0.1, sy=0.1))

    def test_scale_factors_validated(self):
        with pytest.raises(ValueError):
            Perturbation(sx=0.0)
        with pytest.raises(ValueError):
            Perturbation(sy=-1.0)


class TestShrinkPerturbation:
    def test_roundtrip_is_inset_box(self):
        rng = np.random.default_rng(103)
        for _ in range(100):
            w, h = int(rng.integers(3, 50)), int(rng.integers(3, 50))
            x0, y0 = int(rng.integers(-5, 20)), int(rng.integers(-5, 20))
            box = Box(x0, y0, x0 + w, y0 + h)
            p = int(rng.integers(0, (min(w, h) - 1) // 2 + 1))
            got = perturb_box(box, shrink_perturbation(box, p))
            assert got == Box(x0 + p, y0 + p, x0 + w - p, y0 + h - p)

    def test_swallowing_shrink_rejected(self):
        with pytest.raises(ValueError, match="swallows"):
            shrink_perturbation(Box(0, 0, 6, 6), 3)
        with pytest.raises(ValueError):
            shrink_perturbation(Box(0, 0, 6, 6), -1)


class TestEncodeWindow:
    def test_native_scale_with_margin_matches_plain_transform(self):
        mask = disk_mask(32, 32, 16, 16, 8)
        box = Box(4, 4, 28, 28)
        scheme = make_uniform_scheme(5, 13)
        got = encode_window(mask, WindowSpec(box, box.width, box.height), scheme)
        want = encode(truncated_edt(crop(mask, box), 13), scheme)
        assert np.array_equal(got.planes, want.planes)

    def test_cut_box_keeps_deep_values_at_the_cut(self):
        # the window's right edge slices through the disk, but distances
        # come from the true object boundary, not the cut
        mask = disk_mask(32, 32, 16, 16, 10)
        box = Box(8, 8, 16, 24)
        scheme = make_uniform_scheme(5, 13)
        stack = encode_window(mask, WindowSpec(box, box.width, box.height), scheme)
        radii = np.asarray(scheme.radii)
        rep = (radii[:, None, None] * stack.planes).sum(axis=0)
        assert rep[8, 7] >= 7

    def test_background_window_lands_in_first_bin(self):
        mask = disk_mask(32, 32, 8, 8, 3)
        stack = encode_window(
            mask, WindowSpec(Box(20, 20, 28, 28), 8, 8), make_uniform_scheme(5, 13)
        )
        assert stack.planes[0].all()

    def test_downscale_keeps_pre_cap_headroom(self):
        # center distance 20 truncates to ceil(13 / (28/40)) = 19 before
        # scaling, then scales to ceil(19 * 7/10) = 14 and clips to 13;
        # truncating at 13 up front would scale to 10 instead
        mask = disk_mask(48, 48, 24, 24, 20)
        spec = WindowSpec(Box(4, 4, 44, 44), 28, 28)
        stack = encode_window(mask, spec, make_uniform_scheme(13, 13))
        radii = np.asarray(stack.scheme.radii)
        rep = (radii[:, None, None] * stack.planes).sum(axis=0)
        assert rep[14, 14] == 12

    def test_scaling_matches_fraction_oracle(self):
        rng = np.random.default_rng(107)
        scheme = make_uniform_scheme(5, 13)
        for _ in range(25):
            mask = random_mask(rng, min_size=12, max_size=40)
            h, w = mask.pixels.shape
            x0 = int(rng.integers(0, w - 4))
            y0 = int(rng.integers(0, h - 4))
            box = Box(x0, y0, int(rng.integers(x0 + 4, w + 3)),
                      int(rng.integers(y0 + 4, h + 3)))
            nw, nh = int(rng.integers(4, 32)), int(rng.integers(4, 32))
            spec = WindowSpec(box, nw, nh)
            stack = encode_window(mask, spec, scheme)

            num, den = spec.min_scale_fraction()
            pre_cap = max(13, math.ceil(Fraction(13 * den, num)))
            window = edt_with_external_boundary(
                crop(mask, box), mask, box, pre_cap
            ).values
            resized = resize_nearest_raster(window, nw, nh)
            scale = Fraction(num, den)
            want = np.array(
                [
                    [min(math.ceil(int(v) * scale), 13) for v in row]
                    for row in resized
                ]
            )
            got = encode(TruncatedDistanceMap(want, 13), scheme)
            assert np.array_equal(stack.planes, got.planes)


def _two_bin_stack(size, radius, bits):
    scheme = QuantizationScheme(2, radius, (0, radius))
    planes = np.zeros((2, size, size), dtype=bool)
    for y, x in bits:
        planes[1, y, x] = True
    planes[0] = ~planes[1]
    return BitPlaneStack(planes, scheme)


class TestDecodeToCanvas:
    def test_unit_full_canvas_box_matches_hard_decode(self):
        rng = np.random.default_rng(109)
        scheme = make_uniform_scheme(5, 13)
        for _ in range(20):
            mask = random_mask(rng, max_size=36)
            h, w = mask.pixels.shape
            stack = encode(truncated_edt(mask, 13), scheme)
            spec = WindowSpec(Box(0, 0, w, h), w, h)
            for mode in ("conservative", "literal"):
                got = decode_to_canvas(stack, spec, w, h, mode)
                assert np.array_equal(got.pixels, hard_decode(stack, mode).pixels)

    def test_disk_extends_beyond_the_box(self):
        stack = _two_bin_stack(8, 3, [(4, 7)])
        out = decode_to_canvas(stack, WindowSpec(Box(0, 0, 8, 8), 8, 8), 16, 16)
        assert out.pixels[4, 9]
        assert not out.pixels[4, 10]

    def test_all_first_bin_paints_nothing(self):
        stack = _two_bin_stack(6, 4, [])
        out = decode_to_canvas(stack, WindowSpec(Box(2, 2, 8, 8), 6, 6), 12, 12)
        assert not out.pixels.any()

    def test_upscaled_window_halves_painted_radius(self):
        # scale 2: bin radius 3 in normalized units paints
        # round-half-up(3/2) = 2 image pixels in literal mode
        scheme = QuantizationScheme(2, 3, (0, 3))
        planes = np.zeros((2, 8, 8), dtype=bool)
        planes[1, 0, 0] = True
        planes[0] = ~planes[1]
        stack = BitPlaneStack(planes, scheme)
        out = decode_to_canvas(
            stack, WindowSpec(Box(0, 0, 4, 4), 8, 8), 12, 12, "literal"
        )
        assert out.pixels[0, 2]
        assert not out.pixels[0, 3]

    def test_dimension_mismatch_rejected(self):
        stack = _two_bin_stack(6, 2, [])
        with pytest.raises(ValueError, match="normalized window"):
            decode_to_canvas(stack, WindowSpec(Box(0, 0, 5, 5), 5, 5), 12, 12)

    def test_bad_mode_and_canvas_rejected(self):
        stack = _two_bin_stack(5, 2, [])
        spec = WindowSpec(Box(0, 0, 5, 5), 5, 5)
        with pytest.raises(ValueError, match="mode"):
            decode_to_canvas(stack, spec, 8, 8, "fuzzy")
        with pytest.raises(ValueError):
            decode_to_canvas(stack, spec, 0, 8)


class TestRobustnessSweep:
    def test_identity_perturbation_recovers_interior_exactly(self):
        mask = disk_mask(32, 32, 16, 16, 10)
        records = robustness_sweep(mask, Box(4, 4, 28, 28), [Perturbation()])
        assert records[0].iou_beyond == 1.0
        assert records[0].iou_inside == 1.0

    def test_beyond_never_below_inside(self):
        rng = np.random.default_rng(113)
        mask = disk_mask(40, 40, 20, 20, 12)
        box = tight_box(mask)
        perts = [
            Perturbation(
                dx=int(rng.integers(-6, 7)),
                dy=int(rng.integers(-6, 7)),
                sx=float(rng.uniform(0.5, 1.4)),
                sy=float(rng.uniform(0.5, 1.4)),
            )
            for _ in range(30)
        ]
        for rec in robustness_sweep(mask, box, perts):
            assert rec.iou_beyond >= rec.iou_inside

    def test_far_shift_finds_nothing(self):
        mask = disk_mask(32, 32, 10, 10, 6)
        records = robustness_sweep(mask, Box(4, 4, 16, 16), [Perturbation(dx=100)])
        assert records[0].iou_beyond == 0.0
        assert records[0].iou_inside == 0.0

    def test_threads_do_not_change_records(self):
        mask = disk_mask(36, 36, 18, 18, 11)
        box = Box(7, 7, 29, 29)
        perts = [shrink_perturbation(box, p) for p in range(5)]
        seq = robustness_sweep(mask, box, perts, threads=1)
        par = robustness_sweep(mask, box, perts, threads=3)
        assert seq == par

    def test_normalized_window_smoke(self):
        # dominance is a unit-scale theorem; resampled windows only
        # promise valid IoUs in input order
        mask = disk_mask(36, 36, 18, 18, 11)
        box = Box(7, 7, 29, 29)
        perts = [Perturbation(dx=d) for d in (-2, 0, 2)]
        records = robustness_sweep(mask, box, perts, norm_size=(28, 28))
        assert [r.dx for r in records] == [-2, 0, 2]
        for rec in records:
            assert 0.0 <= rec.iou_beyond <= 1.0
            assert 0.0 <= rec.iou_inside <= 1.0
            assert rec.iou_beyond > 0.5

    def test_thread_count_validated(self):
        mask = disk_mask(16, 16, 8, 8, 4)
        with pytest.raises(ValueError):
            robustness_sweep(mask, Box(2, 2, 14, 14), [], threads=0)

    def test_record_range_validated(self):
        with pytest.raises(ValueError):
            RobustnessRecord(0, 0, 1.0, 1.0, 1.2, 0.5)


def test_clipping_matches_manual_intersection():
    mask = disk_mask(32, 32, 16, 16, 10)
    box = Box(10, 6, 22, 26)
    scheme = make_uniform_scheme(5, 13)
    spec = WindowSpec(box, box.width, box.height)
    stack = encode_window(mask, spec, scheme)
    beyond = decode_to_canvas(stack, spec, 32, 32)
    clipped = np.zeros((32, 32), dtype=bool)
    clipped[box.y0 : box.y1, box.x0 : box.x1] = beyond.pixels[
        box.y0 : box.y1, box.x0 : box.x1
    ]
    records = robustness_sweep(mask, box, [Perturbation()], scheme=scheme)
    target = interior_mask(mask)
    assert records[0].iou_beyond == mask_iou(beyond, target)
    assert records[0].iou_inside == mask_iou(BinaryMask(clipped), target)
