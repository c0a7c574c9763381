"""Shared shape and corpus builders for the test suite."""

from __future__ import annotations

import numpy as np

from dtmask import BinaryMask, Box, QuantizationScheme, BitPlaneStack


def disk_raster(h, w, cy, cx, r):
    yy, xx = np.indices((h, w))
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r


def disk_mask(h, w, cy, cx, r) -> BinaryMask:
    return BinaryMask(disk_raster(h, w, cy, cx, r))


def ring_mask(h, w, cy, cx, r_out, r_in) -> BinaryMask:
    return BinaryMask(disk_raster(h, w, cy, cx, r_out) & ~disk_raster(h, w, cy, cx, r_in))


def rect_mask(h, w, y0, x0, y1, x1) -> BinaryMask:
    m = np.zeros((h, w), dtype=bool)
    m[y0:y1, x0:x1] = True
    return BinaryMask(m)


def l_mask(h, w, y0, x0, arm_len, thickness) -> BinaryMask:
    """L shape: vertical arm down from (y0, x0), horizontal arm at its foot."""
    m = np.zeros((h, w), dtype=bool)
    m[y0 : y0 + arm_len, x0 : x0 + thickness] = True
    m[y0 + arm_len - thickness : y0 + arm_len, x0 : x0 + arm_len] = True
    return BinaryMask(m)


def random_mask(rng, min_size=4, max_size=64) -> BinaryMask:
    """A mask of varied structure: noise, blob unions, solids, sparse."""
    h = int(rng.integers(min_size, max_size + 1))
    w = int(rng.integers(min_size, max_size + 1))
    kind = int(rng.integers(0, 6))
    if kind == 0:
        return BinaryMask(rng.random((h, w)) < float(rng.choice([0.2, 0.5, 0.8])))
    if kind == 1:
        m = np.zeros((h, w), dtype=bool)
        for _ in range(int(rng.integers(1, 5))):
            cy, cx = int(rng.integers(0, h)), int(rng.integers(0, w))
            r = int(rng.integers(2, max(3, min(h, w) // 2)))
            m |= disk_raster(h, w, cy, cx, r)
        return BinaryMask(m)
    if kind == 2:
        return BinaryMask(np.ones((h, w), dtype=bool))
    if kind == 3:
        return BinaryMask(np.zeros((h, w), dtype=bool))
    if kind == 4:
        m = np.zeros((h, w), dtype=bool)
        m[1 : max(2, h - 1), 1 : max(2, w - 1)] = True
        m[h // 3 : max(h // 3 + 1, 2 * h // 3), w // 3 : max(w // 3 + 1, 2 * w // 3)] = False
        return BinaryMask(m)
    return BinaryMask(rng.random((h, w)) < 0.95)


def random_scheme(rng, max_bins=6) -> QuantizationScheme:
    """A random strictly increasing radius table starting at 0."""
    bins = int(rng.integers(2, max_bins + 1))
    steps = rng.integers(1, 4, size=bins - 1)
    radii = [0]
    for s in steps:
        radii.append(radii[-1] + int(s))
    cap = radii[-1] + int(rng.integers(0, 4))
    return QuantizationScheme(bins, cap, tuple(radii))


def random_one_hot(rng, scheme, min_size=4, max_size=40) -> BitPlaneStack:
    h = int(rng.integers(min_size, max_size + 1))
    w = int(rng.integers(min_size, max_size + 1))
    idx = rng.integers(0, scheme.bins, size=(h, w))
    planes = idx[None, :, :] == np.arange(scheme.bins)[:, None, None]
    return BitPlaneStack(planes, scheme)


def tight_box(mask: BinaryMask) -> Box:
    """Bounding box of the object pixels (half-open)."""
    ys, xs = np.nonzero(mask.pixels)
    return Box(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)
