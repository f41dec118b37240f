"""Zoned run-length-count features.

A run-length count is the number of 0<->1 transitions between adjacent
pixels along a scan direction; no implicit border pixel is assumed.  The
extractor splits a 72x72 binary glyph into 3x3 zones of 24x24 and emits
one horizontal and one vertical count per zone: 18 features, zone-major,
horizontal before vertical.
"""

from __future__ import annotations

import numpy as np

from .imaging import as_binary, make_zone_grid, resize_binary, zone_views

RLC_SIZE = 72
RLC_GRID = (3, 3)
RLC_DIM = RLC_GRID[0] * RLC_GRID[1] * 2


def horizontal_rlc(zone) -> int:
    """Adjacent-pixel value changes scanning each row left to right, summed."""
    z = as_binary(zone)
    return int(np.count_nonzero(z[:, 1:] != z[:, :-1]))


def vertical_rlc(zone) -> int:
    """Adjacent-pixel value changes scanning each column top to bottom, summed."""
    z = as_binary(zone)
    return int(np.count_nonzero(z[1:, :] != z[:-1, :]))


def extract_rlc(img72) -> np.ndarray:
    """18 transition counts over the 3x3 zoning of a 72x72 glyph."""
    z = as_binary(img72)
    if z.shape != (RLC_SIZE, RLC_SIZE):
        raise ValueError(f"expected {RLC_SIZE}x{RLC_SIZE}")
    grid = make_zone_grid(RLC_SIZE, RLC_SIZE, *RLC_GRID)
    out = np.empty(RLC_DIM, dtype=np.int64)
    i = 0
    for _, _, zone in zone_views(z, grid):
        out[i] = horizontal_rlc(zone)
        out[i + 1] = vertical_rlc(zone)
        i += 2
    return out


def rlc_pipeline(binary_glyph) -> np.ndarray:
    """Full route from a binary glyph: resize to 72x72, extract the counts."""
    return extract_rlc(resize_binary(binary_glyph, RLC_SIZE, RLC_SIZE))
