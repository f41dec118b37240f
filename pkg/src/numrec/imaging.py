"""Grayscale and binary raster utilities shared by both feature extractors.

Images are plain 2-D numpy arrays: grayscale rasters hold uint8
intensities in [0, 255]; binary rasters hold {0, 1} with 1 = ink.
All functions are pure (inputs are never mutated) and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INK_DARK = "ink_dark"
INK_LIGHT = "ink_light"
POLARITIES = (INK_DARK, INK_LIGHT)


def as_gray(img) -> np.ndarray:
    """Validate a grayscale raster and return it as a 2-D uint8 array."""
    a = np.asarray(img)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("expected a non-empty 2-D grayscale raster")
    if a.dtype != np.uint8:
        if np.any((a < 0) | (a > 255)):
            raise ValueError("intensities must lie in [0, 255]")
        a = a.astype(np.uint8)
    return a


def as_binary(img) -> np.ndarray:
    """Validate a binary raster ({0, 1}, 1 = ink) and return it as uint8."""
    a = np.asarray(img)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("expected a non-empty 2-D binary raster")
    if a.dtype != np.uint8:
        a = a.astype(np.uint8, casting="unsafe")
    if np.any(a > 1):
        raise ValueError("binary raster must contain only 0 and 1")
    return a


def otsu_threshold(img) -> int:
    """Threshold maximizing the between-class variance of the 256-bin histogram.

    Pixels <= t form one class, pixels > t the other.  Ties are broken by
    the smallest maximizing t.  A constant image returns its single
    intensity (degenerate: one class is empty for every split).

    Variances are compared in exact integer arithmetic, so the result
    equals an exhaustive scan over all 256 candidate thresholds bit for
    bit: sigma_b(t) = w0*w1*(mu0-mu1)^2 = (s0*w1 - s1*w0)^2 / (w0*w1).
    """
    a = as_gray(img)
    lo, hi = int(a.min()), int(a.max())
    if lo == hi:
        return lo
    hist = np.bincount(a.ravel(), minlength=256)
    total = int(a.size)
    total_sum = int(np.dot(hist, np.arange(256, dtype=np.int64)))

    best_t = 0
    best_num, best_den = -1, 1  # running max of num/den
    w0 = 0
    s0 = 0
    for t in range(256):
        w0 += int(hist[t])
        s0 += t * int(hist[t])
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            num, den = 0, 1
        else:
            d = s0 * w1 - (total_sum - s0) * w0
            num, den = d * d, w0 * w1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def binarize(img, threshold: int, polarity: str = INK_DARK) -> np.ndarray:
    """Threshold a grayscale raster into {0, 1} with 1 = ink.

    ink_dark maps pixel <= threshold to 1 (dark ink on light paper);
    ink_light maps pixel > threshold to 1.
    """
    a = as_gray(img)
    if polarity == INK_DARK:
        return (a <= threshold).astype(np.uint8)
    if polarity == INK_LIGHT:
        return (a > threshold).astype(np.uint8)
    raise ValueError(f"unknown ink polarity {polarity!r}")


def binarize_auto(img, polarity: str = INK_DARK) -> np.ndarray:
    """Otsu threshold followed by binarize."""
    return binarize(img, otsu_threshold(img), polarity)


def crop_to_bounding_box(img) -> np.ndarray:
    """Minimal axis-aligned rectangle containing all ink pixels."""
    b = as_binary(img)
    rows = np.flatnonzero(b.any(axis=1))
    cols = np.flatnonzero(b.any(axis=0))
    if rows.size == 0:
        raise ValueError("empty glyph")
    return b[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1].copy()


def resize_binary(img, out_w: int, out_h: int) -> np.ndarray:
    """Nearest-neighbor resize; output stays binary.

    Source index for output index i is floor(i * in_size / out_size), so
    resizing to the input dimensions is the identity.
    """
    b = as_binary(img)
    if out_w <= 0 or out_h <= 0:
        raise ValueError("output dimensions must be positive")
    in_h, in_w = b.shape
    rr = (np.arange(out_h) * in_h) // out_h
    cc = (np.arange(out_w) * in_w) // out_w
    return b[np.ix_(rr, cc)].copy()


@dataclass(frozen=True)
class ZoneGrid:
    """Exact partition of an image into rows x cols equal blocks."""

    rows: int
    cols: int
    cell_height: int
    cell_width: int

    def zone_of(self, row: int, col: int) -> tuple[int, int]:
        """Zone (zr, zc) containing pixel (row, col)."""
        return row // self.cell_height, col // self.cell_width


def make_zone_grid(img_w: int, img_h: int, rows: int, cols: int) -> ZoneGrid:
    """Build the grid partitioning an img_w x img_h image into rows x cols zones."""
    if rows <= 0 or cols <= 0:
        raise ValueError("zone counts must be positive")
    if img_h % rows != 0 or img_w % cols != 0:
        raise ValueError("grid does not partition image")
    return ZoneGrid(rows, cols, img_h // rows, img_w // cols)


def zone_views(img, grid: ZoneGrid):
    """Yield (zr, zc, view) for each zone, zone-major (row by row)."""
    b = np.asarray(img)
    if b.shape != (grid.rows * grid.cell_height, grid.cols * grid.cell_width):
        raise ValueError("grid does not partition image")
    for zr in range(grid.rows):
        for zc in range(grid.cols):
            yield zr, zc, b[
                zr * grid.cell_height : (zr + 1) * grid.cell_height,
                zc * grid.cell_width : (zc + 1) * grid.cell_width,
            ]
