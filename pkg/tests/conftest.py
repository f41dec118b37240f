import numpy as np
import pytest


def make_ring(pad: int = 1) -> np.ndarray:
    """The lopsided one-pixel-wide ring whose clockwise outer boundary,
    started at the topmost-leftmost pixel, reads 076553221."""
    pixels = [(0, 1), (0, 2), (1, 0), (1, 3), (2, 0), (2, 3), (3, 0), (3, 2), (4, 1)]
    img = np.zeros((5 + 2 * pad, 4 + 2 * pad), dtype=np.uint8)
    for r, c in pixels:
        img[r + pad, c + pad] = 1
    return img


@pytest.fixture
def ring_glyph():
    return make_ring()


def random_binary(rng, h, w, p=0.5):
    return (rng.random((h, w)) < p).astype(np.uint8)
