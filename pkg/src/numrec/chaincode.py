"""Directional chain-code features from glyph outlines.

Outlines are followed with Moore neighbor tracing: from each boundary
pixel the 8-neighborhood is scanned clockwise, starting just past the
background pixel the walk backtracked from, and the first ink pixel found
becomes the next boundary pixel.  Outer outlines come out clockwise and
hole outlines counter-clockwise (in image coordinates, rows growing
downward), so every closed boundary of every 8-connected component is
captured.

Each move between consecutive boundary pixels is encoded as a Freeman
direction code.  Image rows grow downward, so the usual y-up angles map to
these (drow, dcol) steps:

    code  (drow, dcol)   angle
    0     ( 0, +1)         0
    1     (-1, +1)        45
    2     (-1,  0)        90
    3     (-1, -1)       135
    4     ( 0, -1)       180
    5     (+1, -1)      -135
    6     (+1,  0)       -90
    7     (+1, +1)       -45

The per-block histograms of these codes over a normalized 30x30 glyph are
the feature vector: grid rows x cols x 8 counts, flattened block-major
with the 8 directions contiguous per block.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .imaging import ZoneGrid, as_binary, crop_to_bounding_box, make_zone_grid, resize_binary

# Freeman code -> (drow, dcol) step, image coordinates.
STEPS = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))
CODE_OF_STEP = {step: code for code, step in enumerate(STEPS)}

# 8-neighborhood offsets in clockwise screen order, starting at north.
_RING = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
_RING_INDEX = {off: i for i, off in enumerate(_RING)}

_FG_OFFSETS = _RING  # ink components are 8-connected
_BG_OFFSETS = ((-1, 0), (0, -1), (0, 1), (1, 0))  # background regions are 4-connected

GLYPH_SIZE = 30  # normalized glyph edge length for this extractor


@dataclass(frozen=True)
class ChainCodeSequence:
    """One closed boundary: a start pixel and the Freeman codes of the loop."""

    start: tuple[int, int]
    codes: tuple[int, ...]

    def replay(self) -> list[tuple[int, int]]:
        """Pixels visited by the codes; first and last entry are the start."""
        r, c = self.start
        out = [(r, c)]
        for code in self.codes:
            dr, dc = STEPS[code]
            r += dr
            c += dc
            out.append((r, c))
        return out


def find_contour_points(img) -> set[tuple[int, int]]:
    """Ink pixels with at least one background 4-neighbor.

    Positions outside the image count as background, so ink on the image
    border is always part of the contour.
    """
    b = as_binary(img)
    padded = np.zeros((b.shape[0] + 2, b.shape[1] + 2), dtype=np.uint8)
    padded[1:-1, 1:-1] = b
    has_bg_4neighbor = (
        (padded[:-2, 1:-1] == 0)
        | (padded[2:, 1:-1] == 0)
        | (padded[1:-1, :-2] == 0)
        | (padded[1:-1, 2:] == 0)
    )
    mask = (b == 1) & has_bg_4neighbor
    return {(int(r), int(c)) for r, c in np.argwhere(mask)}


def _label_regions(mask: np.ndarray, offsets) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """BFS labeling of True regions; labels start at 1 in row-major discovery
    order, so the seed pixel of each region is its topmost-then-leftmost."""
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    seeds: list[tuple[int, int]] = []
    for r in range(h):
        for c in range(w):
            if mask[r, c] and labels[r, c] == 0:
                seeds.append((r, c))
                label = len(seeds)
                labels[r, c] = label
                queue = deque([(r, c)])
                while queue:
                    cr, cc = queue.popleft()
                    for dr, dc in offsets:
                        nr, nc = cr + dr, cc + dc
                        if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] and labels[nr, nc] == 0:
                            labels[nr, nc] = label
                            queue.append((nr, nc))
    return labels, seeds


def _moore_trace(b: np.ndarray, start: tuple[int, int], backtrack: tuple[int, int]):
    """Follow one closed boundary from a seed state.

    The walk is a deterministic map on (pixel, backtrack) states, so it
    must eventually revisit a state; the pixels between the two visits are
    the closed loop.  An isolated pixel (no ink neighbor) yields an empty
    code list.

    Returns (pixels, codes) where codes[i] is the move pixels[i] ->
    pixels[(i+1) % n]; the loop is closed.
    """
    h, w = b.shape

    def step(p, bk):
        pr, pc = p
        i = _RING_INDEX[(bk[0] - pr, bk[1] - pc)]
        last_bg = bk
        for j in range(1, 9):
            dr, dc = _RING[(i + j) % 8]
            nr, nc = pr + dr, pc + dc
            if 0 <= nr < h and 0 <= nc < w and b[nr, nc]:
                return (nr, nc), last_bg
            last_bg = (nr, nc)
        return None, None

    state = (start, backtrack)
    seen = {state: 0}
    pixels = [start]
    while True:
        nxt, new_bk = step(*state)
        if nxt is None:
            return [start], []
        state = (nxt, new_bk)
        if state in seen:
            loop = pixels[seen[state] :]
            codes = []
            n = len(loop)
            for i in range(n):
                fr, fc = loop[i]
                tr, tc = loop[(i + 1) % n]
                codes.append(CODE_OF_STEP[(tr - fr, tc - fc)])
            return loop, codes
        seen[state] = len(pixels)
        pixels.append(nxt)


def _as_sequence(pixels, codes) -> ChainCodeSequence:
    """Rotate a closed loop so it starts at its topmost-then-leftmost pixel."""
    if not codes:
        return ChainCodeSequence(pixels[0], ())
    k = min(range(len(pixels)), key=lambda i: pixels[i])
    return ChainCodeSequence(pixels[k], tuple(codes[k:] + codes[:k]))


def trace_contours(img, contour: set[tuple[int, int]] | None = None) -> list[ChainCodeSequence]:
    """Every closed boundary of the image: outer boundaries and hole
    boundaries of each 8-connected ink component.

    Sequences are emitted per component in row-major component order,
    outer boundary first, then the component's holes in row-major order.
    Each traversal starts at the topmost-then-leftmost pixel of its loop.
    When a contour set (from find_contour_points) is supplied, the trace
    is checked against it and a stray visit raises RuntimeError.
    """
    b = as_binary(img)
    comp_labels, comp_seeds = _label_regions(b == 1, _FG_OFFSETS)
    bg_labels, bg_seeds = _label_regions(b == 0, _BG_OFFSETS)

    # Background regions touching the border are outside; the rest are holes.
    h, w = b.shape
    border = np.concatenate((bg_labels[0, :], bg_labels[-1, :], bg_labels[:, 0], bg_labels[:, -1]))
    exterior = set(int(x) for x in np.unique(border[border > 0]))

    holes_by_comp: dict[int, list[ChainCodeSequence]] = {}
    for idx, (hr, hc) in enumerate(bg_seeds):
        if idx + 1 in exterior:
            continue
        # The ink pixel above a hole's topmost-leftmost pixel is on the hole
        # boundary; backtracking from the hole pixel circles the hole.
        start = (hr - 1, hc)
        seq = _as_sequence(*_moore_trace(b, start, (hr, hc)))
        owner = int(comp_labels[start])
        holes_by_comp.setdefault(owner, []).append(seq)

    sequences: list[ChainCodeSequence] = []
    for idx, seed in enumerate(comp_seeds):
        # For a component's topmost-leftmost pixel the west neighbor is
        # always background, which orients the outer walk clockwise.
        outer = _as_sequence(*_moore_trace(b, seed, (seed[0], seed[1] - 1)))
        sequences.append(outer)
        sequences.extend(sorted(holes_by_comp.get(idx + 1, []), key=lambda s: s.start))

    if contour is not None:
        for seq in sequences:
            stray = set(seq.replay()) - contour
            if stray:
                raise RuntimeError(f"trace left the contour set at {sorted(stray)[:3]}")
    return sequences


def default_grid() -> ZoneGrid:
    """10x10 blocks over the 30x30 glyph: 800 features."""
    return make_zone_grid(GLYPH_SIZE, GLYPH_SIZE, 10, 10)


def compact_grid() -> ZoneGrid:
    """3x3 blocks over the 30x30 glyph: 72 features."""
    return make_zone_grid(GLYPH_SIZE, GLYPH_SIZE, 3, 3)


def extract_dcc(img30, grid: ZoneGrid | None = None) -> np.ndarray:
    """Per-block direction histograms of all traced boundaries.

    Each chain-code step is binned by the block containing the step's
    starting pixel.  The result is flattened block-major, the 8 direction
    counts contiguous per block; its sum equals the total number of steps.
    An all-background image yields the zero vector.
    """
    b = as_binary(img30)
    if grid is None:
        grid = default_grid()
    if b.shape != (grid.rows * grid.cell_height, grid.cols * grid.cell_width):
        raise ValueError("grid does not partition image")
    hist = np.zeros((grid.rows, grid.cols, 8), dtype=np.int64)
    for seq in trace_contours(b):
        r, c = seq.start
        for code in seq.codes:
            hist[r // grid.cell_height, c // grid.cell_width, code] += 1
            dr, dc = STEPS[code]
            r += dr
            c += dc
    return hist.reshape(-1)


def dcc_pipeline(binary_glyph, grid: ZoneGrid | None = None) -> np.ndarray:
    """Full route from a binary glyph: crop to the ink bounding box, resize
    to 30x30, extract the directional features."""
    cropped = crop_to_bounding_box(binary_glyph)
    return extract_dcc(resize_binary(cropped, GLYPH_SIZE, GLYPH_SIZE), grid)
