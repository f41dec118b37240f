"""Dataset ingestion and fixture generation.

Three sources are supported:

* IDX image/label archives, the big-endian binary container used by the
  public handwritten-digit corpora,
* directory trees root/<digit>/<file> of grayscale image files,
* deterministic synthetic glyph fixtures rendered in-process.

All loaders are deterministic: the same inputs produce the same sample
order and bytes.
"""

from __future__ import annotations

import hashlib
import os
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .imaging import as_gray

# IDX format (big endian):
#   images: u32 magic 0x00000803, u32 count, u32 rows, u32 cols, then
#           count*rows*cols pixel bytes (row-major per image)
#   labels: u32 magic 0x00000801, u32 count, then count label bytes
IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass
class Dataset:
    """Immutable-by-convention list of (grayscale image, label) pairs."""

    samples: list[tuple[np.ndarray, int]]
    source: str = ""
    class_set: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        for img, label in self.samples:
            if not 0 <= int(label) <= 9:
                raise ValueError(f"label {label} outside [0, 9]")
            as_gray(img)
        self.class_set = tuple(sorted({int(label) for _, label in self.samples}))

    def __len__(self) -> int:
        return len(self.samples)

    def subset(self, indices, source_suffix: str = "") -> "Dataset":
        return Dataset(
            samples=[self.samples[i] for i in indices],
            source=self.source + source_suffix,
        )


def write_bytes_atomic(path, data: bytes) -> None:
    """Write via a temp file and rename, so failures never leave a partial file."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def write_text_atomic(path, text: str) -> None:
    write_bytes_atomic(path, text.encode("utf-8"))


def load_idx(images_path, labels_path) -> Dataset:
    """Parse an IDX image/label archive pair."""
    with open(images_path, "rb") as f:
        raw = f.read()
    if len(raw) < 16:
        raise ValueError(f"truncated IDX image file {images_path}")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise ValueError(f"unexpected magic 0x{magic:08x} in {images_path}")
    expected = 16 + count * rows * cols
    if len(raw) != expected:
        raise ValueError(
            f"IDX image payload length mismatch in {images_path}: "
            f"declared {expected - 16} pixel bytes, found {len(raw) - 16}"
        )
    images = np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, rows, cols)

    with open(labels_path, "rb") as f:
        lraw = f.read()
    if len(lraw) < 8:
        raise ValueError(f"truncated IDX label file {labels_path}")
    lmagic, lcount = struct.unpack(">II", lraw[:8])
    if lmagic != IDX_LABEL_MAGIC:
        raise ValueError(f"unexpected magic 0x{lmagic:08x} in {labels_path}")
    if len(lraw) != 8 + lcount:
        raise ValueError(
            f"IDX label payload length mismatch in {labels_path}: "
            f"declared {lcount} labels, found {len(lraw) - 8} bytes"
        )
    if count != lcount:
        raise ValueError(f"image count {count} does not match label count {lcount}")
    labels = np.frombuffer(lraw, dtype=np.uint8, offset=8)
    samples = [(images[i].copy(), int(labels[i])) for i in range(count)]
    return Dataset(samples=samples, source=f"idx:{images_path}")


def write_idx(dataset: Dataset, images_path, labels_path) -> None:
    """Serialize a dataset as an IDX pair; all images must share one shape."""
    if not dataset.samples:
        raise ValueError("cannot write an empty dataset")
    shape = dataset.samples[0][0].shape
    for img, _ in dataset.samples:
        if img.shape != shape:
            raise ValueError("IDX requires all images to share one shape")
    count = len(dataset.samples)
    blob = bytearray(struct.pack(">IIII", IDX_IMAGE_MAGIC, count, shape[0], shape[1]))
    for img, _ in dataset.samples:
        blob += as_gray(img).tobytes()
    write_bytes_atomic(images_path, bytes(blob))

    lblob = bytearray(struct.pack(">II", IDX_LABEL_MAGIC, count))
    lblob += bytes(int(label) for _, label in dataset.samples)
    write_bytes_atomic(labels_path, bytes(lblob))


def load_image(path) -> np.ndarray:
    """Decode one image file to a grayscale raster.

    8-bit grayscale files pass through; color inputs collapse to the plain
    per-pixel channel average.
    """
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return np.asarray(im, dtype=np.uint8)
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
            return np.round(rgb.mean(axis=2)).astype(np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise ValueError(f"unreadable image file {path}: {exc}") from None


def load_image_dir(root_path) -> Dataset:
    """Load a root/<digit>/<file> tree; directory names are the labels.

    Files are taken in lexicographic order so repeated listings are
    identical.  Subdirectories not named 0..9 are skipped with a warning.
    """
    root = os.fspath(root_path)
    samples: list[tuple[np.ndarray, int]] = []
    for name in sorted(os.listdir(root)):
        sub = os.path.join(root, name)
        if not os.path.isdir(sub):
            continue
        if name not in [str(d) for d in range(10)]:
            warnings.warn(f"skipping directory {sub}: not a digit label")
            continue
        label = int(name)
        for fname in sorted(os.listdir(sub)):
            fpath = os.path.join(sub, fname)
            if os.path.isdir(fpath):
                continue
            samples.append((load_image(fpath), label))
    return Dataset(samples=samples, source=f"dir:{root}")


# --- synthetic fixtures ---------------------------------------------------

_CANVAS = 48
_INK = 0
_PAPER = 255


def _stamp(canvas: np.ndarray, r: int, c: int, thickness: int) -> None:
    half = thickness // 2
    r0 = max(0, r - half)
    c0 = max(0, c - half)
    canvas[r0 : max(0, r - half + thickness), c0 : max(0, c - half + thickness)] = _INK


def _line(canvas, r0, c0, r1, c1, thickness) -> None:
    n = 2 * (max(abs(r1 - r0), abs(c1 - c0)) + 1)
    for t in np.linspace(0.0, 1.0, n):
        _stamp(canvas, round(r0 + t * (r1 - r0)), round(c0 + t * (c1 - c0)), thickness)


def _circle(canvas, cr, cc, radius, thickness) -> None:
    for theta in np.linspace(0.0, 2.0 * np.pi, max(16, 8 * radius), endpoint=False):
        _stamp(canvas, round(cr + radius * np.sin(theta)), round(cc + radius * np.cos(theta)), thickness)


def _draw_archetype(canvas, digit, dr, dc, t) -> None:
    top, bot = 8 + dr, 39 + dr
    left, right = 8 + dc, 39 + dc
    mr, mc = (top + bot) // 2, (left + right) // 2
    if digit == 0:
        _circle(canvas, mr, mc, 14, t)
    elif digit == 1:
        _line(canvas, top, mc, bot, mc, t)
    elif digit == 2:  # Z: top bar, falling diagonal, bottom bar
        _line(canvas, top, left, top, right, t)
        _line(canvas, top, right, bot, left, t)
        _line(canvas, bot, left, bot, right, t)
    elif digit == 3:  # X
        _line(canvas, top, left, bot, right, t)
        _line(canvas, top, right, bot, left, t)
    elif digit == 4:  # +
        _line(canvas, top, mc, bot, mc, t)
        _line(canvas, mr, left, mr, right, t)
    elif digit == 5:  # T
        _line(canvas, top, left, top, right, t)
        _line(canvas, top, mc, bot, mc, t)
    elif digit == 6:  # L
        _line(canvas, top, left, bot, left, t)
        _line(canvas, bot, left, bot, right, t)
    elif digit == 7:  # top bar plus falling diagonal
        _line(canvas, top, left, top, right, t)
        _line(canvas, top, right, bot, mc - 4, t)
    elif digit == 8:  # two stacked rings
        _circle(canvas, mr - 8, mc, 7, t)
        _circle(canvas, mr + 8, mc, 7, t)
    elif digit == 9:  # diamond
        _line(canvas, top, mc, mr, right, t)
        _line(canvas, mr, right, bot, mc, t)
        _line(canvas, bot, mc, mr, left, t)
        _line(canvas, mr, left, top, mc, t)
    else:
        raise ValueError(f"no archetype for digit {digit}")


def render_glyph(digit: int, dr: int = 0, dc: int = 0, thickness: int = 2) -> np.ndarray:
    """One dark-ink-on-light-paper glyph image for a digit archetype."""
    canvas = np.full((_CANVAS, _CANVAS), _PAPER, dtype=np.uint8)
    _draw_archetype(canvas, digit, dr, dc, thickness)
    return canvas


def generate_synthetic(seed: int, count_per_class: int, jitter: bool = True) -> Dataset:
    """Deterministic fixture corpus: 10 glyph archetypes with seeded jitter.

    Jitter draws a translation in [-2, 2] pixels per axis and a stroke
    thickness in [1, 3] per sample; with jitter disabled every sample of a
    class is the identical base archetype.
    """
    rng = np.random.default_rng(seed)
    samples: list[tuple[np.ndarray, int]] = []
    for digit in range(10):
        for _ in range(count_per_class):
            if jitter:
                dr, dc = (int(v) for v in rng.integers(-2, 3, size=2))
                t = int(rng.integers(1, 4))
            else:
                dr = dc = 0
                t = 2
            samples.append((render_glyph(digit, dr, dc, t), digit))
    return Dataset(samples=samples, source=f"synthetic:seed={seed}")


# --- sample identity ------------------------------------------------------


def sample_hash(img: np.ndarray, label: int) -> str:
    """Stable identity of one labeled sample (shape, pixels, label)."""
    g = as_gray(img)
    h = hashlib.sha256()
    h.update(struct.pack("<IIB", g.shape[0], g.shape[1], int(label)))
    h.update(g.tobytes())
    return h.hexdigest()


def dataset_fingerprint(ds: Dataset) -> str:
    h = hashlib.sha256()
    for img, label in ds.samples:
        h.update(bytes.fromhex(sample_hash(img, label)))
    return h.hexdigest()
