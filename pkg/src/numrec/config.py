"""Run configuration: every tunable knob of the pipeline in one record.

Configs serialize to plain "key=value" text (one pair per line, '#' starts
a comment).  The same text block is embedded in persisted ensembles so a
model always carries the knobs it was trained with.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .imaging import INK_DARK, POLARITIES, ZoneGrid, make_zone_grid
from .chaincode import GLYPH_SIZE

VOTER_TAGS = ("dcc_knn", "dcc_lc", "rlc_knn", "rlc_lc")
GRID_PRESETS = {"10x10": (10, 10), "3x3": (3, 3)}


class ConfigError(ValueError):
    """A configuration value is out of its domain."""


@dataclass(frozen=True)
class RunConfig:
    dcc_grid: str = "10x10"
    knn_k: int = 3
    ridge: float = 1e-3
    normalize_dcc: bool = True
    normalize_rlc: bool = False
    tie_break_order: tuple[str, ...] = VOTER_TAGS
    split_fraction: float = 0.8
    seed: int = 0
    ink_polarity: str = INK_DARK

    def validate(self) -> "RunConfig":
        if self.dcc_grid not in GRID_PRESETS:
            raise ConfigError(f"dcc_grid must be one of {sorted(GRID_PRESETS)}")
        if self.knn_k < 1:
            raise ConfigError("knn_k must be >= 1")
        if self.ridge < 0:
            raise ConfigError("ridge must be >= 0")
        if sorted(self.tie_break_order) != sorted(VOTER_TAGS):
            raise ConfigError(f"tie_break_order must be a permutation of {VOTER_TAGS}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError("split_fraction must lie strictly between 0 and 1")
        if self.ink_polarity not in POLARITIES:
            raise ConfigError(f"ink_polarity must be one of {POLARITIES}")
        return self

    def grid(self) -> ZoneGrid:
        rows, cols = GRID_PRESETS[self.dcc_grid]
        return make_zone_grid(GLYPH_SIZE, GLYPH_SIZE, rows, cols)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "tie_break_order":
                value = ",".join(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "tie_break_order":
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    if key in ("knn_k", "seed"):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
    if key in ("ridge", "split_fraction"):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from None
    if key in ("normalize_dcc", "normalize_rlc"):
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key} must be a boolean, got {raw!r}")
    return raw


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse key=value lines on top of a base config; unknown keys are rejected."""
    cfg = base if base is not None else RunConfig()
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        updates[key] = _parse_value(key, raw)
    return replace(cfg, **updates).validate()
