"""Four-voter ensemble: {chain-code, run-length} features x {KNN, linear}
classifiers, merged by majority vote.

Votes only are fused; classifier confidences are surfaced for diagnostics
but never influence the decision.  Ties (2-2 or all-distinct) fall to the
highest-priority voter whose vote is among the tied classes; the default
priority is the voter order dcc_knn > dcc_lc > rlc_knn > rlc_lc.

Persisted ensemble layout (little-endian), version 1:

    8 bytes   magic b"NUMRECE1"
    2 bytes   u16 length of config block
    n bytes   config block (UTF-8 key=value lines)
    4 blocks, voter order dcc_knn, dcc_lc, rlc_knn, rlc_lc, each:
      4 bytes u32 model length, then the model container bytes
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chaincode import dcc_pipeline
from .classifiers import (
    KnnModel,
    LabeledSample,
    LinearModel,
    dump_model_bytes,
    knn_predict,
    knn_train,
    linear_predict,
    linear_train,
    load_model_bytes,
)
from .config import VOTER_TAGS, ConfigError, RunConfig, parse_config_text
from .data_io import write_bytes_atomic
from .runlength import RLC_DIM, rlc_pipeline

ENSEMBLE_MAGIC = b"NUMRECE1"

DIGIT_CLASSES = tuple(range(10))


@dataclass(frozen=True)
class VoteResult:
    label: int
    counts: dict[int, int]
    tie_break: bool
    deciding_voter: int | None  # index into the vote list when a tie fired


def majority_vote(votes: Sequence[int], priority: Sequence[int] | None = None) -> VoteResult:
    """Most-voted class; ties fall to the first priority voter among the tied.

    A strict majority therefore always wins, and the result is always one
    of the given votes.
    """
    if not votes:
        raise ConfigError("no votes to merge")
    order = list(priority) if priority is not None else list(range(len(votes)))
    counts = Counter(int(v) for v in votes)
    top = max(counts.values())
    tied = {c for c, n in counts.items() if n == top}
    if len(tied) == 1:
        return VoteResult(next(iter(tied)), dict(counts), False, None)
    for i in order:
        if int(votes[i]) in tied:
            return VoteResult(int(votes[i]), dict(counts), True, i)
    raise AssertionError("unreachable: some vote always carries the top count")


@dataclass(frozen=True)
class FusionPrediction:
    label: int
    votes: tuple[int, ...]  # aligned with VOTER_TAGS
    tie_break: bool
    deciding_voter: str | None


@dataclass(frozen=True)
class FusionEnsemble:
    voters: tuple[tuple[str, object], ...]  # (tag, model) in VOTER_TAGS order
    config: RunConfig

    def __post_init__(self):
        tags = tuple(tag for tag, _ in self.voters)
        if tags != VOTER_TAGS:
            raise ConfigError(f"expected voters {VOTER_TAGS}, got {tags}")
        grid = self.config.grid()
        dcc_dim = grid.rows * grid.cols * 8
        for tag, model in self.voters:
            want = dcc_dim if tag.startswith("dcc") else RLC_DIM
            if not isinstance(model, (KnnModel, LinearModel)):
                raise ConfigError(f"voter {tag} is not a trained model")
            if model.dim != want:
                raise ConfigError(
                    f"voter {tag} dimension {model.dim} does not match extractor dim {want}"
                )

    def model(self, tag: str):
        for t, m in self.voters:
            if t == tag:
                return m
        raise KeyError(tag)


def _priority_indices(config: RunConfig) -> list[int]:
    return [VOTER_TAGS.index(tag) for tag in config.tie_break_order]


def extract_features(binary_glyph, config: RunConfig) -> dict[str, np.ndarray]:
    """Both feature vectors for one glyph, each route run once."""
    return {
        "dcc": dcc_pipeline(binary_glyph, config.grid()),
        "rlc": rlc_pipeline(binary_glyph),
    }


def train_ensemble(train: Sequence[tuple[np.ndarray, int]], config: RunConfig) -> FusionEnsemble:
    """Extract both feature sets once per sample and train all four voters.

    Training data must cover all ten digit classes.
    """
    config = config.validate()
    present = {int(label) for _, label in train}
    missing = [c for c in DIGIT_CLASSES if c not in present]
    if missing:
        raise ValueError(f"class with zero samples: {missing}")

    dcc_samples: list[LabeledSample] = []
    rlc_samples: list[LabeledSample] = []
    for img, label in train:
        feats = extract_features(img, config)
        dcc_samples.append(LabeledSample(feats["dcc"], int(label)))
        rlc_samples.append(LabeledSample(feats["rlc"], int(label)))

    voters = (
        ("dcc_knn", knn_train(dcc_samples, config.knn_k, normalize=config.normalize_dcc)),
        ("dcc_lc", linear_train(dcc_samples, config.ridge, normalize=config.normalize_dcc)),
        ("rlc_knn", knn_train(rlc_samples, config.knn_k, normalize=config.normalize_rlc)),
        ("rlc_lc", linear_train(rlc_samples, config.ridge, normalize=config.normalize_rlc)),
    )
    return FusionEnsemble(voters=voters, config=config)


def fuse_predict(ens: FusionEnsemble, binary_glyph) -> FusionPrediction:
    """Run both extractors and all four voters on one glyph and merge."""
    feats = extract_features(binary_glyph, ens.config)
    votes = []
    for tag, model in ens.voters:
        x = feats[tag[:3]]
        if isinstance(model, KnnModel):
            label, _ = knn_predict(model, x)
        else:
            label, _ = linear_predict(model, x)
        votes.append(label)
    result = majority_vote(votes, _priority_indices(ens.config))
    return FusionPrediction(
        label=result.label,
        votes=tuple(votes),
        tie_break=result.tie_break,
        deciding_voter=None if result.deciding_voter is None else VOTER_TAGS[result.deciding_voter],
    )


# --- persistence ----------------------------------------------------------


def dump_ensemble_bytes(ens: FusionEnsemble) -> bytes:
    config_blob = ens.config.to_text().encode("utf-8")
    if len(config_blob) > 0xFFFF:
        raise ValueError("config block too large")
    out = bytearray()
    out += ENSEMBLE_MAGIC
    out += struct.pack("<H", len(config_blob))
    out += config_blob
    for tag, model in ens.voters:
        blob = dump_model_bytes(model, extractor_tag=tag[:3])
        out += struct.pack("<I", len(blob))
        out += blob
    return bytes(out)


def load_ensemble_bytes(data: bytes) -> FusionEnsemble:
    if data[:8] != ENSEMBLE_MAGIC:
        raise ValueError("unexpected magic: not an ensemble file")
    pos = 8
    if pos + 2 > len(data):
        raise ValueError("truncated ensemble file")
    (config_len,) = struct.unpack_from("<H", data, pos)
    pos += 2
    if pos + config_len > len(data):
        raise ValueError("truncated ensemble file")
    config = parse_config_text(data[pos : pos + config_len].decode("utf-8"))
    pos += config_len
    voters = []
    for tag in VOTER_TAGS:
        if pos + 4 > len(data):
            raise ValueError("truncated ensemble file")
        (blob_len,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + blob_len > len(data):
            raise ValueError("truncated ensemble file")
        model, _ = load_model_bytes(data[pos : pos + blob_len])
        pos += blob_len
        voters.append((tag, model))
    if pos != len(data):
        raise ValueError("trailing bytes in ensemble file")
    return FusionEnsemble(voters=tuple(voters), config=config)


def save_ensemble(ens: FusionEnsemble, path) -> None:
    write_bytes_atomic(path, dump_ensemble_bytes(ens))


def load_ensemble(path) -> FusionEnsemble:
    with open(path, "rb") as f:
        return load_ensemble_bytes(f.read())
