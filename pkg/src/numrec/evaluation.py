"""Evaluation harness: stratified splitting, per-class accuracy, confusion
matrices, and report rendering for the four voters plus the fused system.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ConfigError
from .data_io import Dataset
from .fusion import DIGIT_CLASSES, FusionEnsemble, fuse_predict
from .imaging import binarize_auto

# Report column order; the fused system comes last.
SYSTEMS = ("rlc_knn", "rlc_lc", "dcc_knn", "dcc_lc", "fusion")
SYSTEM_TITLES = {
    "rlc_knn": "RLC+KNN",
    "rlc_lc": "RLC+LC",
    "dcc_knn": "DCC+KNN",
    "dcc_lc": "DCC+LC",
    "fusion": "Fusion",
}


@dataclass
class EvalReport:
    per_class_accuracy: dict[str, dict[int, float]]  # system -> class -> percent
    averages: dict[str, float]  # system -> unweighted mean over classes present
    confusion: dict[str, np.ndarray]  # system -> 10x10 counts, rows = true class
    split_seed: int
    train_size: int
    test_size: int


def stratified_split_indices(
    ds: Dataset, train_fraction: float, seed: int
) -> tuple[list[int], list[int]]:
    """Index form of stratified_split: (train indices, test indices), both
    ascending.  Deterministic in (dataset, fraction, seed)."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError("train_fraction must lie strictly between 0 and 1")
    by_class: dict[int, list[int]] = {}
    for i, (_, label) in enumerate(ds.samples):
        by_class.setdefault(int(label), []).append(i)
    for c, idxs in sorted(by_class.items()):
        if len(idxs) < 2:
            raise ValueError(f"class {c} has fewer than 2 samples; cannot split")

    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for c in sorted(by_class):
        idxs = np.asarray(by_class[c])
        perm = idxs[rng.permutation(len(idxs))]
        n_train = int(train_fraction * len(idxs))
        n_train = min(max(n_train, 1), len(idxs) - 1)
        train_idx.extend(int(i) for i in perm[:n_train])
        test_idx.extend(int(i) for i in perm[n_train:])
    return sorted(train_idx), sorted(test_idx)


def stratified_split(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Per-class seeded shuffle; floor(fraction * n) to train, at least one
    sample on each side."""
    train_idx, test_idx = stratified_split_indices(ds, train_fraction, seed)
    return ds.subset(train_idx, "[train]"), ds.subset(test_idx, "[test]")


def evaluate(
    ens: FusionEnsemble, test: Dataset, split_seed: int = -1, threads: int = 1
) -> EvalReport:
    """Run every voter and the fusion on each test sample.

    Predictions are independent per sample, so they may run on a thread
    pool; results land in fixed slots and are identical to a serial run.
    """
    if len(test) == 0:
        raise ValueError("test dataset is empty")

    polarity = ens.config.ink_polarity

    def predict(sample):
        img, label = sample
        pred = fuse_predict(ens, binarize_auto(img, polarity))
        return int(label), pred

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(predict, test.samples))
    else:
        results = [predict(s) for s in test.samples]

    confusion = {s: np.zeros((10, 10), dtype=np.int64) for s in SYSTEMS}
    voter_index = {tag: i for i, (tag, _) in enumerate(ens.voters)}
    for label, pred in results:
        for system in SYSTEMS[:-1]:
            confusion[system][label, pred.votes[voter_index[system]]] += 1
        confusion["fusion"][label, pred.label] += 1

    per_class: dict[str, dict[int, float]] = {}
    averages: dict[str, float] = {}
    for system in SYSTEMS:
        m = confusion[system]
        accs: dict[int, float] = {}
        for c in DIGIT_CLASSES:
            row_total = int(m[c].sum())
            if row_total > 0:
                accs[c] = 100.0 * int(m[c, c]) / row_total
        per_class[system] = accs
        averages[system] = float(np.mean(list(accs.values())))

    train_size = ens.model("dcc_knn").features.shape[0]
    return EvalReport(
        per_class_accuracy=per_class,
        averages=averages,
        confusion=confusion,
        split_seed=split_seed,
        train_size=train_size,
        test_size=len(test),
    )


@dataclass
class RepeatSummary:
    """Averages of repeated split/train/eval runs over consecutive seeds."""

    seeds: list[int]
    averages: dict[str, list[float]]  # system -> per-seed average accuracy

    def mean(self, system: str) -> float:
        return float(np.mean(self.averages[system]))

    def stddev(self, system: str) -> float:
        return float(np.std(self.averages[system]))


def evaluate_repeated(ds: Dataset, config, repeats: int) -> RepeatSummary:
    """Re-run the whole protocol (split, train, evaluate) on seeds
    config.seed .. config.seed + repeats - 1."""
    from .fusion import train_ensemble

    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    seeds = [config.seed + i for i in range(repeats)]
    averages: dict[str, list[float]] = {s: [] for s in SYSTEMS}
    for seed in seeds:
        train, test = stratified_split(ds, config.split_fraction, seed)
        corpus = [(binarize_auto(img, config.ink_polarity), y) for img, y in train.samples]
        ens = train_ensemble(corpus, config)
        report = evaluate(ens, test, split_seed=seed)
        for system in SYSTEMS:
            averages[system].append(report.averages[system])
    return RepeatSummary(seeds=seeds, averages=averages)


def render_repeat_summary(summary: RepeatSummary) -> str:
    lines = [f"repeats: {len(summary.seeds)} (seeds {summary.seeds[0]}..{summary.seeds[-1]})"]
    for system in SYSTEMS:
        lines.append(
            f"{SYSTEM_TITLES[system]}: mean {summary.mean(system):.2f} "
            f"stddev {summary.stddev(system):.2f}"
        )
    return "\n".join(lines) + "\n"


def _row_values(report: EvalReport, c: int | None) -> list[str]:
    out = []
    for system in SYSTEMS:
        if c is None:
            out.append(f"{report.averages[system]:.2f}")
        else:
            acc = report.per_class_accuracy[system].get(c)
            out.append("" if acc is None else f"{acc:.2f}")
    return out


def render_report(report: EvalReport, format: str = "markdown") -> str:
    """Accuracy table: one row per class 0-9 plus the Avg row, five system
    columns.  Markdown and CSV renderings carry identical numbers."""
    header = ["Class"] + [SYSTEM_TITLES[s] for s in SYSTEMS]
    rows = [[str(c)] + _row_values(report, c) for c in DIGIT_CLASSES]
    rows.append(["Avg"] + _row_values(report, None))

    if format == "csv":
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        for row in rows:
            buf.write(",".join(row) + "\n")
        return buf.getvalue()
    if format == "markdown":
        widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
        def fmt(row):
            return "| " + " | ".join(v.ljust(w) for v, w in zip(row, widths)) + " |"
        lines = [fmt(header), "| " + " | ".join("-" * w for w in widths) + " |"]
        lines.extend(fmt(row) for row in rows)
        meta = (
            f"\ntrain={report.train_size} test={report.test_size} "
            f"split_seed={report.split_seed}\n"
        )
        return "\n".join(lines) + "\n" + meta
    raise ConfigError(f"unknown report format {format!r}")


def confusion_csv(report: EvalReport, system: str) -> str:
    """One confusion matrix as CSV; rows are true classes, columns predicted."""
    m = report.confusion[system]
    buf = io.StringIO()
    buf.write("true\\pred," + ",".join(str(c) for c in DIGIT_CLASSES) + "\n")
    for c in DIGIT_CLASSES:
        buf.write(str(c) + "," + ",".join(str(int(v)) for v in m[c]) + "\n")
    return buf.getvalue()
