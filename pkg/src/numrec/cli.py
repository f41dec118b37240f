"""Command-line entry point.

Subcommands: extract, train, eval, predict, gen-synthetic.  Every knob can
come from flags or from a plain key=value config file (--config); flags
win.  Exit codes: 0 ok, 1 usage, 2 data error, 3 config error.  Output
files are written to a temp path and renamed, never left half-written.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace

from .chaincode import dcc_pipeline
from .config import GRID_PRESETS, VOTER_TAGS, ConfigError, RunConfig, parse_config_text
from .data_io import (
    Dataset,
    dataset_fingerprint,
    generate_synthetic,
    load_idx,
    load_image,
    load_image_dir,
    sample_hash,
    write_idx,
    write_bytes_atomic,
    write_text_atomic,
)
from .evaluation import (
    SYSTEMS,
    confusion_csv,
    evaluate,
    evaluate_repeated,
    render_repeat_summary,
    render_report,
    stratified_split_indices,
)
from .fusion import fuse_predict, load_ensemble, dump_ensemble_bytes, train_ensemble
from .imaging import POLARITIES, binarize_auto
from .runlength import rlc_pipeline

MANIFEST_SUFFIX = ".manifest.json"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems instead of argparse's 2
        raise _UsageError(message)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; explicit flags win")
    p.add_argument("--seed", type=int, help="single RNG seed for all randomness (config key seed)")
    p.add_argument("--k", type=int, dest="knn_k", help="neighbor count for the KNN voters (config key knn_k)")
    p.add_argument("--ridge", type=float, help="least-squares regularizer for the linear voters (config key ridge)")
    p.add_argument("--dcc-grid", choices=sorted(GRID_PRESETS), help="chain-code block grid over the 30x30 glyph (config key dcc_grid)")
    p.add_argument("--split", type=float, dest="split_fraction", help="training fraction for the stratified split (config key split_fraction)")
    p.add_argument("--normalize-dcc", action=argparse.BooleanOptionalAction, default=None, help="L2-normalize chain-code features (config key normalize_dcc)")
    p.add_argument("--normalize-rlc", action=argparse.BooleanOptionalAction, default=None, help="L2-normalize run-length features (config key normalize_rlc)")
    p.add_argument("--ink-polarity", choices=POLARITIES, help="which side of the threshold is ink (config key ink_polarity)")
    p.add_argument("--tie-break-order", help=f"comma list permuting {','.join(VOTER_TAGS)} (config key tie_break_order)")


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", choices=("idx", "dir", "synthetic"), required=True)
    p.add_argument("--images", help="IDX image file (with --dataset idx)")
    p.add_argument("--labels", help="IDX label file (with --dataset idx)")
    p.add_argument("--root", help="root of a <digit>/<file> tree (with --dataset dir)")
    p.add_argument("--count-per-class", type=int, default=10, help="samples per digit (with --dataset synthetic)")
    p.add_argument("--no-jitter", action="store_true", help="render bare archetypes (with --dataset synthetic)")


def build_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
        cfg = parse_config_text(text, base=cfg)
    overrides = {}
    for key in ("seed", "knn_k", "ridge", "dcc_grid", "split_fraction",
                "normalize_dcc", "normalize_rlc", "ink_polarity"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    tie = getattr(args, "tie_break_order", None)
    if tie is not None:
        overrides["tie_break_order"] = tuple(part.strip() for part in tie.split(",") if part.strip())
    return replace(cfg, **overrides).validate()


def load_dataset(args, cfg: RunConfig) -> Dataset:
    if args.dataset == "idx":
        if not args.images or not args.labels:
            raise _UsageError("--dataset idx requires --images and --labels")
        return load_idx(args.images, args.labels)
    if args.dataset == "dir":
        if not args.root:
            raise _UsageError("--dataset dir requires --root")
        return load_image_dir(args.root)
    return generate_synthetic(cfg.seed, args.count_per_class, jitter=not args.no_jitter)


def _binarized(ds: Dataset, cfg: RunConfig):
    return [(binarize_auto(img, cfg.ink_polarity), label) for img, label in ds.samples]


def cmd_extract(args) -> int:
    cfg = build_config(args)
    ds = load_dataset(args, cfg)
    rows = []
    dim = None
    for img, label in ds.samples:
        binary = binarize_auto(img, cfg.ink_polarity)
        if args.extractor == "dcc":
            feats = dcc_pipeline(binary, cfg.grid())
        else:
            feats = rlc_pipeline(binary)
        dim = len(feats)
        rows.append(str(int(label)) + "," + ",".join(str(int(v)) for v in feats))
    if dim is None:
        raise ValueError("dataset is empty; nothing to extract")
    header = "label," + ",".join(f"{args.extractor}_{i}" for i in range(dim))
    write_text_atomic(args.out, header + "\n" + "\n".join(rows) + "\n")
    print(f"wrote {len(rows)} samples x {dim} {args.extractor} features to {args.out}")
    return 0


def _write_manifest(path, ds, cfg, train_idx, test_idx) -> None:
    train_hashes = sorted(sample_hash(*ds.samples[i]) for i in train_idx)
    manifest = {
        "version": 1,
        "dataset_source": ds.source,
        "dataset_fingerprint": dataset_fingerprint(ds),
        "seed": cfg.seed,
        "split_fraction": cfg.split_fraction,
        "train_size": len(train_idx),
        "test_size": len(test_idx),
        "train_indices": train_idx,
        "test_indices": test_idx,
        "train_sample_hashes": train_hashes,
        "config": cfg.to_text(),
    }
    write_text_atomic(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_train(args) -> int:
    cfg = build_config(args)
    ds = load_dataset(args, cfg)
    train_idx, test_idx = stratified_split_indices(ds, cfg.split_fraction, cfg.seed)
    train = ds.subset(train_idx)
    ens = train_ensemble(_binarized(train, cfg), cfg)
    write_bytes_atomic(args.out, dump_ensemble_bytes(ens))
    _write_manifest(args.out + MANIFEST_SUFFIX, ds, cfg, train_idx, test_idx)
    print(
        f"trained 4 voters on {len(train_idx)} samples "
        f"({len(test_idx)} held out); model written to {args.out}"
    )
    return 0


def _load_manifest(model_path) -> dict:
    path = model_path + MANIFEST_SUFFIX
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as exc:
        raise ValueError(f"cannot read split manifest {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed split manifest {path}: {exc}") from None


def cmd_eval(args) -> int:
    ens = load_ensemble(args.model)
    manifest = _load_manifest(args.model)
    cfg = build_config(args)
    ds = load_dataset(args, cfg)

    if dataset_fingerprint(ds) == manifest["dataset_fingerprint"]:
        test = ds.subset(manifest["test_indices"], "[test]")
    else:
        train_hashes = set(manifest["train_sample_hashes"])
        overlap = sum(1 for s in ds.samples if sample_hash(*s) in train_hashes)
        if overlap:
            raise ValueError(
                f"refusing to evaluate: {overlap} of {len(ds)} samples "
                "appear in the training manifest"
            )
        test = ds

    report = evaluate(ens, test, split_seed=manifest["seed"], threads=args.threads)

    out_dir = args.out or os.path.join(
        "runs", time.strftime("%Y%m%d-%H%M%S") + f"-seed{manifest['seed']}"
    )
    os.makedirs(out_dir, exist_ok=True)
    markdown = render_report(report, "markdown")
    write_text_atomic(os.path.join(out_dir, "report.md"), markdown)
    write_text_atomic(os.path.join(out_dir, "report.csv"), render_report(report, "csv"))
    for system in SYSTEMS:
        write_text_atomic(
            os.path.join(out_dir, f"confusion_{system}.csv"), confusion_csv(report, system)
        )
    print(markdown)

    if args.repeats > 1:
        # re-run the whole split/train/eval protocol on consecutive seeds
        summary = evaluate_repeated(ds, ens.config, args.repeats)
        text = render_repeat_summary(summary)
        write_text_atomic(os.path.join(out_dir, "repeats.txt"), text)
        print(text)

    print(f"reports written to {out_dir}")
    return 0


def cmd_predict(args) -> int:
    ens = load_ensemble(args.model)
    img = load_image(args.image)
    pred = fuse_predict(ens, binarize_auto(img, ens.config.ink_polarity))
    print(f"label: {pred.label}")
    print("votes: " + " ".join(f"{tag}={v}" for tag, v in zip(VOTER_TAGS, pred.votes)))
    if pred.tie_break:
        print(f"tie-break applied: yes ({pred.deciding_voter})")
    else:
        print("tie-break applied: no")
    return 0


def cmd_gen_synthetic(args) -> int:
    cfg = build_config(args)
    ds = generate_synthetic(cfg.seed, args.count_per_class, jitter=not args.no_jitter)
    write_idx(ds, args.out_images, args.out_labels)
    print(
        f"wrote {len(ds)} synthetic samples (seed {cfg.seed}) to "
        f"{args.out_images} / {args.out_labels}"
    )
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="numrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("extract", help="extract a feature matrix to CSV")
    _add_dataset_flags(p)
    _add_config_flags(p)
    p.add_argument("--extractor", choices=("dcc", "rlc"), required=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the four-voter ensemble on a stratified split")
    _add_dataset_flags(p)
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="output model path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained ensemble; refuses train/test overlap")
    _add_dataset_flags(p)
    _add_config_flags(p)
    p.add_argument("--model", required=True, help="trained ensemble path")
    p.add_argument("--out", help="report directory (default runs/<timestamp>-seed<seed>)")
    p.add_argument("--threads", type=int, default=1, help="worker cap for evaluation")
    p.add_argument("--repeats", type=int, default=1,
                   help="also rerun split/train/eval on this many consecutive seeds "
                        "and report mean/stddev")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify one image file")
    p.add_argument("--model", required=True, help="trained ensemble path")
    p.add_argument("--image", required=True, help="image file to classify")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gen-synthetic", help="write the synthetic fixture corpus as an IDX pair")
    _add_config_flags(p)
    p.add_argument("--count-per-class", type=int, default=10)
    p.add_argument("--no-jitter", action="store_true")
    p.add_argument("--out-images", required=True)
    p.add_argument("--out-labels", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args) or 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
