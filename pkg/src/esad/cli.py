"""Command-line pipeline: prepare, extract, train, quantize, evaluate, infer, plot.

Config precedence is defaults < config file < command-line flags. Every
command writes a `<command>_manifest.json` next to its outputs recording
the command, resolved config, seed, inputs/outputs, duration, and tool
version. All other outputs are byte-deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .audio import WavError
from .dataset import (
    DEFAULT_LABEL_MAPPING,
    BinaryLabel,
    MetadataError,
    SplitSpec,
    format_label_mapping,
    format_split_manifest,
    label_records,
    parse_label_mapping,
    parse_metadata,
    parse_split_manifest,
    stratified_split,
)
from .features import (
    CacheFormatError,
    MfccConfig,
    fit_norm_stats,
    mfcc_config_hash,
    normalize_vectors,
    read_feature_cache,
    read_norm_stats,
    write_feature_cache,
    write_norm_stats,
)
from .metrics import evaluate_scores
from .model_io import ModelFormatError, load_path, save_path
from .network import DenseModel, TrainConfig, TrainHistory, forward, train
from .pipeline import classify_wav, wav_to_vector
from .plots import confusion_matrix_svg, line_chart_svg, pr_svg, roc_svg
from .quant import QuantizedModel, calibrate, quantize_weights, quantized_forward

DATA_DIR_ENV = "ESAD_DATA_DIR"
PARTITIONS = ("train", "validation", "test")


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- config

_CONFIG_KEYS = {
    "mfcc.sample_rate": int,
    "mfcc.frame_len": int,
    "mfcc.hop": int,
    "mfcc.fft_size": int,
    "mfcc.n_mels": int,
    "mfcc.n_mfcc": int,
    "mfcc.fmin": float,
    "mfcc.fmax": float,
    "mfcc.log_floor": float,
    "mfcc.clip_samples": int,
    "split.train_fraction": float,
    "split.validation_fraction": float,
    "train.learning_rate": float,
    "train.batch_size": int,
    "train.max_epochs": int,
    "train.dropout_rate": float,
    "train.early_stopping_patience": int,
    "train.plateau_patience": int,
    "train.plateau_factor": float,
    "train.min_lr": float,
    "train.monitor": str,
    "quant.calib_size": int,
    "quant.clip_fraction": float,
}


def load_config_file(path) -> dict:
    values = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError("config.parse", f"{path}:{line_no}: expected 'key = value'")
        key, text = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise CliError("config.parse", f"{path}:{line_no}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](text)
        except ValueError as exc:
            raise CliError("config.parse", f"{path}:{line_no}: {exc}") from exc
    return values


def _resolve(config: dict, key: str, flag_value, default):
    if flag_value is not None:
        return flag_value
    return config.get(key, default)


def build_mfcc_config(args, config: dict) -> MfccConfig:
    defaults = MfccConfig()
    kwargs = {}
    for field in (
        "sample_rate", "frame_len", "hop", "fft_size", "n_mels",
        "n_mfcc", "fmin", "fmax", "log_floor", "clip_samples",
    ):
        kwargs[field] = _resolve(config, f"mfcc.{field}", None, getattr(defaults, field))
    try:
        return MfccConfig(**kwargs)
    except ValueError as exc:
        raise CliError("config.parse", f"invalid front-end config: {exc}") from exc


# ---------------------------------------------------------------- manifests

def write_run_manifest(out_dir: Path, command: str, *, seed, config, inputs, outputs, started, duration):
    manifest = {
        "command": command,
        "tool_version": __version__,
        "seed": seed,
        "config": config,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": {k: str(v) for k, v in outputs.items()},
        "started_utc": datetime.fromtimestamp(started, tz=timezone.utc).isoformat(),
        "duration_s": round(duration, 3),
    }
    path = out_dir / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def read_extract_manifest(features_dir: Path) -> dict:
    path = features_dir / "extract_manifest.json"
    if not path.is_file():
        raise CliError("io.missing_input", f"expected extract manifest at {path}")
    return json.loads(path.read_text())


def mfcc_config_from_manifest(manifest: dict) -> MfccConfig:
    return MfccConfig(**manifest["config"]["mfcc"])


# ---------------------------------------------------------------- dataset layout

def locate_dataset(args):
    root = args.data_dir or os.environ.get(DATA_DIR_ENV)
    if not root:
        raise CliError(
            "usage", f"no dataset directory: pass --data-dir or set {DATA_DIR_ENV}"
        )
    root = Path(root)
    if not root.is_dir():
        raise CliError("io.missing_input", f"dataset directory {root} does not exist")
    metadata = None
    for candidate in ("metadata/UrbanSound8K.csv", "UrbanSound8K.csv", "metadata.csv"):
        if (root / candidate).is_file():
            metadata = root / candidate
            break
    if metadata is None:
        raise CliError("dataset.metadata", f"no metadata CSV found under {root}")
    audio_root = root / "audio" if (root / "audio").is_dir() else root
    return root, metadata, audio_root


def clip_path(audio_root: Path, fold: int, file_name: str) -> Path:
    return audio_root / f"fold{fold}" / file_name


# ---------------------------------------------------------------- commands

def cmd_prepare(args, config):
    started = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    root, metadata_path, audio_root = locate_dataset(args)

    if args.mapping:
        mapping = parse_label_mapping(Path(args.mapping).read_text())
    else:
        mapping = dict(DEFAULT_LABEL_MAPPING)
    excluded_classes = sorted(name for name, v in mapping.items() if v == "excluded")

    records = parse_metadata(metadata_path.read_text())
    kept, labels, n_excluded = label_records(records, mapping)

    missing = 0
    present, present_labels = [], []
    for rec, label in zip(kept, labels):
        if clip_path(audio_root, rec.fold, rec.file_name).is_file():
            present.append(rec)
            present_labels.append(label)
        else:
            missing += 1
    if missing:
        print(f"warning: {missing} listed files are missing on disk and were dropped")

    spec = SplitSpec(
        train_fraction=_resolve(config, "split.train_fraction", args.train_fraction, 0.8),
        validation_fraction_of_train=_resolve(
            config, "split.validation_fraction", args.validation_fraction, 0.2
        ),
        seed=args.seed,
    )
    split = stratified_split(present_labels, spec)

    manifest_path = out_dir / "split_manifest.tsv"
    manifest_path.write_text(format_split_manifest(present, present_labels, split))
    (out_dir / "label_mapping.txt").write_text(format_label_mapping(mapping))

    n_normal = sum(1 for l in present_labels if l == BinaryLabel.NORMAL)
    n_anomalous = len(present_labels) - n_normal
    counts = {
        "records_in_metadata": len(records),
        "excluded_by_mapping": n_excluded,
        "excluded_classes": excluded_classes,
        "missing_files": missing,
        "included": len(present),
        "normal": n_normal,
        "anomalous": n_anomalous,
        "partitions": {p: int(getattr(split, p).size) for p in PARTITIONS},
    }
    print(
        f"prepared {counts['included']} clips: {n_normal} normal / {n_anomalous} anomalous; "
        + ", ".join(f"{p}={counts['partitions'][p]}" for p in PARTITIONS)
    )
    write_run_manifest(
        out_dir, "prepare",
        seed=args.seed,
        config={
            "mapping": mapping,
            "split": {
                "train_fraction": spec.train_fraction,
                "validation_fraction_of_train": spec.validation_fraction_of_train,
            },
            "counts": counts,
        },
        inputs={"dataset": root, "metadata": metadata_path},
        outputs={"split_manifest": manifest_path},
        started=started, duration=time.time() - started,
    )


def cmd_extract(args, config):
    started = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, _, audio_root = locate_dataset(args)
    cfg = build_mfcc_config(args, config)

    splits_path = Path(args.splits) if args.splits else Path(args.out) / "split_manifest.tsv"
    if not splits_path.is_file():
        raise CliError("io.missing_input", f"expected split manifest at {splits_path}")
    entries = parse_split_manifest(splits_path.read_text())

    # fold is not in the manifest; recover it from the dataset layout
    def find_path(file_name: str) -> Path | None:
        for fold in range(1, 11):
            p = clip_path(audio_root, fold, file_name)
            if p.is_file():
                return p
        return None

    def extract_one(entry):
        file_name, _, _ = entry
        path = find_path(file_name)
        if path is None:
            return None, f"{file_name}: not found"
        try:
            return wav_to_vector(path.read_bytes(), cfg), None
        except WavError as exc:
            return None, f"{file_name}: {exc}"

    workers = max(1, args.workers)
    if workers == 1:
        results = [extract_one(e) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(extract_one, entries))

    dropped = [err for _, err in results if err is not None]
    if len(dropped) > 0.05 * max(len(entries), 1):
        raise CliError(
            "audio.unreadable_ratio",
            f"{len(dropped)} of {len(entries)} clips unreadable (>5%); first: {dropped[0]}",
        )
    for err in dropped:
        print(f"warning: dropped {err}")

    by_partition = {p: ([], []) for p in PARTITIONS}
    for idx, ((vec, err), (_, partition, _)) in enumerate(zip(results, entries)):
        if err is None:
            ids, vecs = by_partition[partition]
            ids.append(idx)
            vecs.append(vec)

    train_ids, train_vecs = by_partition["train"]
    if not train_vecs:
        raise CliError("features.cache", "no readable training clips")
    stats = fit_norm_stats(np.array(train_vecs))
    write_norm_stats(out_dir / "norm_stats.esns", stats)

    outputs = {"norm_stats": out_dir / "norm_stats.esns"}
    counts = {}
    for partition in PARTITIONS:
        ids, vecs = by_partition[partition]
        cache_path = out_dir / f"{partition}.esfc"
        write_feature_cache(cache_path, np.array(ids, dtype=np.uint32),
                            np.array(vecs, dtype=np.float32) if vecs else np.zeros((0, cfg.feature_dim), np.float32))
        outputs[partition] = cache_path
        counts[partition] = len(ids)

    print(
        f"extracted {sum(counts.values())} clips "
        + ", ".join(f"{p}={counts[p]}" for p in PARTITIONS)
        + (f"; dropped {len(dropped)}" if dropped else "")
    )
    write_run_manifest(
        out_dir, "extract",
        seed=args.seed,
        config={
            "mfcc": asdict(cfg),
            "mfcc_hash": mfcc_config_hash(cfg),
            "counts": counts,
            "dropped": dropped,
        },
        inputs={"splits": splits_path, "audio_root": audio_root},
        outputs=outputs,
        started=started, duration=time.time() - started,
    )


def _load_partition(features_dir: Path, splits_path: Path, partition_names):
    if not splits_path.is_file():
        raise CliError("io.missing_input", f"expected split manifest at {splits_path}")
    entries = parse_split_manifest(splits_path.read_text())
    ids_all, vecs_all = [], []
    for name in partition_names:
        cache_path = features_dir / f"{name}.esfc"
        if not cache_path.is_file():
            raise CliError("io.missing_input", f"expected feature cache at {cache_path}")
        ids, vecs = read_feature_cache(cache_path)
        if ids.size:
            ids_all.append(ids)
            vecs_all.append(vecs)
    if not ids_all:
        raise CliError("features.cache", f"no vectors in partitions {partition_names}")
    ids = np.concatenate(ids_all)
    vecs = np.concatenate(vecs_all).astype(np.float64)
    labels = np.array([int(entries[i][2]) for i in ids], dtype=np.int64)
    return ids, vecs, labels


def cmd_train(args, config):
    started = time.time()
    features_dir = Path(args.features) if args.features else Path(args.out)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    splits_path = Path(args.splits) if args.splits else features_dir / "split_manifest.tsv"

    extract_manifest = read_extract_manifest(features_dir)
    cfg = mfcc_config_from_manifest(extract_manifest)
    stats = read_norm_stats(features_dir / "norm_stats.esns")

    _, x_train, y_train = _load_partition(features_dir, splits_path, ("train",))
    _, x_val, y_val = _load_partition(features_dir, splits_path, ("validation",))
    x_train = normalize_vectors(x_train, stats)
    x_val = normalize_vectors(x_val, stats)

    tc = TrainConfig(
        learning_rate=_resolve(config, "train.learning_rate", args.learning_rate, 1e-3),
        batch_size=_resolve(config, "train.batch_size", args.batch_size, 32),
        max_epochs=_resolve(config, "train.max_epochs", args.max_epochs, 50),
        dropout_rate=_resolve(config, "train.dropout_rate", args.dropout_rate, 0.2),
        early_stopping_patience=_resolve(
            config, "train.early_stopping_patience", args.patience, 5
        ),
        plateau_patience=_resolve(config, "train.plateau_patience", None, 3),
        plateau_factor=_resolve(config, "train.plateau_factor", None, 0.5),
        min_lr=_resolve(config, "train.min_lr", None, 1e-5),
        monitor=_resolve(config, "train.monitor", None, "val_loss"),
        seed=args.seed,
    )

    def progress(epoch, _model, row):
        print(
            f"epoch {epoch:3d}: loss {row['train_loss']:.4f} acc {row['train_acc']:.4f} "
            f"val_loss {row['val_loss']:.4f} val_acc {row['val_acc']:.4f} lr {row['lr']:.2g}"
        )

    try:
        model, history, best_epoch = train(
            x_train, y_train, x_val, y_val, tc,
            epoch_callback=progress if not args.quiet else None,
        )
    except FloatingPointError as exc:
        raise CliError("train.diverged", str(exc)) from exc
    model.norm_stats = stats
    model.mfcc = cfg

    model_path = out_dir / "model_float.esad"
    history_path = out_dir / "history.csv"
    save_path(model, model_path)
    history_path.write_text(history.to_csv())
    print(
        f"trained {len(history)} epochs (best {best_epoch}); "
        f"final val_acc {history.column('val_acc')[-1]:.4f}; wrote {model_path}"
    )
    write_run_manifest(
        out_dir, "train",
        seed=args.seed,
        config={"train": asdict(tc), "mfcc_hash": mfcc_config_hash(cfg)},
        inputs={"features": features_dir, "splits": splits_path},
        outputs={"model": model_path, "history": history_path},
        started=started, duration=time.time() - started,
    )


def cmd_quantize(args, config):
    started = time.time()
    features_dir = Path(args.features) if args.features else Path(args.out)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = Path(args.model) if args.model else out_dir / "model_float.esad"
    if not model_path.is_file():
        raise CliError("io.missing_input", f"expected float model at {model_path}")
    model = load_path(model_path)
    if not isinstance(model, DenseModel):
        raise CliError("model.format", f"{model_path} is not a float model")

    splits_path = Path(args.splits) if args.splits else features_dir / "split_manifest.tsv"
    _, x_train, _ = _load_partition(features_dir, splits_path, ("train",))
    x_train = normalize_vectors(x_train, model.norm_stats)

    calib_size = _resolve(config, "quant.calib_size", args.calib_size, 1000)
    clip_fraction = _resolve(config, "quant.clip_fraction", None, 0.0)
    if calib_size < x_train.shape[0]:
        rng = np.random.default_rng(args.seed)
        rep = x_train[rng.choice(x_train.shape[0], size=calib_size, replace=False)]
    else:
        rep = x_train

    qparams = calibrate(model, rep, clip_fraction=clip_fraction)
    qmodel = quantize_weights(model, qparams)
    out_path = out_dir / "model_int8.esad"
    n_bytes = save_path(qmodel, out_path)
    print(f"quantized model written to {out_path} ({n_bytes} bytes)")
    write_run_manifest(
        out_dir, "quantize",
        seed=args.seed,
        config={
            "calib_size": int(rep.shape[0]),
            "clip_fraction": clip_fraction,
            "file_bytes": n_bytes,
        },
        inputs={"model": model_path, "features": features_dir},
        outputs={"model": out_path},
        started=started, duration=time.time() - started,
    )


def _model_scores(model, vecs):
    if isinstance(model, QuantizedModel):
        x = normalize_vectors(vecs, model.norm_stats)
        return np.asarray(quantized_forward(model, x), dtype=np.float64)
    x = normalize_vectors(vecs, model.norm_stats)
    return np.asarray(forward(model, x), dtype=np.float64)


def cmd_evaluate(args, config):
    started = time.time()
    features_dir = Path(args.features) if args.features else Path(args.out)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    splits_path = Path(args.splits) if args.splits else features_dir / "split_manifest.tsv"

    extract_manifest = read_extract_manifest(features_dir)
    cache_hash = extract_manifest["config"]["mfcc_hash"]

    partitions = ("test",) if args.population == "test" else PARTITIONS
    _, vecs, labels = _load_partition(features_dir, splits_path, partitions)

    flavors = {}
    for flavor, flag, default_name in (
        ("float32", args.float_model, "model_float.esad"),
        ("int8", args.int8_model, "model_int8.esad"),
    ):
        path = Path(flag) if flag else out_dir / default_name
        if not path.is_file():
            raise CliError("io.missing_input", f"expected {flavor} model at {path}")
        model = load_path(path)
        if model.mfcc is None or mfcc_config_hash(model.mfcc) != cache_hash:
            raise CliError(
                "config.mismatch",
                f"{path} was built with a different front-end config than the feature "
                f"cache in {features_dir}",
            )
        flavors[flavor] = (path, model)

    reports = {}
    outputs = {}
    for flavor, (path, model) in flavors.items():
        scores = _model_scores(model, vecs)
        report = evaluate_scores(scores, labels, threshold=args.threshold)
        reports[flavor] = report
        roc_csv = out_dir / f"roc_{flavor}.csv"
        pr_csv = out_dir / f"pr_{flavor}.csv"
        roc_csv.write_text(
            "fpr,tpr\n"
            + "".join(f"{f:.9g},{t:.9g}\n" for f, t in zip(report.roc_points["fpr"], report.roc_points["tpr"]))
        )
        pr_csv.write_text(
            "recall,precision\n"
            + "".join(f"{r:.9g},{p:.9g}\n" for r, p in zip(report.pr_points["recall"], report.pr_points["precision"]))
        )
        outputs[f"roc_{flavor}"] = roc_csv
        outputs[f"pr_{flavor}"] = pr_csv

    comparison = {
        flavor: {
            "accuracy": round(r.accuracy, 6),
            "f1": round(r.per_class["anomalous"]["f1"], 6),
            "roc_auc": round(r.roc_auc, 6),
            "average_precision": round(r.average_precision, 6),
        }
        for flavor, r in reports.items()
    }
    print(f"{'model':<22}{'accuracy':>10}{'f1':>10}{'roc_auc':>10}{'avg_prec':>10}")
    for flavor, name in (("float32", "original (float32)"), ("int8", "quantized (int8)")):
        row = comparison[flavor]
        print(
            f"{name:<22}{row['accuracy']:>10.3f}{row['f1']:>10.3f}"
            f"{row['roc_auc']:>10.3f}{row['average_precision']:>10.3f}"
        )

    report_doc = {
        "population": args.population,
        "threshold": args.threshold,
        "mfcc_hash": cache_hash,
        "examples": int(labels.size),
        "comparison": comparison,
        "models": {flavor: reports[flavor].to_dict() for flavor in reports},
    }
    report_path = out_dir / "eval_report.json"
    report_path.write_text(json.dumps(report_doc, indent=2, sort_keys=True) + "\n")
    outputs["report"] = report_path
    write_run_manifest(
        out_dir, "evaluate",
        seed=args.seed,
        config={"population": args.population, "threshold": args.threshold},
        inputs={"features": features_dir,
                **{f"model_{f}": p for f, (p, _) in flavors.items()}},
        outputs=outputs,
        started=started, duration=time.time() - started,
    )


def cmd_infer(args, config):
    model_path = Path(args.model)
    if not model_path.is_file():
        raise CliError("io.missing_input", f"expected model at {model_path}")
    wav_path = Path(args.wav)
    if not wav_path.is_file():
        raise CliError("io.missing_input", f"expected WAV file at {wav_path}")
    model = load_path(model_path)
    wav_bytes = wav_path.read_bytes()
    t0 = time.perf_counter()
    label, prob = classify_wav(model, wav_bytes, threshold=args.threshold)
    latency_ms = (time.perf_counter() - t0) * 1e3
    name = "anomalous" if label else "normal"
    print(f"label={name} probability={prob:.4f} latency_ms={latency_ms:.2f}")


def cmd_plot(args, config):
    started = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {}

    if args.history:
        history = TrainHistory.from_csv(Path(args.history).read_text())
        epochs = history.column("epoch")
        acc_svg = line_chart_svg(
            [("train", epochs, history.column("train_acc")),
             ("validation", epochs, history.column("val_acc"))],
            title="Training and validation accuracy",
            xlabel="epoch", ylabel="accuracy",
        )
        loss_svg = line_chart_svg(
            [("train", epochs, history.column("train_loss")),
             ("validation", epochs, history.column("val_loss"))],
            title="Training and validation loss",
            xlabel="epoch", ylabel="loss",
        )
        (out_dir / "accuracy.svg").write_text(acc_svg)
        (out_dir / "loss.svg").write_text(loss_svg)
        outputs["accuracy"] = out_dir / "accuracy.svg"
        outputs["loss"] = out_dir / "loss.svg"

    if args.report:
        doc = json.loads(Path(args.report).read_text())
        for flavor, report in doc.get("models", {}).items():
            conf = report["confusion"]
            (out_dir / f"confusion_{flavor}.svg").write_text(
                confusion_matrix_svg(
                    conf["tn"], conf["fp"], conf["fn"], conf["tp"],
                    title=f"Confusion matrix ({flavor})",
                )
            )
            (out_dir / f"roc_{flavor}.svg").write_text(
                roc_svg(report["roc_points"]["fpr"], report["roc_points"]["tpr"],
                        report["roc_auc"])
            )
            (out_dir / f"pr_{flavor}.svg").write_text(
                pr_svg(report["pr_points"]["recall"], report["pr_points"]["precision"],
                       report["average_precision"])
            )
            for kind in ("confusion", "roc", "pr"):
                outputs[f"{kind}_{flavor}"] = out_dir / f"{kind}_{flavor}.svg"

    if not outputs:
        raise CliError("usage", "nothing to plot: pass --history and/or --report")
    print("wrote " + ", ".join(str(p) for p in outputs.values()))
    write_run_manifest(
        out_dir, "plot",
        seed=args.seed,
        config={},
        inputs={k: v for k, v in (("history", args.history), ("report", args.report)) if v},
        outputs=outputs,
        started=started, duration=time.time() - started,
    )


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esad",
        description="Acoustic anomaly detection pipeline: MFCC features, a compact "
        "dense classifier, int8 post-training quantization, and evaluation.",
    )
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    parser.add_argument("--config", default=None, help="key = value config file")
    parser.add_argument("--out", default="esad_out", help="output directory (default esad_out)")
    parser.add_argument(
        "--population", choices=("test", "all"), default="test",
        help="evaluation population: held-out test split or every included clip",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="parse metadata, map labels, write the split manifest")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--mapping", default=None, help="class_name = normal|anomalous|excluded file")
    p.add_argument("--train-fraction", type=float, default=None)
    p.add_argument("--validation-fraction", type=float, default=None)
    p.set_defaults(handler=cmd_prepare)

    p = sub.add_parser("extract", help="decode audio and write per-partition feature caches")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--splits", default=None, help="split manifest path (default <out>/split_manifest.tsv)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("train", help="train the float model from cached features")
    p.add_argument("--features", default=None, help="features directory (default <out>)")
    p.add_argument("--splits", default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--dropout-rate", type=float, default=None)
    p.add_argument("--patience", type=int, default=None, help="early stopping patience")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("quantize", help="calibrate and quantize a trained float model")
    p.add_argument("--model", default=None, help="float model path (default <out>/model_float.esad)")
    p.add_argument("--features", default=None)
    p.add_argument("--splits", default=None)
    p.add_argument("--calib-size", type=int, default=None)
    p.set_defaults(handler=cmd_quantize)

    p = sub.add_parser("evaluate", help="score both model flavors and emit the report")
    p.add_argument("--features", default=None)
    p.add_argument("--splits", default=None)
    p.add_argument("--float-model", default=None)
    p.add_argument("--int8-model", default=None)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("infer", help="classify a single WAV file with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("wav")
    p.set_defaults(handler=cmd_infer)

    p = sub.add_parser("plot", help="emit SVG figures from a history CSV and/or eval report")
    p.add_argument("--history", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(handler=cmd_plot)

    return parser


_ERROR_CODES = (
    (MetadataError, "dataset.metadata"),
    (WavError, "audio.decode"),
    (CacheFormatError, "features.cache"),
    (ModelFormatError, "model.format"),
    (FileNotFoundError, "io.missing_input"),
    (ValueError, "invalid_value"),
    (OSError, "io.error"),
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = load_config_file(args.config) if args.config else {}
    try:
        args.handler(args, config)
        return 0
    except CliError as exc:
        print(f"error[{exc.code}] {exc}", file=sys.stderr)
        return 2
    except tuple(cls for cls, _ in _ERROR_CODES) as exc:
        code = next(code for cls, code in _ERROR_CODES if isinstance(exc, cls))
        print(f"error[{code}] {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
