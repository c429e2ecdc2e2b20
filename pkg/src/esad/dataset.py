"""UrbanSound8K-style metadata parsing, binary labeling, and stratified splits."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

CLASS_NAMES = (
    "air_conditioner",
    "car_horn",
    "children_playing",
    "dog_bark",
    "drilling",
    "engine_idling",
    "gun_shot",
    "jackhammer",
    "siren",
    "street_music",
)

NORMAL = "normal"
ANOMALOUS = "anomalous"
EXCLUDED = "excluded"

# Default grouping of the ten source classes. Steady ambient sources are
# normal; disruptive or impulsive sources are anomalous. car_horn does not
# fit either group cleanly and is excluded by default; the mapping is a
# config-file input, never hardcoded by callers.
DEFAULT_LABEL_MAPPING = {
    "air_conditioner": NORMAL,
    "car_horn": EXCLUDED,
    "children_playing": NORMAL,
    "dog_bark": ANOMALOUS,
    "drilling": ANOMALOUS,
    "engine_idling": NORMAL,
    "gun_shot": ANOMALOUS,
    "jackhammer": ANOMALOUS,
    "siren": ANOMALOUS,
    "street_music": NORMAL,
}


class BinaryLabel(IntEnum):
    NORMAL = 0
    ANOMALOUS = 1


class MetadataError(ValueError):
    """Malformed metadata CSV content."""


@dataclass(frozen=True)
class ClipRecord:
    file_name: str
    fold: int
    class_id: int
    class_name: str
    duration_s: float | None = None


def parse_metadata(csv_text: str) -> list[ClipRecord]:
    """Parse a metadata CSV into clip records, preserving row order.

    Requires at least the columns slice_file_name, fold, classID, class.
    Duration is derived from start/end columns when present.
    """
    reader = csv.DictReader(io.StringIO(csv_text))
    if reader.fieldnames is None:
        raise MetadataError("metadata CSV is empty")
    required = {"slice_file_name", "fold", "classID", "class"}
    missing = required - set(reader.fieldnames)
    if missing:
        raise MetadataError(f"metadata CSV missing columns: {sorted(missing)}")

    records = []
    for line_no, row in enumerate(reader, start=2):
        try:
            file_name = row["slice_file_name"]
            fold = int(row["fold"])
            class_id = int(row["classID"])
            class_name = row["class"]
        except (TypeError, ValueError, KeyError) as exc:
            raise MetadataError(f"line {line_no}: malformed row ({exc})") from exc
        if not file_name:
            raise MetadataError(f"line {line_no}: empty slice_file_name")
        if not 0 <= class_id <= 9:
            raise MetadataError(f"line {line_no}: classID {class_id} out of range 0-9")
        if class_name != CLASS_NAMES[class_id]:
            raise MetadataError(
                f"line {line_no}: class {class_name!r} does not match classID {class_id}"
            )
        if not 1 <= fold <= 10:
            raise MetadataError(f"line {line_no}: fold {fold} out of range 1-10")
        duration = None
        if row.get("start") not in (None, "") and row.get("end") not in (None, ""):
            try:
                duration = float(row["end"]) - float(row["start"])
            except ValueError as exc:
                raise MetadataError(f"line {line_no}: bad start/end ({exc})") from exc
        records.append(ClipRecord(file_name, fold, class_id, class_name, duration))
    return records


def parse_label_mapping(text: str) -> dict[str, str]:
    """Parse a `class_name = normal|anomalous|excluded` mapping file.

    Classes the file does not mention are excluded; callers report those.
    """
    mapping = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MetadataError(f"mapping line {line_no}: expected 'class = value'")
        name, value = (part.strip() for part in line.split("=", 1))
        if name not in CLASS_NAMES:
            raise MetadataError(f"mapping line {line_no}: unknown class {name!r}")
        if value not in (NORMAL, ANOMALOUS, EXCLUDED):
            raise MetadataError(f"mapping line {line_no}: unknown value {value!r}")
        mapping[name] = value
    for name in CLASS_NAMES:
        mapping.setdefault(name, EXCLUDED)
    return mapping


def format_label_mapping(mapping: dict[str, str]) -> str:
    return "".join(f"{name} = {mapping[name]}\n" for name in CLASS_NAMES)


def map_binary_label(class_id: int, mapping: dict[str, str]) -> BinaryLabel | None:
    """Map a source class to its binary label, or None when excluded."""
    if not 0 <= class_id <= 9:
        raise ValueError(f"classID {class_id} out of range 0-9")
    name = CLASS_NAMES[class_id]
    if name not in mapping:
        raise ValueError(f"class {name!r} is not covered by the mapping")
    value = mapping[name]
    if value == EXCLUDED:
        return None
    return BinaryLabel.ANOMALOUS if value == ANOMALOUS else BinaryLabel.NORMAL


def label_records(records, mapping):
    """Apply a mapping to records; returns (kept_records, labels, n_excluded)."""
    kept, labels = [], []
    excluded = 0
    for rec in records:
        label = map_binary_label(rec.class_id, mapping)
        if label is None:
            excluded += 1
        else:
            kept.append(rec)
            labels.append(label)
    return kept, labels, excluded


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    validation_fraction_of_train: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be inside (0, 1)")
        if not 0.0 < self.validation_fraction_of_train < 1.0:
            raise ValueError("validation_fraction_of_train must be inside (0, 1)")


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray

    def partition_of(self) -> dict[int, str]:
        out = {}
        for name in ("train", "validation", "test"):
            for idx in getattr(self, name):
                out[int(idx)] = name
        return out


def stratified_split(labels, spec: SplitSpec) -> Split:
    """Seeded stratified shuffle into train/validation/test index sets.

    Per label: round((1 - train_fraction) * n) indices go to test, then
    round(validation_fraction * remaining) to validation, the rest to train.
    Identical labels + seed always produce identical index sets.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.size == 0:
        raise ValueError("labels must be a non-empty 1-D sequence")
    rng = np.random.default_rng(spec.seed)
    parts = {"train": [], "validation": [], "test": []}
    for value in (BinaryLabel.NORMAL, BinaryLabel.ANOMALOUS):
        idx = np.flatnonzero(labels == int(value))
        if idx.size < 2:
            raise ValueError(
                f"need at least 2 records labeled {value.name.lower()}, got {idx.size}"
            )
        shuffled = rng.permutation(idx)
        n_test = int(round((1.0 - spec.train_fraction) * idx.size))
        n_val = int(round(spec.validation_fraction_of_train * (idx.size - n_test)))
        parts["test"].append(shuffled[:n_test])
        parts["validation"].append(shuffled[n_test : n_test + n_val])
        parts["train"].append(shuffled[n_test + n_val :])
    return Split(
        train=np.sort(np.concatenate(parts["train"])),
        validation=np.sort(np.concatenate(parts["validation"])),
        test=np.sort(np.concatenate(parts["test"])),
    )


def format_split_manifest(records, labels, split: Split) -> str:
    """One `file_name<TAB>partition<TAB>label` line per record, in record order."""
    partition_of = split.partition_of()
    lines = []
    for i, (rec, label) in enumerate(zip(records, labels)):
        name = NORMAL if label == BinaryLabel.NORMAL else ANOMALOUS
        lines.append(f"{rec.file_name}\t{partition_of[i]}\t{name}\n")
    return "".join(lines)


def parse_split_manifest(text: str) -> list[tuple[str, str, BinaryLabel]]:
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        fields = raw.split("\t")
        if len(fields) != 3:
            raise MetadataError(f"manifest line {line_no}: expected 3 tab-separated fields")
        file_name, partition, label_name = fields
        if partition not in ("train", "validation", "test"):
            raise MetadataError(f"manifest line {line_no}: bad partition {partition!r}")
        if label_name == NORMAL:
            label = BinaryLabel.NORMAL
        elif label_name == ANOMALOUS:
            label = BinaryLabel.ANOMALOUS
        else:
            raise MetadataError(f"manifest line {line_no}: bad label {label_name!r}")
        entries.append((file_name, partition, label))
    return entries
