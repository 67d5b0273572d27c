"""Sweep rows -> model-ready arrays.

Feature layout (14 columns)::

    0-2   one-hot set voltage      6-8   one-hot reset voltage
    3-5   one-hot set pulse        9-11  one-hot reset pulse
    12    reads (standardized)     13    writes (standardized)

Targets are (write energy, write latency, endurance), standardized with
statistics from the training split only.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .device import RESET_PULSES, RESET_VOLTAGES, SET_PULSES, SET_VOLTAGES, DeviceParams
from .errors import DomainError, EncodingError, TraceParseError
from .rng import SplitMix64

N_FEATURES = 14
TARGET_NAMES = ("t_energy", "t_latency", "t_endurance")
HEADS = ("energy", "latency", "endurance")
SCALED_NAMES = ("reads", "writes") + TARGET_NAMES

CATEGORIES = (
    ("set_v", SET_VOLTAGES),
    ("set_t", SET_PULSES),
    ("reset_v", RESET_VOLTAGES),
    ("reset_t", RESET_PULSES),
)

FEATURE_MASKS = {
    "energy": tuple(range(14)),
    "latency": (3, 4, 5, 9, 10, 11, 12, 13),
    "endurance": (12, 13),
}

SPLIT_LABELS = ("train", "val", "test")
ENCODED_HEADER = ["row_id"] + [f"f{i}" for i in range(N_FEATURES)] + list(TARGET_NAMES) + ["split"]


def one_hot(value: float, categories, feature: str = "value") -> list[float]:
    for i, c in enumerate(categories):
        if value == c:
            vec = [0.0] * len(categories)
            vec[i] = 1.0
            return vec
    raise EncodingError(feature, value, categories)


@dataclass(frozen=True)
class SplitDataset:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray

    def labels(self, n: int) -> list[str]:
        out = [""] * n
        for name, idx in zip(SPLIT_LABELS, (self.train, self.validation, self.test)):
            for i in idx.tolist():
                out[i] = name
        return out

    @classmethod
    def from_labels(cls, labels) -> "SplitDataset":
        labels = np.asarray(labels)
        for lab in np.unique(labels):
            if lab not in SPLIT_LABELS:
                raise DomainError(f"unknown split label {lab!r}")
        return cls(*(np.flatnonzero(labels == name) for name in SPLIT_LABELS))


def split(n_rows: int, seed: int = 0) -> SplitDataset:
    """Seeded shuffle, then a contiguous 60/20/20 cut into train, test, validation."""
    if n_rows < 5:
        raise DomainError(f"need at least 5 rows to split, got {n_rows}")
    order = np.argsort(SplitMix64(seed).u64(n_rows), kind="stable")
    n_hold = n_rows // 5
    n_train = n_rows - 2 * n_hold
    train = order[:n_train]
    test = order[n_train:n_train + n_hold]
    val = order[n_train + n_hold:]
    return SplitDataset(np.sort(train), np.sort(val), np.sort(test))


@dataclass(frozen=True)
class Scaler:
    mean: dict
    std: dict

    def transform(self, name: str, x):
        return (np.asarray(x, dtype=np.float64) - self.mean[name]) / self.std[name]

    def inverse(self, name: str, z):
        return np.asarray(z, dtype=np.float64) * self.std[name] + self.mean[name]

    def inverse_targets(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        return np.column_stack([self.inverse(n, z[:, i]) for i, n in enumerate(TARGET_NAMES)])


def fit_scaler(raw: np.ndarray, train_idx: np.ndarray) -> Scaler:
    """``raw`` columns follow SCALED_NAMES; zero-variance columns get std 1."""
    mean, std = {}, {}
    sub = raw[train_idx]
    for j, name in enumerate(SCALED_NAMES):
        mu = float(np.mean(sub[:, j]))
        sd = float(np.std(sub[:, j]))
        if not sd > 0:
            warnings.warn(f"column {name} has zero variance on the training split; using scale 1")
            sd = 1.0
        mean[name], std[name] = mu, sd
    return Scaler(mean, std)


@dataclass
class EncodedDataset:
    row_ids: np.ndarray
    features: np.ndarray  # (n, 14)
    targets: np.ndarray  # (n, 3), standardized
    splits: SplitDataset
    scaler: Scaler

    def part(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        idx = {"train": self.splits.train, "val": self.splits.validation, "test": self.splits.test}[name]
        return self.features[idx], self.targets[idx]


def _categorical(params: DeviceParams) -> list[float]:
    values = (params.set_voltage, params.set_pulse, params.reset_voltage, params.reset_pulse)
    vec = []
    for (name, cats), v in zip(CATEGORIES, values):
        vec.extend(one_hot(v, cats, name))
    return vec


def encode_features(params: DeviceParams, reads: float, writes: float, scaler: Scaler) -> np.ndarray:
    vec = _categorical(params)
    vec.append(float(scaler.transform("reads", reads)))
    vec.append(float(scaler.transform("writes", writes)))
    return np.array(vec)


def encode(rows, splits: SplitDataset | None = None, seed: int = 0) -> EncodedDataset:
    """Encode sweep rows; the scaler is fitted on the training indices only."""
    rows = [r for r in rows]
    if not rows:
        raise DomainError("no rows to encode")
    failed = [r.row_id for r in rows if r.failed]
    if failed:
        raise DomainError(f"{len(failed)} failed sweep rows present (first: {failed[0]})")
    if splits is None:
        splits = split(len(rows), seed)
    raw = np.array(
        [[r.reads, r.writes, r.total_write_energy, r.total_write_latency, r.endurance] for r in rows],
        dtype=np.float64,
    )
    scaler = fit_scaler(raw, splits.train)
    onehots = np.array([_categorical(r.params) for r in rows])
    features = np.column_stack([onehots, scaler.transform("reads", raw[:, 0]), scaler.transform("writes", raw[:, 1])])
    targets = np.column_stack([scaler.transform(n, raw[:, 2 + i]) for i, n in enumerate(TARGET_NAMES)])
    return EncodedDataset(np.array([r.row_id for r in rows]), features, targets, splits, scaler)


def write_encoded(ds: EncodedDataset, path) -> None:
    labels = ds.splits.labels(len(ds.row_ids))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ENCODED_HEADER)
        for i, rid in enumerate(ds.row_ids.tolist()):
            w.writerow([rid] + [repr(v) for v in ds.features[i].tolist()]
                       + [repr(v) for v in ds.targets[i].tolist()] + [labels[i]])


def write_scaler(scaler: Scaler, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "mean", "std"])
        for name in SCALED_NAMES:
            w.writerow([name, repr(scaler.mean[name]), repr(scaler.std[name])])


def read_scaler(path) -> Scaler:
    path = Path(path)
    mean, std = {}, {}
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            mean[rec["name"]] = float(rec["mean"])
            std[rec["name"]] = float(rec["std"])
    missing = [n for n in SCALED_NAMES if n not in mean]
    if missing:
        raise TraceParseError(f"scaler is missing columns {missing}", path=path)
    for name, sd in std.items():
        if not (sd > 0 and math.isfinite(sd)):
            raise TraceParseError(f"scaler std for {name} must be positive, got {sd}", path=path)
    return Scaler(mean, std)


def read_encoded(path, scaler: Scaler) -> EncodedDataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ENCODED_HEADER:
            raise TraceParseError(f"unexpected encoded header {header}", path=path)
        ids, feats, targs, labels = [], [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(ENCODED_HEADER):
                raise TraceParseError(f"expected {len(ENCODED_HEADER)} fields, got {len(rec)}", line=lineno, path=path)
            try:
                ids.append(int(rec[0]))
                feats.append([float(v) for v in rec[1:15]])
                targs.append([float(v) for v in rec[15:18]])
            except ValueError as exc:
                raise TraceParseError(str(exc), line=lineno, path=path) from None
            labels.append(rec[18])
    return EncodedDataset(np.array(ids), np.array(feats), np.array(targs),
                          SplitDataset.from_labels(labels), scaler)
