"""Test-split error report: MAPE per output plus predicted-vs-actual pairs."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import HEADS, EncodedDataset
from .errors import ConfigError, DomainError
from .mlp import MlpModel, forward

# summary row label for each head, in the order rows are written
SUMMARY_LABELS = (("endurance", "endurance"), ("write_latency", "latency"), ("write_energy", "energy"))


def mape(actuals, predictions) -> float:
    """Mean absolute percentage error, in percent."""
    a = np.asarray(actuals, dtype=np.float64)
    p = np.asarray(predictions, dtype=np.float64)
    if a.shape != p.shape or a.size == 0:
        raise DomainError(f"need equal non-empty inputs, got shapes {a.shape} and {p.shape}")
    if np.any(a == 0):
        raise DomainError("MAPE is undefined when an actual value is zero")
    return float(100.0 * np.mean(np.abs(a - p) / np.abs(a)))


@dataclass
class HeadReport:
    name: str
    mape: float
    actual: np.ndarray
    predicted: np.ndarray

    @property
    def n(self) -> int:
        return len(self.actual)


@dataclass
class EvalReport:
    heads: dict

    def __getitem__(self, name: str) -> HeadReport:
        return self.heads[name]


def evaluate(model: MlpModel, ds: EncodedDataset, scaler=None, predictions=None) -> EvalReport:
    """Score the test split in physical units.

    ``predictions`` (standardized, one column per head) overrides the
    model's forward pass, which lets callers score arbitrary predictors.
    """
    scaler = scaler if scaler is not None else ds.scaler
    if scaler is None:
        raise ConfigError("evaluation needs the scaler fitted at preprocessing")
    x, y = ds.part("test")
    if len(x) == 0:
        raise DomainError("test split is empty")
    z = forward(model, x) if predictions is None else np.asarray(predictions, dtype=np.float64)
    pred = scaler.inverse_targets(z)
    actual = scaler.inverse_targets(y)
    heads = {}
    for i, name in enumerate(HEADS):
        heads[name] = HeadReport(name, mape(actual[:, i], pred[:, i]), actual[:, i], pred[:, i])
    return EvalReport(heads)


PLOT_SCRIPT = '''"""Scatter plots of predicted vs actual values from regression_<head>.csv."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
for head in ("energy", "latency", "endurance"):
    with open(here / f"regression_{head}.csv") as fh:
        rows = [(float(r["actual"]), float(r["predicted"])) for r in csv.DictReader(fh)]
    a, p = zip(*rows)
    fig, ax = plt.subplots()
    ax.scatter(a, p, s=4)
    lo, hi = min(a + p), max(a + p)
    ax.plot([lo, hi], [lo, hi], color="k", linewidth=0.8)
    ax.set_xlabel("actual")
    ax.set_ylabel("predicted")
    ax.set_title(f"{head}: predicted vs actual")
    fig.savefig(here / f"regression_{head}.png", dpi=120)
'''


def write_report(report: EvalReport, out_dir, plot_script: bool = False) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "summary.csv"]
    with open(paths[0], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["output", "mape_percent", "n"])
        for label, head in SUMMARY_LABELS:
            w.writerow([label, repr(report[head].mape), report[head].n])
    for head in HEADS:
        path = out_dir / f"regression_{head}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["actual", "predicted"])
            for a, p in zip(report[head].actual.tolist(), report[head].predicted.tolist()):
                w.writerow([repr(a), repr(p)])
        paths.append(path)
    if plot_script:
        path = out_dir / "plot_regression.py"
        path.write_text(PLOT_SCRIPT, encoding="utf-8")
        paths.append(path)
    return paths
