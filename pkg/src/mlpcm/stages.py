"""File-to-file pipeline stages shared by the CLI subcommands.

Each stage reads its inputs from disk, writes its outputs plus one
``<stage>.manifest.json`` next to them, and returns the manifest dict.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import SimConfig, load_config, save_config
from .dataset import encode, read_encoded, read_scaler, split, write_encoded, write_scaler
from .errors import DomainError
from .evaluation import evaluate, write_report
from .mlp import TrainConfig, read_model, train, write_model
from .sweep import param_grid, read_dataset, run_sweep
from .thermal import thermal_table
from .traces import DEFAULT_LENGTH, MANIFEST_NAME, load_corpus, write_corpus

log = logging.getLogger(__name__)

DATASET_FILE = "dataset.csv"
ENCODED_FILE = "encoded.csv"
SCALER_FILE = "scaler.csv"
MODEL_FILE = "model.txt"
HISTORY_FILE = "history.csv"
THERMAL_FILE = "thermal.csv"
CONFIG_FILE = "config.txt"


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _digests(paths) -> dict:
    out = {}
    for p in paths:
        p = Path(p)
        if p.is_dir():
            for f in sorted(p.iterdir()):
                if f.is_file() and not f.name.endswith(".manifest.json"):
                    out[str(f)] = sha256(f)
        elif p.exists():
            out[str(p)] = sha256(p)
    return out


def _manifest(stage, out_dir, flags, seeds, inputs, outputs, started) -> dict:
    doc = {
        "tool": "mlpcm",
        "tool_version": __version__,
        "subcommand": stage,
        "flags": {k: (str(v) if isinstance(v, Path) else v) for k, v in flags.items()},
        "seeds": seeds,
        "inputs": _digests(inputs),
        "outputs": _digests(outputs),
        "started_at": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "duration_s": round(time.time() - started, 3),
    }
    path = Path(out_dir) / f"{stage}.manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return doc


def _load_cfg(config) -> SimConfig:
    return load_config(config) if config is not None else SimConfig()


def gen_traces(out_dir, seed: int, length: int = DEFAULT_LENGTH) -> dict:
    started = time.time()
    out_dir = Path(out_dir)
    paths = write_corpus(out_dir, seed, length)
    log.info("wrote %d traces to %s", len(paths), out_dir)
    return _manifest("gen-traces", out_dir, {"out": out_dir, "length": length}, {"base_seed": seed},
                     [], [*paths, out_dir / MANIFEST_NAME], started)


def sweep(traces_dir, out_dir, seed: int, config=None, jobs: int = 1) -> dict:
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = _load_cfg(config)
    save_config(cfg, out_dir / CONFIG_FILE)
    corpus = load_corpus(traces_dir)
    outcome = run_sweep(param_grid(), corpus, cfg, seed, out_dir / DATASET_FILE, jobs=jobs)
    log.info("sweep: %d rows, %d simulated, %d failed", len(outcome.rows), outcome.executed, outcome.failed)
    inputs = [Path(traces_dir)] + ([config] if config is not None else [])
    doc = _manifest("sweep", out_dir,
                    {"traces": traces_dir, "out": out_dir, "config": config, "jobs": jobs, "grid": "full"},
                    {"base_seed": seed}, inputs, [out_dir / DATASET_FILE, out_dir / CONFIG_FILE], started)
    if outcome.failed:
        raise DomainError(f"{outcome.failed} of {len(outcome.rows)} sweep rows failed")
    doc["rows"] = len(outcome.rows)
    return doc


def preprocess(dataset, out_dir, seed: int) -> dict:
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = read_dataset(dataset)
    ds = encode(rows, split(len(rows), seed))
    write_encoded(ds, out_dir / ENCODED_FILE)
    write_scaler(ds.scaler, out_dir / SCALER_FILE)
    sizes = {k: int(len(v)) for k, v in
             (("train", ds.splits.train), ("val", ds.splits.validation), ("test", ds.splits.test))}
    log.info("preprocess: %s", sizes)
    return _manifest("preprocess", out_dir, {"dataset": dataset, "out": out_dir}, {"split_seed": seed},
                     [dataset], [out_dir / ENCODED_FILE, out_dir / SCALER_FILE], started)


def train_stage(encoded, scaler, out_dir, cfg: TrainConfig) -> dict:
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ds = read_encoded(encoded, read_scaler(scaler))

    def progress(epoch, tr, va, lr):
        if epoch % 50 == 0:
            log.info("epoch %d train %.6f val %.6f lr %.2e", epoch, tr, va, lr)

    model, history = train(ds, cfg, progress=progress)
    write_model(model, out_dir / MODEL_FILE)
    history.write_csv(out_dir / HISTORY_FILE)
    flags = {"encoded": encoded, "scaler": scaler, "out": out_dir, "batch_size": cfg.batch_size,
             "max_epochs": cfg.max_epochs}
    return _manifest("train", out_dir, flags, {"train_seed": cfg.seed}, [encoded, scaler],
                     [out_dir / MODEL_FILE, out_dir / HISTORY_FILE], started)


def evaluate_stage(model_path, encoded, scaler, out_dir, plot_script: bool = False) -> dict:
    started = time.time()
    out_dir = Path(out_dir)
    sc = read_scaler(scaler)
    report = evaluate(read_model(model_path), read_encoded(encoded, sc), sc)
    paths = write_report(report, out_dir, plot_script)
    for name, head in report.heads.items():
        log.info("%s: MAPE %.4f%% over %d rows", name, head.mape, head.n)
    return _manifest("evaluate", out_dir,
                     {"model": model_path, "encoded": encoded, "scaler": scaler, "out": out_dir},
                     {}, [model_path, encoded, scaler], paths, started)


def thermal_stage(out_dir, t_min, t_max, step, params) -> dict:
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / THERMAL_FILE
    lines = ["t_kelvin,power_density_mw_cm2,scale"]
    for t, density, scale in thermal_table(t_min, t_max, step, params):
        lines.append(f"{t!r},{density!r},{scale!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    flags = {"out": out_dir, "t_min": t_min, "t_max": t_max, "step": step,
             "g": params.g, "h": params.h, "t_ref": params.t_ref}
    return _manifest("thermal-table", out_dir, flags, {}, [], [path], started)


def pipeline(out_dir, seed: int, config=None, jobs: int = 1, length: int = DEFAULT_LENGTH,
             train_cfg: TrainConfig | None = None) -> None:
    out_dir = Path(out_dir)
    train_cfg = train_cfg or TrainConfig(seed=seed)
    gen_traces(out_dir / "traces", seed, length)
    sweep(out_dir / "traces", out_dir, seed, config, jobs)
    preprocess(out_dir / DATASET_FILE, out_dir, seed)
    train_stage(out_dir / ENCODED_FILE, out_dir / SCALER_FILE, out_dir, train_cfg)
    evaluate_stage(out_dir / MODEL_FILE, out_dir / ENCODED_FILE, out_dir / SCALER_FILE, out_dir)
