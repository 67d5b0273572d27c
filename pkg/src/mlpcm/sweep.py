"""Cross the device-parameter grid with the trace corpus and record every run."""

from __future__ import annotations

import csv
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import SimConfig
from .device import RESET_PULSES, RESET_VOLTAGES, SET_PULSES, SET_VOLTAGES, DeviceParams
from .errors import TraceParseError
from .rng import derive_seed
from .sim import simulate

log = logging.getLogger(__name__)

DATASET_HEADER = [
    "row_id", "set_v", "set_t_ns", "reset_v", "reset_t_ns", "trace_id", "reads", "writes",
    "total_write_energy_pj", "total_energy_pj", "total_write_latency_ns", "total_latency_ns",
    "endurance_per_bank",
]
_TARGET_COLUMNS = DATASET_HEADER[8:]


@dataclass(frozen=True)
class SweepRow:
    row_id: int
    params: DeviceParams
    trace_id: str
    reads: int
    writes: int
    total_write_energy: float | None
    total_energy: float | None
    total_write_latency: float | None
    total_latency: float | None
    endurance: float | None

    @property
    def failed(self) -> bool:
        return self.endurance is None

    @property
    def targets(self) -> tuple[float, float, float]:
        return (self.total_write_energy, self.total_write_latency, self.endurance)

    def to_csv(self) -> list[str]:
        p = self.params
        head = [str(self.row_id), repr(p.set_voltage), repr(p.set_pulse), repr(p.reset_voltage),
                repr(p.reset_pulse), self.trace_id, str(self.reads), str(self.writes)]
        if self.failed:
            return head + [""] * len(_TARGET_COLUMNS)
        return head + [repr(float(v)) for v in (
            self.total_write_energy, self.total_energy, self.total_write_latency,
            self.total_latency, self.endurance)]

    @classmethod
    def from_csv(cls, rec: dict) -> "SweepRow":
        params = DeviceParams(float(rec["set_v"]), float(rec["set_t_ns"]),
                              float(rec["reset_v"]), float(rec["reset_t_ns"]))
        targets = [rec[c] for c in _TARGET_COLUMNS]
        if all(t == "" for t in targets):
            values = [None] * len(targets)
        else:
            values = [float(t) for t in targets]
        return cls(int(rec["row_id"]), params, rec["trace_id"], int(rec["reads"]), int(rec["writes"]), *values)


@dataclass
class SweepOutcome:
    rows: list[SweepRow]
    executed: int
    failed: int


def param_grid() -> list[DeviceParams]:
    """All 81 (set V, set t, reset V, reset t) points in lexicographic order."""
    return [DeviceParams(*p) for p in itertools.product(SET_VOLTAGES, SET_PULSES, RESET_VOLTAGES, RESET_PULSES)]


def row_seed(base_seed: int, row_id: int, n_traces: int) -> int:
    # keyed on the trace position so all parameter rows of a trace share bank baselines
    return derive_seed(base_seed, row_id % n_traces)


def _run_one(job, corpus, cfg, simulate_fn) -> SweepRow:
    row_id, params, trace_index, seed = job
    trace_id, trace = corpus[trace_index]
    try:
        res = simulate_fn(trace, params, cfg, seed)
    except Exception as exc:  # recorded as a failed row
        log.error("row %d (%s) failed: %s", row_id, trace_id, exc)
        return SweepRow(row_id, params, trace_id, trace.reads, trace.writes, None, None, None, None, None)
    return SweepRow(row_id, params, trace_id, res.total_reads, res.total_writes,
                    res.total_write_energy, res.total_energy, res.total_write_latency,
                    res.total_latency, res.endurance)


_worker_state: dict = {}


def _worker_init(corpus, cfg):
    _worker_state["corpus"] = corpus
    _worker_state["cfg"] = cfg


def _worker_run(job) -> SweepRow:
    return _run_one(job, _worker_state["corpus"], _worker_state["cfg"], simulate)


def read_dataset(path) -> list[SweepRow]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != DATASET_HEADER:
            raise TraceParseError(f"unexpected dataset header {reader.fieldnames}", path=path)
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                rows.append(SweepRow.from_csv(rec))
            except (TypeError, ValueError) as exc:
                raise TraceParseError(f"bad dataset row: {exc}", line=lineno, path=path) from None
    return rows


def _existing_rows(path: Path) -> dict[int, SweepRow]:
    """Completed rows of a previous (possibly interrupted) run; failed or torn rows are redone."""
    if not path.exists():
        return {}
    done = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != DATASET_HEADER:
            return {}
        for rec in reader:
            try:
                row = SweepRow.from_csv(rec)
            except (TypeError, ValueError):
                continue
            if not row.failed:
                done[row.row_id] = row
    return done


def run_sweep(grid, corpus, cfg: SimConfig = SimConfig(), base_seed: int = 0, out_path=None,
              jobs: int = 1, simulate_fn=simulate) -> SweepOutcome:
    """Simulate every (params, trace) pair, grid-major.

    ``corpus`` is a sequence of ``(trace_id, Trace)``. With ``out_path``
    the dataset CSV is written in row order as results arrive; rows
    already present in that file are reused instead of re-simulated.
    """
    grid = list(grid)
    corpus = list(corpus)
    if not grid or not corpus:
        raise ValueError("grid and corpus must be non-empty")
    n_traces = len(corpus)
    jobs_all = [
        (gi * n_traces + ti, params, ti, row_seed(base_seed, gi * n_traces + ti, n_traces))
        for gi, params in enumerate(grid)
        for ti in range(n_traces)
    ]
    existing = _existing_rows(Path(out_path)) if out_path is not None else {}
    existing = {
        k: v for k, v in existing.items()
        if k < len(jobs_all) and v.trace_id == corpus[k % n_traces][0] and v.params == jobs_all[k][1]
    }
    todo = [j for j in jobs_all if j[0] not in existing]
    log.info("sweep: %d rows, %d cached, %d to simulate", len(jobs_all), len(existing), len(todo))

    if jobs > 1 and simulate_fn is simulate and len(todo) > 1:
        pool = ProcessPoolExecutor(max_workers=jobs, initializer=_worker_init, initargs=(corpus, cfg))
        fresh = pool.map(_worker_run, todo, chunksize=max(1, len(todo) // (jobs * 8)))
    else:
        pool = None
        fresh = (_run_one(j, corpus, cfg, simulate_fn) for j in todo)

    rows: list[SweepRow] = []
    fh = writer = None
    if out_path is not None:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        fh = open(out_path, "w", newline="", encoding="utf-8")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DATASET_HEADER)
    try:
        for job in jobs_all:
            row = existing.get(job[0])
            if row is None:
                row = next(fresh)
            rows.append(row)
            if writer is not None:
                writer.writerow(row.to_csv())
                if job[0] % 500 == 499:
                    fh.flush()
    finally:
        if fh is not None:
            fh.close()
        if pool is not None:
            pool.shutdown()
    return SweepOutcome(rows, executed=len(todo), failed=sum(r.failed for r in rows))
