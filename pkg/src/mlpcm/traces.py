"""Synthetic read/write traces: generation, corpus layout and the text file format.

File format, one record per line after an optional ``# pcm-trace v1``
header::

    CYCLE OP 0xADDRESS 0xDATA

with CYCLE decimal, OP ``R`` or ``W`` and both hex fields exactly 16
digits.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DomainError, TraceParseError
from .rng import SplitMix64, derive_seed

HEADER = "# pcm-trace v1"
DEFAULT_LENGTH = 100_000
MEAN_GAP_CYCLES = 75
ADDRESS_SPACE_BYTES = 1 << 30  # 8 Gb device
WORD_BYTES = 8

READ_HEAVY_RATIOS = ((9, 1), (8, 2), (7, 3), (6, 4))
BALANCED_RATIO = (5, 5)
TRACES_PER_CLASS = 20

MANIFEST_NAME = "manifest.csv"
MANIFEST_HEADER = ["file", "ratio_r", "ratio_w", "reads", "writes", "seed"]

_LINE = re.compile(r"(\d+) ([RW]) 0x([0-9a-fA-F]{16}) 0x([0-9a-fA-F]{16})")


@dataclass(frozen=True)
class TraceRecord:
    cycle: int
    op: str  # "R" or "W"
    address: int
    data: int

    @property
    def is_write(self) -> bool:
        return self.op == "W"


class Trace:
    """An ordered access sequence stored column-wise."""

    def __init__(self, cycles, is_write, addresses, data, ratio=None):
        self.cycles = np.ascontiguousarray(cycles, dtype=np.int64)
        self.is_write = np.ascontiguousarray(is_write, dtype=bool)
        self.addresses = np.ascontiguousarray(addresses, dtype=np.uint64)
        self.data = np.ascontiguousarray(data, dtype=np.uint64)
        n = len(self.cycles)
        if not (len(self.is_write) == len(self.addresses) == len(self.data) == n):
            raise DomainError("trace columns have different lengths")
        self.ratio = tuple(ratio) if ratio is not None else None

    @classmethod
    def from_records(cls, records, ratio=None) -> "Trace":
        records = list(records)
        return cls(
            [r.cycle for r in records],
            [r.op == "W" for r in records],
            np.array([r.address for r in records], dtype=np.uint64),
            np.array([r.data for r in records], dtype=np.uint64),
            ratio=ratio,
        )

    def __len__(self) -> int:
        return len(self.cycles)

    def __getitem__(self, i: int) -> TraceRecord:
        return TraceRecord(
            int(self.cycles[i]),
            "W" if self.is_write[i] else "R",
            int(self.addresses[i]),
            int(self.data[i]),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def records(self) -> list[TraceRecord]:
        return list(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            np.array_equal(self.cycles, other.cycles)
            and np.array_equal(self.is_write, other.is_write)
            and np.array_equal(self.addresses, other.addresses)
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    @cached_property
    def writes(self) -> int:
        return int(np.count_nonzero(self.is_write))

    @property
    def reads(self) -> int:
        return len(self) - self.writes

    @property
    def ratio_class(self) -> str:
        if self.reads > self.writes:
            return "RgtW"
        if self.reads == self.writes:
            return "ReqW"
        return "RltW"

    @cached_property
    def write_addresses(self) -> np.ndarray:
        return self.addresses[self.is_write]

    @cached_property
    def write_popcount_histogram(self) -> np.ndarray:
        """Number of writes per payload popcount, index 0..64."""
        ones = np.bitwise_count(self.data[self.is_write])
        return np.bincount(ones, minlength=65)

    def validate(self) -> None:
        if len(self) == 0:
            raise DomainError("trace is empty")
        bad = np.flatnonzero(np.diff(self.cycles) < 0)
        if bad.size:
            i = int(bad[0]) + 1
            raise DomainError(f"cycle regression at record {i}: {self.cycles[i - 1]} -> {self.cycles[i]}")


def generate_trace(ratio: tuple[int, int], length: int = DEFAULT_LENGTH, seed: int = 0) -> Trace:
    r, w = ratio
    if r < 0 or w < 0 or r + w <= 0:
        raise DomainError(f"invalid read:write ratio {r}:{w}")
    if length <= 0 or length % (r + w):
        raise DomainError(f"length {length} is not divisible by r + w = {r + w}")
    n_writes = length // (r + w) * w

    rng = SplitMix64(seed)
    ops = np.zeros(length, dtype=bool)
    ops[:n_writes] = True
    order = np.argsort(rng.u64(length), kind="stable")
    is_write = ops[order]

    # inter-arrival gaps uniform on [0, 2 * mean]
    gaps = rng.below(2 * MEAN_GAP_CYCLES + 1, length).astype(np.int64)
    cycles = np.cumsum(gaps)

    n_words = ADDRESS_SPACE_BYTES // WORD_BYTES
    addresses = rng.below(n_words, length) * np.uint64(WORD_BYTES)
    data = rng.u64(length)
    data[~is_write] = 0
    return Trace(cycles, is_write, addresses, data, ratio=(r, w))


@dataclass(frozen=True)
class CorpusEntry:
    file: str
    ratio: tuple[int, int]
    seed: int

    @property
    def trace_id(self) -> str:
        return Path(self.file).stem


def corpus_plan(base_seed: int) -> list[CorpusEntry]:
    """The 60-trace layout: 20 read-heavy, 20 balanced, 20 write-heavy."""
    entries = []
    classes = (
        ("RgtW", READ_HEAVY_RATIOS),
        ("ReqW", (BALANCED_RATIO,)),
        ("RltW", tuple((w, r) for r, w in READ_HEAVY_RATIOS)),
    )
    for label, ratios in classes:
        for k in range(TRACES_PER_CLASS):
            idx = len(entries)
            r, w = ratios[k % len(ratios)]
            entries.append(
                CorpusEntry(f"t{idx:02d}_{label}_{r}-{w}.trace", (r, w), derive_seed(base_seed, idx))
            )
    return entries


def generate_corpus(base_seed: int, length: int = DEFAULT_LENGTH) -> list[tuple[CorpusEntry, Trace]]:
    return [(e, generate_trace(e.ratio, length, e.seed)) for e in corpus_plan(base_seed)]


def write_corpus(out_dir, base_seed: int, length: int = DEFAULT_LENGTH) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    with open(out_dir / MANIFEST_NAME, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for entry in corpus_plan(base_seed):
            trace = generate_trace(entry.ratio, length, entry.seed)
            path = out_dir / entry.file
            write_trace_file(trace, path)
            paths.append(path)
            writer.writerow([entry.file, *entry.ratio, trace.reads, trace.writes, entry.seed])
    return paths


def read_manifest(trace_dir) -> list[CorpusEntry]:
    trace_dir = Path(trace_dir)
    with open(trace_dir / MANIFEST_NAME, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != MANIFEST_HEADER:
            raise TraceParseError(f"unexpected manifest header {reader.fieldnames}", path=trace_dir / MANIFEST_NAME)
        return [
            CorpusEntry(row["file"], (int(row["ratio_r"]), int(row["ratio_w"])), int(row["seed"]))
            for row in reader
        ]


def load_corpus(trace_dir) -> list[tuple[str, Trace]]:
    """(trace_id, trace) pairs in manifest order, or sorted file order without a manifest."""
    trace_dir = Path(trace_dir)
    if (trace_dir / MANIFEST_NAME).exists():
        corpus = []
        for entry in read_manifest(trace_dir):
            trace = parse_trace_file(trace_dir / entry.file)
            trace.ratio = entry.ratio
            corpus.append((entry.trace_id, trace))
        return corpus
    files = sorted(trace_dir.glob("*.trace"))
    if not files:
        raise TraceParseError("no trace files found", path=trace_dir)
    return [(p.stem, parse_trace_file(p)) for p in files]


def format_record(cycle: int, is_write: bool, address: int, data: int) -> str:
    return f"{cycle} {'W' if is_write else 'R'} 0x{address:016X} 0x{data:016X}"


def write_trace_file(trace: Trace, path) -> None:
    lines = [HEADER]
    for c, w, a, d in zip(trace.cycles.tolist(), trace.is_write.tolist(),
                          trace.addresses.tolist(), trace.data.tolist()):
        lines.append(format_record(c, w, a, d))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_trace_lines(lines, path=None) -> Trace:
    cycles, is_write, addresses, data = [], [], [], []
    prev = -1
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if lineno == 1 and line == HEADER:
            continue
        m = _LINE.fullmatch(line)
        if m is None:
            raise TraceParseError(f"malformed record {line!r}", line=lineno, path=path)
        cycle = int(m.group(1))
        if cycle < prev:
            raise TraceParseError(f"cycle regression {prev} -> {cycle}", line=lineno, path=path)
        prev = cycle
        cycles.append(cycle)
        is_write.append(m.group(2) == "W")
        addresses.append(int(m.group(3), 16))
        data.append(int(m.group(4), 16))
    trace = Trace(cycles, is_write, np.array(addresses, dtype=np.uint64),
                  np.array(data, dtype=np.uint64))
    if trace.writes and trace.reads:
        g = math.gcd(trace.reads, trace.writes)
        trace.ratio = (trace.reads // g, trace.writes // g)
    return trace


def parse_trace_file(path) -> Trace:
    path = Path(path)
    with open(path, encoding="utf-8", newline="\n") as fh:
        return parse_trace_lines(fh, path=path)
