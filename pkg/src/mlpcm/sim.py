"""Trace-driven surrogate of a PCM main-memory device.

The controller is modeled with fixed service times per operation: every
write costs ``set_pulse + reset_pulse`` ns, every read ``read_latency``
ns. Queues named in the configuration are carried but not scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SimConfig
from .device import DeviceParams, energy_for_popcount, pulse_energies, write_latency
from .errors import DomainError
from .rng import SplitMix64, _mix64_array, derive_seed
from .traces import Trace

BANK_SHIFT = 6  # cache-line interleaving


@dataclass(frozen=True)
class BankWear:
    baseline: np.ndarray  # drawn endurance per bank
    cell_writes: np.ndarray  # (num_banks, tracked_cells_per_bank) counters

    @property
    def wear(self) -> np.ndarray:
        return self.cell_writes.mean(axis=1)

    @property
    def remaining(self) -> np.ndarray:
        return self.baseline - self.wear


@dataclass(frozen=True)
class SimResult:
    total_reads: int
    total_writes: int
    total_write_energy: float  # pJ
    total_energy: float  # pJ
    total_write_latency: float  # ns
    total_latency: float  # ns
    endurance_per_bank: tuple[float, ...]
    endurance_baseline: tuple[float, ...]
    sim_cycles: int

    @property
    def endurance(self) -> float:
        """Mean remaining endurance over banks, the scalar training target."""
        return math.fsum(self.endurance_per_bank) / len(self.endurance_per_bank)


def bank_of(addresses: np.ndarray, num_banks: int) -> np.ndarray:
    return (addresses >> np.uint64(BANK_SHIFT)) & np.uint64(num_banks - 1)


def cell_of(addresses: np.ndarray, cells: int) -> np.ndarray:
    return _mix64_array(addresses.astype(np.uint64)) % np.uint64(cells)


def draw_baselines(cfg: SimConfig, seed: int) -> np.ndarray:
    std = math.sqrt(cfg.endurance_variance)
    return np.array(
        [cfg.endurance_mean + std * SplitMix64(derive_seed(seed, b)).normal() for b in range(cfg.num_banks)]
    )


def endurance_account(write_addresses, cfg: SimConfig = SimConfig(), seed: int = 0) -> BankWear:
    addresses = np.asarray(write_addresses, dtype=np.uint64)
    cells = cfg.tracked_cells_per_bank
    flat = bank_of(addresses, cfg.num_banks) * np.uint64(cells) + cell_of(addresses, cells)
    counts = np.bincount(flat.astype(np.int64), minlength=cfg.num_banks * cells)
    return BankWear(draw_baselines(cfg, seed), counts.reshape(cfg.num_banks, cells))


def _cycles_for(ns: float, clock_mhz: float) -> int:
    return math.ceil(ns * clock_mhz / 1000.0)


def simulate(trace: Trace, params: DeviceParams, cfg: SimConfig = SimConfig(), seed: int = 0) -> SimResult:
    trace.validate()
    if cfg.word_bits != 64:
        raise DomainError(f"only 64-bit words are supported, config has {cfg.word_bits}")

    n_writes = trace.writes
    n_reads = trace.reads
    e_set, e_reset = pulse_energies(params, cfg)

    # word energy depends only on the payload popcount
    write_energy = 0.0
    for ones, count in enumerate(trace.write_popcount_histogram.tolist()):
        if count:
            write_energy += count * energy_for_popcount(ones, e_set, e_reset)

    per_write = write_latency(params)
    write_lat = n_writes * per_write
    read_lat = n_reads * cfg.read_latency
    read_energy = n_reads * cfg.read_energy

    wear = endurance_account(trace.write_addresses, cfg, seed)
    last_latency = per_write if trace.is_write[-1] else cfg.read_latency

    return SimResult(
        total_reads=n_reads,
        total_writes=n_writes,
        total_write_energy=write_energy,
        total_energy=write_energy + read_energy,
        total_write_latency=write_lat,
        total_latency=write_lat + read_lat,
        endurance_per_bank=tuple(wear.remaining.tolist()),
        endurance_baseline=tuple(wear.baseline.tolist()),
        sim_cycles=int(trace.cycles[-1]) + _cycles_for(last_latency, cfg.clock_mhz),
    )
