import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlpcm.config import SimConfig
from mlpcm.device import (
    RESET_PULSES, RESET_VOLTAGES, SET_PULSES, SET_VOLTAGES, DeviceParams, word_write_energy, write_latency,
)
from mlpcm.errors import DomainError
from mlpcm.rng import mix64
from mlpcm.sim import endurance_account, simulate
from mlpcm.traces import Trace, generate_trace

P = DeviceParams(2.0, 155, 3.0, 105)
ALL_ONES = (1 << 64) - 1


def constant_trace(n_reads, n_writes, payload, seed=0):
    base = generate_trace((1, 1), 2 * max(n_reads, n_writes, 1), seed)
    is_write = np.zeros(n_reads + n_writes, dtype=bool)
    is_write[n_reads:] = True
    data = np.where(is_write, np.uint64(payload), np.uint64(0))
    return Trace(np.arange(len(is_write)) * 75, is_write, base.addresses[:len(is_write)], data)


def test_reads_only():
    t = constant_trace(100_000, 0, 0)
    r = simulate(t, P, SimConfig(), seed=1)
    assert r.total_write_energy == 0.0 and r.total_write_latency == 0.0
    assert r.total_reads == 100_000
    assert r.endurance_per_bank == r.endurance_baseline


def test_all_ones_closed_form():
    t = constant_trace(0, 50_000, ALL_ONES)
    r = simulate(t, P, SimConfig(), seed=1)
    assert r.total_write_energy == 50_000 * word_write_energy(ALL_ONES, P, SimConfig())
    assert r.total_write_energy == pytest.approx(39.68e6, rel=1e-12)  # 39.68 uJ in pJ
    assert r.total_write_latency == 50_000 * 260
    assert r.total_write_latency == pytest.approx(13.0e6)  # 13 ms in ns


def test_totals_include_reads():
    t = constant_trace(300, 200, 0x0F0F)
    cfg = SimConfig()
    r = simulate(t, P, cfg, seed=2)
    assert r.total_reads + r.total_writes == len(t)
    assert r.total_energy == r.total_write_energy + 300 * cfg.read_energy
    assert r.total_latency == r.total_write_latency + 300 * cfg.read_latency
    # last op is a write: 260 ns at 400 MHz is 104 cycles
    assert r.sim_cycles == int(t.cycles[-1]) + 104


def test_deterministic(small_trace):
    assert simulate(small_trace, P, seed=9) == simulate(small_trace, P, seed=9)


def test_rejects_empty_and_regressing():
    with pytest.raises(DomainError):
        simulate(Trace([], [], [], []), P)
    with pytest.raises(DomainError):
        simulate(Trace([5, 4], [True, True], [0, 64], [1, 1]), P)


@given(st.sampled_from(list(itertools.product(SET_VOLTAGES, SET_PULSES, RESET_VOLTAGES, RESET_PULSES))),
       st.integers(0, 3), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_energy_monotone_in_every_parameter(point, which, seed):
    t = generate_trace((6, 4), 500, seed)
    grids = (SET_VOLTAGES, SET_PULSES, RESET_VOLTAGES, RESET_PULSES)
    lo = list(point)
    hi = list(point)
    hi[which] = max(grids[which])
    e_lo = simulate(t, DeviceParams(*lo)).total_write_energy
    e_hi = simulate(t, DeviceParams(*hi)).total_write_energy
    assert e_hi >= e_lo


@given(st.integers(0, ALL_ONES), st.integers(1, 300), st.sampled_from([(1.5, 150, 2.5, 100), (2.5, 160, 3.5, 110)]))
@settings(max_examples=40, deadline=None)
def test_constant_payload_oracle(payload, writes, point):
    params = DeviceParams(*point)
    t = constant_trace(17, writes, payload)
    r = simulate(t, params, seed=4)
    assert r.total_write_energy == writes * word_write_energy(payload, params, SimConfig())
    assert r.total_write_latency == writes * write_latency(params)


def test_endurance_ignores_device_parameters(small_trace):
    a = simulate(small_trace, DeviceParams(1.5, 150, 2.5, 100), seed=3)
    b = simulate(small_trace, DeviceParams(2.5, 160, 3.5, 110), seed=3)
    assert a.endurance_per_bank == b.endurance_per_bank


def brute_force_wear(addresses, cfg):
    counts = Counter()
    for a in addresses:
        bank = (a >> 6) & (cfg.num_banks - 1)
        counts[(bank, mix64(a) % cfg.tracked_cells_per_bank)] += 1
    per_bank = [0.0] * cfg.num_banks
    for (bank, _cell), c in counts.items():
        per_bank[bank] += c
    return [s / cfg.tracked_cells_per_bank for s in per_bank], counts


def test_endurance_matches_brute_force_recount(small_trace):
    cfg = SimConfig(tracked_cells_per_bank=64)
    addrs = [int(a) for a in small_trace.write_addresses]
    wear = endurance_account(small_trace.write_addresses, cfg, seed=5)
    expected, counts = brute_force_wear(addrs, cfg)
    assert wear.wear.tolist() == expected
    for (bank, cell), c in counts.items():
        assert wear.cell_writes[bank, cell] == c
    assert wear.cell_writes.sum() == len(addrs)


def test_single_bank_uniform_wear():
    cfg = SimConfig()
    # 50,000 writes all in bank 0: word addresses with bits 6..8 clear
    addrs = np.array([((i // 8) << 9) | ((i % 8) << 3) for i in range(50_000)], dtype=np.uint64)
    wear = endurance_account(addrs, cfg, seed=1)
    assert wear.wear[0] == 50_000 / 4096
    assert wear.wear[0] == pytest.approx(12.207, abs=1e-3)
    assert np.all(wear.wear[1:] == 0)
    assert np.all(wear.remaining[1:] == wear.baseline[1:])
    assert wear.remaining[0] < wear.baseline[0]


def test_baseline_spread_is_literal_variance():
    cfg = SimConfig(num_banks=1024)
    b = endurance_account(np.zeros(0, dtype=np.uint64), cfg, seed=77).baseline
    assert abs(b.mean() - 1e6) < 40
    assert b.std() == pytest.approx(np.sqrt(1e5), rel=0.08)


def test_wear_monotone_in_writes(small_trace):
    addrs = small_trace.write_addresses
    few = endurance_account(addrs[:100], seed=2).remaining
    many = endurance_account(addrs, seed=2).remaining
    assert np.all(few >= many)
    assert np.all(many <= endurance_account(addrs[:0], seed=2).baseline)
