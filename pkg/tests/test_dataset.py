import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlpcm.dataset import (
    FEATURE_MASKS, N_FEATURES, TARGET_NAMES, encode, encode_features, fit_scaler, one_hot, read_encoded,
    read_scaler, split, write_encoded, write_scaler,
)
from mlpcm.device import DeviceParams
from mlpcm.errors import DomainError, EncodingError
from mlpcm.sweep import param_grid, run_sweep
from mlpcm.traces import generate_trace


@pytest.fixture(scope="module")
def rows():
    corpus = [(f"t{i}", generate_trace(r, 100, seed=i)) for i, r in enumerate([(9, 1), (5, 5), (1, 9), (7, 3)])]
    return run_sweep(param_grid(), corpus, base_seed=2).rows


def test_one_hot():
    assert one_hot(1.5, (1.5, 2.0, 2.5)) == [1, 0, 0]
    assert one_hot(3.0, (2.5, 3.0, 3.5)) == [0, 1, 0]
    with pytest.raises(EncodingError, match="set_v"):
        one_hot(1.75, (1.5, 2.0, 2.5), "set_v")


def test_split_sizes():
    s = split(4860, seed=42)
    assert (len(s.train), len(s.test), len(s.validation)) == (2916, 972, 972)
    s = split(10, seed=0)
    assert (len(s.train), len(s.test), len(s.validation)) == (6, 2, 2)
    with pytest.raises(DomainError):
        split(4)


@given(st.integers(5, 3000), st.integers(0, 2**64 - 1))
def test_split_partition(n, seed):
    s = split(n, seed)
    parts = [set(s.train.tolist()), set(s.validation.tolist()), set(s.test.tolist())]
    assert set.union(*parts) == set(range(n))
    assert sum(map(len, parts)) == n
    assert len(s.test) == len(s.validation) == n // 5
    s2 = split(n, seed)
    assert all(np.array_equal(a, b) for a, b in zip((s.train, s.validation, s.test),
                                                    (s2.train, s2.validation, s2.test)))


def test_encoded_layout(rows):
    ds = encode(rows, seed=1)
    assert ds.features.shape == (len(rows), N_FEATURES)
    assert ds.targets.shape == (len(rows), 3)
    for lo in (0, 3, 6, 9):
        group = ds.features[:, lo:lo + 3]
        assert np.all(group.sum(axis=1) == 1.0)
        assert set(np.unique(group).tolist()) == {0.0, 1.0}


def test_train_statistics_standardized(rows):
    ds = encode(rows, seed=1)
    y = ds.targets[ds.splits.train]
    assert np.all(np.abs(y.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(y.std(axis=0) - 1) < 1e-9)
    x = ds.features[ds.splits.train][:, 12:]
    assert np.all(np.abs(x.mean(axis=0)) < 1e-9)


def test_scaler_uses_train_rows_only(rows):
    ds = encode(rows, seed=1)
    raw = np.array([[r.reads, r.writes, *r.targets] for r in rows], dtype=float)
    refit = fit_scaler(raw, ds.splits.train)
    assert refit == ds.scaler
    everything = fit_scaler(raw, np.arange(len(rows)))
    assert everything != ds.scaler


def test_inverse_round_trip(rows):
    ds = encode(rows, seed=1)
    back = ds.scaler.inverse_targets(ds.targets)
    raw = np.array([r.targets for r in rows])
    np.testing.assert_allclose(back, raw, rtol=1e-9)


def test_zero_variance_column_warns(rows):
    single = [r for r in rows if r.trace_id == "t0"]
    with pytest.warns(UserWarning, match="zero variance"):
        ds = encode(single, seed=1)
    assert ds.scaler.std["reads"] == 1.0


def test_latency_mask_ignores_voltages(rows):
    ds = encode(rows, seed=1)
    a = encode_features(DeviceParams(1.5, 155, 2.5, 105), 9000, 1000, ds.scaler)
    b = encode_features(DeviceParams(2.5, 155, 3.5, 105), 9000, 1000, ds.scaler)
    mask = list(FEATURE_MASKS["latency"])
    assert np.array_equal(a[mask], b[mask])
    assert not np.array_equal(a, b)
    assert FEATURE_MASKS["endurance"] == (12, 13)
    assert len(FEATURE_MASKS["latency"]) == 8 and len(FEATURE_MASKS["energy"]) == 14


def test_failed_rows_refused(rows):
    from dataclasses import replace
    broken = [replace(rows[0], total_write_energy=None, total_energy=None, total_write_latency=None,
                      total_latency=None, endurance=None)] + rows[1:]
    with pytest.raises(DomainError):
        encode(broken)


def test_file_round_trip(tmp_path, rows):
    ds = encode(rows, seed=3)
    write_encoded(ds, tmp_path / "e.csv")
    write_scaler(ds.scaler, tmp_path / "s.csv")
    scaler = read_scaler(tmp_path / "s.csv")
    assert scaler == ds.scaler
    back = read_encoded(tmp_path / "e.csv", scaler)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.targets, ds.targets)
    assert np.array_equal(back.splits.test, ds.splits.test)
    header = (tmp_path / "e.csv").read_text().splitlines()[0]
    assert header == "row_id," + ",".join(f"f{i}" for i in range(14)) + "," + ",".join(TARGET_NAMES) + ",split"
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "name,mean,std"
