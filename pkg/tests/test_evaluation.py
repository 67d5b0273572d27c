import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlpcm.dataset import encode, split
from mlpcm.errors import ConfigError, DomainError
from mlpcm.evaluation import evaluate, mape, write_report
from mlpcm.mlp import DEFAULT_HEADS, init_model
from mlpcm.sweep import param_grid, run_sweep
from mlpcm.traces import generate_trace


def test_mape_examples():
    assert mape([100, 200], [110, 190]) == pytest.approx(7.5, rel=1e-9)
    assert mape([3.0, 4.0], [3.0, 4.0]) == 0.0
    assert mape([50], [25]) == pytest.approx(50.0, rel=1e-9)


def test_mape_domain():
    with pytest.raises(DomainError):
        mape([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        mape([], [])
    with pytest.raises(DomainError):
        mape([1.0, 2.0], [1.0])


@given(st.lists(st.tuples(st.floats(0.1, 1e6), st.floats(-1e6, 1e6)), min_size=1, max_size=30),
       st.floats(1e-3, 1e3))
def test_mape_scale_invariant(pairs, k):
    a, p = map(np.array, zip(*pairs))
    assert mape(a * k, p * k) == pytest.approx(mape(a, p), rel=1e-9, abs=1e-9)


@pytest.fixture(scope="module")
def ds():
    corpus = [(f"t{i}", generate_trace(r, 100, seed=i)) for i, r in enumerate([(9, 1), (5, 5), (1, 9)])]
    rows = run_sweep(param_grid(), corpus, base_seed=2).rows
    return encode(rows, split(len(rows), 0))


def test_oracle_predictions_score_zero(ds):
    model = init_model(DEFAULT_HEADS, seed=0)
    _, y = ds.part("test")
    report = evaluate(model, ds, predictions=y)
    for name in ("energy", "latency", "endurance"):
        assert report[name].mape == pytest.approx(0.0, abs=1e-9)
        assert report[name].n == len(ds.splits.test)


def test_missing_scaler(ds):
    from dataclasses import replace
    with pytest.raises(ConfigError):
        evaluate(init_model(DEFAULT_HEADS), replace(ds, scaler=None))


def test_report_files(tmp_path, ds):
    report = evaluate(init_model(DEFAULT_HEADS, seed=1), ds)
    paths = write_report(report, tmp_path, plot_script=True)
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0] == "output,mape_percent,n"
    assert [line.split(",")[0] for line in summary[1:]] == ["endurance", "write_latency", "write_energy"]
    for head in ("energy", "latency", "endurance"):
        lines = (tmp_path / f"regression_{head}.csv").read_text().splitlines()
        assert lines[0] == "actual,predicted"
        assert len(lines) - 1 == len(ds.splits.test)
    assert (tmp_path / "plot_regression.py") in paths
