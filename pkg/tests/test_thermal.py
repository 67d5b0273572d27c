import numpy as np
import pytest

from mlpcm.config import SimConfig
from mlpcm.device import DeviceParams
from mlpcm.errors import DomainError
from mlpcm.sim import simulate
from mlpcm.thermal import ThermalParams, reset_power_density, thermal_energy_scale, thermal_table


def test_power_density_examples():
    assert reset_power_density(300) == pytest.approx(20.9, rel=1e-12)
    assert reset_power_density(0) == 32.9
    with pytest.raises(DomainError):
        reset_power_density(32.9 / 0.04)  # 822.5 K, zero density
    with pytest.raises(DomainError):
        reset_power_density(900)


def test_scale_examples():
    assert thermal_energy_scale(300) == 1.0
    assert thermal_energy_scale(350) == pytest.approx(18.9 / 20.9, rel=1e-12)
    assert thermal_energy_scale(350) == pytest.approx(0.90431, abs=1e-5)


def test_affine_and_decreasing():
    ts = np.linspace(0, 800, 81)
    dens = np.array([reset_power_density(t) for t in ts])
    np.testing.assert_allclose(np.diff(dens) / np.diff(ts), -0.04, rtol=1e-9)
    scales = [thermal_energy_scale(t) for t in ts]
    assert all(a > b for a, b in zip(scales, scales[1:]))


def test_params_validation():
    with pytest.raises(DomainError):
        ThermalParams(g=0)
    with pytest.raises(DomainError):
        ThermalParams(h=-0.1)
    with pytest.raises(DomainError):
        ThermalParams(t_ref=900)


def test_table_rows():
    rows = thermal_table(300, 320, 10)
    assert [r[0] for r in rows] == [300, 310, 320]
    assert rows[0][2] == 1.0


def test_simulation_unchanged_at_reference(small_trace):
    p = DeviceParams(2.0, 155, 3.0, 105)
    base = simulate(small_trace, p, SimConfig(), seed=1)
    assert simulate(small_trace, p, SimConfig(thermal_enable=True, ambient_k=300.0), seed=1) == base
    hot = simulate(small_trace, p, SimConfig(thermal_enable=True, ambient_k=350.0), seed=1)
    assert hot.total_write_energy < base.total_write_energy
    assert hot.total_write_latency == base.total_write_latency
    assert hot.endurance_per_bank == base.endurance_per_bank
