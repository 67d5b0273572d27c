"""Simulator configuration and its ``Key Value`` text format."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .thermal import ThermalParams


@dataclass(frozen=True)
class SimConfig:
    clock_mhz: float = 400.0
    bus_width_bits: int = 64
    bits_per_device: int = 8
    cpu_mhz: float = 2000.0
    mlc_levels: int = 2
    controller: str = "FRFCFS"
    address_map: str = "R:RK:BK:CH"
    read_queue: int = 32
    write_queue: int = 32
    endurance_model: str = "BitModel"
    endurance_dist: str = "Normal"
    endurance_mean: float = 1_000_000.0
    endurance_variance: float = 100_000.0
    word_bits: int = 64
    tracked_cells_per_bank: int = 4096
    bit_conductance: float = 2.0e-5  # S
    read_latency: float = 48.0  # ns
    read_energy: float = 50.0  # pJ per read
    num_banks: int = 8
    thermal_enable: bool = False
    ambient_k: float = 300.0
    thermal: ThermalParams = field(default_factory=ThermalParams)

    def __post_init__(self):
        positive = (
            "clock_mhz", "bus_width_bits", "bits_per_device", "cpu_mhz", "mlc_levels",
            "read_queue", "write_queue", "endurance_mean", "word_bits",
            "tracked_cells_per_bank", "bit_conductance", "num_banks",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("endurance_variance", "read_latency", "read_energy"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.num_banks & (self.num_banks - 1):
            raise ConfigError(f"num_banks must be a power of two, got {self.num_banks}")
        if self.controller != "FRFCFS":
            raise ConfigError(f"unsupported memory controller {self.controller!r}")
        if self.endurance_model != "BitModel":
            raise ConfigError(f"unsupported endurance model {self.endurance_model!r}")
        if self.endurance_dist != "Normal":
            raise ConfigError(f"unsupported endurance distribution {self.endurance_dist!r}")


# file key -> (field name, converter)
_KEYS = {
    "CLK": ("clock_mhz", float),
    "BusWidth": ("bus_width_bits", int),
    "DeviceWidth": ("bits_per_device", int),
    "CPUFreq": ("cpu_mhz", float),
    "MLCLevels": ("mlc_levels", int),
    "MEM_CTL": ("controller", str),
    "AddressMappingScheme": ("address_map", str),
    "ReadQueueSize": ("read_queue", int),
    "WriteQueueSize": ("write_queue", int),
    "EnduranceModel": ("endurance_model", str),
    "EnduranceDist": ("endurance_dist", str),
    "EnduranceDistMean": ("endurance_mean", float),
    "EnduranceDistVariance": ("endurance_variance", float),
    "WordBits": ("word_bits", int),
    "TrackedCellsPerBank": ("tracked_cells_per_bank", int),
    "BitConductance": ("bit_conductance", float),
    "ReadLatencyNs": ("read_latency", float),
    "ReadEnergyPj": ("read_energy", float),
    "NumBanks": ("num_banks", int),
    "ThermalEnable": ("thermal_enable", None),
    "AmbientK": ("ambient_k", float),
}
_THERMAL_KEYS = {"ThermalG": "g", "ThermalH": "h", "ThermalTref": "t_ref"}


def _parse_bool(text: str) -> bool:
    if text not in ("0", "1"):
        raise ValueError(f"expected 0 or 1, got {text!r}")
    return text == "1"


def parse_config_text(text: str, source: str = "<config>") -> SimConfig:
    values: dict = {}
    thermal: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ConfigError(f"{source}:{lineno}: expected 'Key Value', got {raw.strip()!r}")
        key, value = parts[0], parts[1].strip()
        try:
            if key in _KEYS:
                name, conv = _KEYS[key]
                values[name] = _parse_bool(value) if conv is None else conv(value)
            elif key in _THERMAL_KEYS:
                thermal[_THERMAL_KEYS[key]] = float(value)
            else:
                warnings.warn(f"{source}:{lineno}: unknown config key {key!r} ignored", stacklevel=2)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    try:
        if thermal:
            values["thermal"] = ThermalParams(**thermal)
        return SimConfig(**values)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> SimConfig:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), source=str(path))


def format_config(cfg: SimConfig) -> str:
    """Serialize ``cfg`` so that ``parse_config_text(format_config(cfg)) == cfg``."""
    lines = ["; pcm surrogate simulator configuration"]
    for key, (name, conv) in _KEYS.items():
        value = getattr(cfg, name)
        if conv is None:
            value = int(value)
        elif conv is float:
            value = repr(float(value))
        lines.append(f"{key} {value}")
    for key, name in _THERMAL_KEYS.items():
        lines.append(f"{key} {getattr(cfg.thermal, name)!r}")
    return "\n".join(lines) + "\n"


def save_config(cfg: SimConfig, path) -> None:
    Path(path).write_text(format_config(cfg), encoding="utf-8")


