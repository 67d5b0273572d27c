"""Surrogate PCM cell physics: per-bit pulse energy and write latency.

Energy is Joule heating through an effective cell conductance,
``E = G * V**2 * t``. A write reprograms every bit of the word: bits
equal to 1 take one SET pulse, bits equal to 0 one RESET pulse. Writes
run RESET-all-then-SET, so latency is the sum of the two pulse widths.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .thermal import thermal_energy_scale

SET_VOLTAGES = (1.5, 2.0, 2.5)
SET_PULSES = (150.0, 155.0, 160.0)
RESET_VOLTAGES = (2.5, 3.0, 3.5)
RESET_PULSES = (100.0, 105.0, 110.0)

WORD_BITS = 64
_WORD_MASK = (1 << WORD_BITS) - 1


@dataclass(frozen=True, order=True)
class DeviceParams:
    set_voltage: float  # V
    set_pulse: float  # ns
    reset_voltage: float  # V
    reset_pulse: float  # ns

    def __post_init__(self):
        for name in ("set_voltage", "set_pulse", "reset_voltage", "reset_pulse"):
            object.__setattr__(self, name, float(getattr(self, name)))
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative, got {getattr(self, name)}")

    @property
    def on_grid(self) -> bool:
        return (
            self.set_voltage in SET_VOLTAGES
            and self.set_pulse in SET_PULSES
            and self.reset_voltage in RESET_VOLTAGES
            and self.reset_pulse in RESET_PULSES
        )


def bit_pulse_energy(voltage: float, pulse_ns: float, conductance: float) -> float:
    """Energy in pJ dissipated by one programming pulse on one bit."""
    if voltage < 0 or pulse_ns < 0:
        raise DomainError(f"voltage and pulse must be non-negative, got {voltage} V, {pulse_ns} ns")
    if conductance <= 0:
        raise DomainError(f"conductance must be positive, got {conductance}")
    # S * V^2 * ns = 1e-9 J = 1e3 pJ
    return conductance * voltage * voltage * pulse_ns * 1e3


def energy_for_popcount(ones: int, set_energy: float, reset_energy: float) -> float:
    return ones * set_energy + (WORD_BITS - ones) * reset_energy


def pulse_energies(params: DeviceParams, cfg) -> tuple[float, float]:
    """(SET, RESET) per-bit energies in pJ, with the ambient correction on RESET."""
    e_set = bit_pulse_energy(params.set_voltage, params.set_pulse, cfg.bit_conductance)
    e_reset = bit_pulse_energy(params.reset_voltage, params.reset_pulse, cfg.bit_conductance)
    if cfg.thermal_enable:
        e_reset *= thermal_energy_scale(cfg.ambient_k, cfg.thermal)
    return e_set, e_reset


def word_write_energy(data: int, params: DeviceParams, cfg) -> float:
    if cfg.word_bits != WORD_BITS:
        raise DomainError(f"only {WORD_BITS}-bit words are supported, config has {cfg.word_bits}")
    if not 0 <= data <= _WORD_MASK:
        raise DomainError(f"data {data:#x} does not fit in {WORD_BITS} bits")
    e_set, e_reset = pulse_energies(params, cfg)
    return energy_for_popcount(data.bit_count(), e_set, e_reset)


def write_latency(params: DeviceParams) -> float:
    return params.set_pulse + params.reset_pulse
