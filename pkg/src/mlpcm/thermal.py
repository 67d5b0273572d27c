"""Ambient-temperature correction of RESET energy.

RESET power density falls linearly with ambient temperature,
``P(T) = g - h * T``. The simulator scales each per-bit RESET energy by
``P(T) / P(T_ref)`` so the base model's calibration at ``T_ref`` is kept.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class ThermalParams:
    g: float = 32.9  # MW/cm^2
    h: float = 0.04  # MW/(cm^2 K)
    t_ref: float = 300.0  # K

    def __post_init__(self):
        if not self.g > 0:
            raise DomainError(f"g must be positive, got {self.g}")
        if not self.h >= 0:
            raise DomainError(f"h must be non-negative, got {self.h}")
        if not 0 < self.t_ref < self.t_max:
            raise DomainError(f"t_ref must lie in (0, {self.t_max}), got {self.t_ref}")

    @property
    def t_max(self) -> float:
        """Exclusive upper bound on ambient temperature (zero power density)."""
        return self.g / self.h if self.h > 0 else float("inf")


def reset_power_density(t_ambient: float, p: ThermalParams = ThermalParams()) -> float:
    """RESET power density in MW/cm^2 at ambient temperature ``t_ambient`` (K)."""
    if t_ambient < 0:
        raise DomainError(f"ambient temperature must be >= 0 K, got {t_ambient}")
    density = p.g - p.h * t_ambient
    if density <= 0:
        raise DomainError(
            f"ambient temperature {t_ambient} K gives non-positive RESET power density "
            f"(limit {p.t_max} K)"
        )
    return density


def thermal_energy_scale(t_ambient: float, p: ThermalParams = ThermalParams()) -> float:
    return reset_power_density(t_ambient, p) / reset_power_density(p.t_ref, p)


def thermal_table(t_min: float, t_max: float, step: float, p: ThermalParams = ThermalParams()):
    """Rows of (T, power density, scale) from t_min to t_max inclusive."""
    if step <= 0:
        raise DomainError(f"step must be positive, got {step}")
    rows = []
    n = int(round((t_max - t_min) / step))
    for i in range(n + 1):
        t = t_min + i * step
        if t > t_max + 1e-9 * max(1.0, abs(t_max)):
            break
        rows.append((t, reset_power_density(t, p), thermal_energy_scale(t, p)))
    return rows
