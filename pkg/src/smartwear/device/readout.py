"""Voltage divider + 12-bit ADC readout chain and its inverse."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sensorsim import SensorModel, resistance_of_strain, strain_of_resistance


@dataclass(frozen=True)
class DividerConfig:
    r_ref: float = 10_000.0
    vcc: float = 3.3

    def __post_init__(self):
        if self.r_ref <= 0 or self.vcc <= 0:
            raise ValueError("r_ref and vcc must be positive")


@dataclass(frozen=True)
class AdcConfig:
    bits: int = 12
    vref: float = 3.3

    def __post_init__(self):
        if self.bits != 12:
            raise ValueError("only the 12-bit converter is modelled")
        if self.vref <= 0:
            raise ValueError("vref must be positive")

    @property
    def full_scale(self) -> int:
        return (1 << self.bits) - 1

    @property
    def lsb(self) -> float:
        return self.vref / self.full_scale


def divider_voltage(r_sensor, div: DividerConfig = DividerConfig()):
    """Sensor on the low leg: ``vcc * r / (r + r_ref)``."""
    r = np.asarray(r_sensor, dtype=float)
    if np.any(r <= 0) or np.any(~np.isfinite(r)):
        raise ValueError("sensor resistance must be positive and finite")
    v = div.vcc * r / (r + div.r_ref)
    return float(v) if np.ndim(r_sensor) == 0 else v


def divider_resistance(v, div: DividerConfig = DividerConfig()):
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore"):
        return v * div.r_ref / (div.vcc - v)


def adc_encode(v, adc: AdcConfig = AdcConfig()):
    """Clamped code, rounding half away from zero."""
    x = np.asarray(v, dtype=float) / adc.vref * adc.full_scale
    code = np.clip(np.sign(x) * np.floor(np.abs(x) + 0.5), 0, adc.full_scale).astype(np.int64)
    return int(code) if np.ndim(v) == 0 else code


def adc_decode(code, adc: AdcConfig = AdcConfig()):
    v = np.asarray(code, dtype=float) / adc.full_scale * adc.vref
    return float(v) if np.ndim(code) == 0 else v


def strain_to_codes(strain, sensor: SensorModel = SensorModel(), div: DividerConfig = DividerConfig(),
                    adc: AdcConfig = AdcConfig()):
    return adc_encode(divider_voltage(resistance_of_strain(sensor, strain), div), adc)


def codes_to_signals(codes, sensor: SensorModel = SensorModel(), div: DividerConfig = DividerConfig(),
                     adc: AdcConfig = AdcConfig()):
    """Decoded ``(voltage, resistance, strain)`` arrays."""
    v = adc_decode(codes, adc)
    r = divider_resistance(v, div)
    return v, r, strain_of_resistance(sensor, r)


def strain_error_bound(strain, sensor: SensorModel = SensorModel(), div: DividerConfig = DividerConfig(),
                       adc: AdcConfig = AdcConfig()):
    """Strain error from a one-LSB voltage error, propagated through the exact chain.

    Reconstructed strain is increasing and convex in voltage, so the worst
    case of a +-1 LSB error is the upward step.
    """
    v = np.asarray(divider_voltage(resistance_of_strain(sensor, strain), div), dtype=float)
    v_hi = np.minimum(v + adc.lsb, div.vcc * (1 - 1e-9))
    eps = strain_of_resistance(sensor, divider_resistance(v, div))
    eps_hi = strain_of_resistance(sensor, divider_resistance(v_hi, div))
    return eps_hi - eps
