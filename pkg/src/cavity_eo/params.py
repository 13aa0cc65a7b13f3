"""Device and environment parameters for cavity electro-optic systems.

Every frequency handled by this package is an angular frequency in rad/s.
Use :func:`angular_frequency` / :func:`hertz` at the boundary when numbers
are quoted in Hz (or as ``2*pi x Hz``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import scipy.constants as _sc

__all__ = [
    "InvalidParameterError",
    "PhysicalConstants",
    "CONSTANTS",
    "EomDeviceParams",
    "ModeSpec",
    "PumpConfig",
    "angular_frequency",
    "hertz",
    "angular_from_wavelength",
    "coupling_rate",
    "voltage_zero_point",
    "phase_per_volt",
    "thermal_occupation",
    "pump_photon_number",
    "detuning_for_mu",
    "load_device_params",
    "device_params_from_dict",
    "device_params_to_dict",
]


class InvalidParameterError(ValueError):
    """A physical parameter is outside its allowed range."""


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values in SI units."""

    hbar: float = _sc.hbar
    k_B: float = _sc.k
    c: float = _sc.c


CONSTANTS = PhysicalConstants()


def angular_frequency(f_hz):
    """Convert an ordinary frequency in Hz to rad/s (``2*pi*f``)."""
    return 2.0 * math.pi * f_hz


def hertz(omega):
    """Convert an angular frequency in rad/s to Hz."""
    return omega / (2.0 * math.pi)


def angular_from_wavelength(wavelength_m: float) -> float:
    """Vacuum wavelength (m) -> optical angular frequency (rad/s)."""
    if wavelength_m <= 0:
        raise InvalidParameterError(f"wavelength must be positive, got {wavelength_m}")
    return 2.0 * math.pi * CONSTANTS.c / wavelength_m


def _require_positive(**values: float) -> None:
    for name, v in values.items():
        if not (v > 0) or not math.isfinite(v):
            raise InvalidParameterError(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class EomDeviceParams:
    """Geometry and material constants of an electro-optic modulator inside a cavity.

    ``overlap_factor`` scales the coupling to account for partial overlap of
    the optical and microwave modes; it is not computed here.
    """

    n: float
    r: float  # electro-optic coefficient, m/V
    l: float  # medium length, m
    d: float  # electrode gap / thickness, m
    tau: float  # optical round-trip time, s
    C: float  # resonator capacitance, F
    omega_a: float
    omega_b: float
    overlap_factor: float = 1.0

    def __post_init__(self):
        _require_positive(n=self.n, l=self.l, d=self.d, tau=self.tau, C=self.C,
                          omega_a=self.omega_a, omega_b=self.omega_b)
        if not (self.r >= 0) or not math.isfinite(self.r):
            raise InvalidParameterError(f"r must be non-negative, got {self.r!r}")
        if not (0 < self.overlap_factor <= 1):
            raise InvalidParameterError(
                f"overlap_factor must lie in (0, 1], got {self.overlap_factor!r}")
        # small tolerance so that l = c*tau exactly survives a JSON round trip
        if self.l > CONSTANTS.c * self.tau * (1 + 1e-12):
            raise InvalidParameterError(
                f"medium length l={self.l} m exceeds c*tau={CONSTANTS.c * self.tau} m")
        if self.omega_b >= self.omega_a:
            raise InvalidParameterError("omega_b must be much smaller than omega_a")


@dataclass(frozen=True)
class ModeSpec:
    """A single damped bosonic mode coupled to a thermal bath."""

    omega: float
    gamma: float
    bath_temperature: float = 0.0

    def __post_init__(self):
        _require_positive(omega=self.omega)
        if not (self.gamma >= 0) or not math.isfinite(self.gamma):
            raise InvalidParameterError(f"gamma must be >= 0, got {self.gamma!r}")
        if not (self.bath_temperature >= 0):
            raise InvalidParameterError(
                f"bath_temperature must be >= 0, got {self.bath_temperature!r}")

    @property
    def occupation(self) -> float:
        return float(thermal_occupation(self.omega, self.bath_temperature))

    @classmethod
    def with_occupation(cls, omega: float, gamma: float, occupation: float) -> "ModeSpec":
        """Build a mode whose bath temperature yields the requested mean occupation."""
        if occupation < 0:
            raise InvalidParameterError(f"occupation must be >= 0, got {occupation}")
        if occupation == 0:
            return cls(omega, gamma, 0.0)
        T = CONSTANTS.hbar * omega / (CONSTANTS.k_B * math.log1p(1.0 / occupation))
        return cls(omega, gamma, T)


def _wrap_phase(phi: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.remainder(phi, 2.0 * math.pi)
    if wrapped == -math.pi:
        wrapped = math.pi
    return wrapped


@dataclass(frozen=True)
class PumpConfig:
    """Continuous-wave optical pump.

    ``omega`` is the optical carrier (rad/s); ``detuning`` is the pump
    frequency minus the nearest cavity resonance.
    """

    power: float
    omega: float
    detuning: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if not (self.power >= 0) or not math.isfinite(self.power):
            raise InvalidParameterError(f"pump power must be >= 0, got {self.power!r}")
        _require_positive(omega=self.omega)
        object.__setattr__(self, "phase", _wrap_phase(self.phase))

    @classmethod
    def from_wavelength(cls, power: float, wavelength: float, detuning: float = 0.0,
                        phase: float = 0.0) -> "PumpConfig":
        return cls(power, angular_from_wavelength(wavelength), detuning, phase)


def voltage_zero_point(omega_b: float, C: float) -> float:
    """Zero-point voltage scale sqrt(hbar*omega_b / 2C) multiplying (b + b^dagger)."""
    _require_positive(omega_b=omega_b, C=C)
    return math.sqrt(CONSTANTS.hbar * omega_b / (2.0 * C))


def phase_per_volt(dev: EomDeviceParams) -> float:
    """Round-trip optical phase shift per volt across the medium (rad/V)."""
    return dev.omega_a * dev.n**3 * dev.r * dev.l / (CONSTANTS.c * dev.d)


def coupling_rate(dev: EomDeviceParams) -> float:
    """Single-photon electro-optic coupling rate g in rad/s.

    g = (omega_a n^3 r l)/(c tau d) * sqrt(hbar omega_b / 2C), times the
    optional overlap factor.
    """
    return dev.overlap_factor * phase_per_volt(dev) * voltage_zero_point(dev.omega_b, dev.C) / dev.tau


def thermal_occupation(omega, T):
    """Bose-Einstein occupation 1/(exp(hbar*omega/k_B*T) - 1).

    Works elementwise on arrays. ``T == 0`` gives exactly 0.
    """
    omega = np.asarray(omega, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(omega <= 0):
        raise InvalidParameterError("omega must be positive")
    if np.any(T < 0):
        raise InvalidParameterError("temperature must be >= 0")
    with np.errstate(divide="ignore", over="ignore"):
        x = np.where(T > 0, CONSTANTS.hbar * omega / (CONSTANTS.k_B * np.where(T > 0, T, 1.0)), np.inf)
        n = 1.0 / np.expm1(x)
    n = np.where(T > 0, n, 0.0)
    return float(n) if n.ndim == 0 else n


def pump_photon_number(pump: PumpConfig, gamma_a: float) -> float:
    """Intracavity photon number of a driven Lorentzian resonance.

    |alpha|^2 = gamma_a P / (hbar omega (delta^2 + gamma_a^2/4)); undepleted
    continuous-wave pump.
    """
    _require_positive(gamma_a=gamma_a)
    return gamma_a * pump.power / (
        CONSTANTS.hbar * pump.omega * (pump.detuning**2 + gamma_a**2 / 4.0))


def detuning_for_mu(mu: float, gamma_a: float) -> float:
    """Positive detuning delta with gamma_a^2/(16 delta^2) = mu."""
    _require_positive(mu=mu, gamma_a=gamma_a)
    return gamma_a / (4.0 * math.sqrt(mu))


# JSON documents use explicit unit suffixes.
_DEVICE_KEYS = {
    "n": "n",
    "r_m_per_V": "r",
    "l_m": "l",
    "d_m": "d",
    "tau_s": "tau",
    "C_F": "C",
    "omega_a_rad_per_s": "omega_a",
    "omega_b_rad_per_s": "omega_b",
    "overlap_factor": "overlap_factor",
}


def device_params_from_dict(doc: Mapping[str, Any]) -> EomDeviceParams:
    """Build device parameters from a unit-suffixed mapping.

    ``wavelength_m`` may replace ``omega_a_rad_per_s`` and ``omega_b_Hz``
    may replace ``omega_b_rad_per_s``.
    """
    doc = dict(doc)
    if "wavelength_m" in doc and "omega_a_rad_per_s" not in doc:
        doc["omega_a_rad_per_s"] = angular_from_wavelength(float(doc.pop("wavelength_m")))
    if "omega_b_Hz" in doc and "omega_b_rad_per_s" not in doc:
        doc["omega_b_rad_per_s"] = angular_frequency(float(doc.pop("omega_b_Hz")))
    unknown = set(doc) - set(_DEVICE_KEYS)
    if unknown:
        raise InvalidParameterError(f"unknown device keys: {sorted(unknown)}")
    missing = set(_DEVICE_KEYS) - {"overlap_factor"} - set(doc)
    if missing:
        raise InvalidParameterError(f"missing device keys: {sorted(missing)}")
    return EomDeviceParams(**{_DEVICE_KEYS[k]: float(v) for k, v in doc.items()})


def device_params_to_dict(dev: EomDeviceParams) -> dict:
    inverse = {v: k for k, v in _DEVICE_KEYS.items()}
    return {inverse[k]: v for k, v in asdict(dev).items()}


def load_device_params(path) -> EomDeviceParams:
    """Read device parameters from a JSON file (a top-level ``device`` block is accepted)."""
    doc = json.loads(Path(path).read_text())
    return device_params_from_dict(doc.get("device", doc))
