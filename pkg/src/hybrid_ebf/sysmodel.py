"""Scenario parameters and unit conversions.

Everything inside the package is SI (watts, joules, seconds, radians).
dBm and friends only show up at the I/O boundary.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 3e8


class InvalidParameter(ValueError):
    """A scenario or model parameter is outside its admissible range."""


class NumericError(ArithmeticError):
    """A numerical routine (solve, quadrature) failed to produce a result."""


class ScheduleInfeasible(InvalidParameter):
    """The CE slots do not fit inside one coherence block (N*tau_c > tau)."""


def dbm_to_watts(x):
    out = 10.0 ** (np.asarray(x, dtype=float) / 10.0) * 1e-3
    return out if np.ndim(x) else float(out)


def watts_to_dbm(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("watts_to_dbm needs strictly positive power")
    out = 10.0 * np.log10(arr / 1e-3)
    return out if np.ndim(x) else float(out)


@dataclass(frozen=True)
class SystemParams:
    """All constants of one RFET scenario.

    ``antenna_spacing`` and ``unit_ref_atten`` default to half a wavelength and
    ``(spacing / 2pi)^2``; ``antenna_gains`` defaults to all ones.
    """

    n_antennas: int = 20
    coherence_time: float = 10e-3
    ce_slot_fixed: float = 10e-6
    dl_tx_power: float = dbm_to_watts(36.0)
    ul_pilot_power_max: float = dbm_to_watts(10.0)
    ul_pilot_power_fixed: float = dbm_to_watts(-10.0)
    noise_psd: float = dbm_to_watts(-150.0)
    carrier_freq: float = 915e6
    distance: float = 15.0
    pathloss_exp: float = 2.5
    rice_factor: float = 2.0
    aoa_deg: float = 0.0
    antenna_gains: tuple[float, ...] | None = None
    antenna_spacing: float | None = None
    unit_ref_atten: float | None = None

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 1:
            raise InvalidParameter(f"n_antennas must be a positive integer, got {self.n_antennas}")
        object.__setattr__(self, "n_antennas", int(self.n_antennas))
        if self.coherence_time <= 0:
            raise InvalidParameter("coherence_time must be > 0")
        if self.noise_psd <= 0:
            raise InvalidParameter("noise_psd must be > 0")
        for name in ("dl_tx_power", "ul_pilot_power_max", "ul_pilot_power_fixed", "ce_slot_fixed"):
            if getattr(self, name) < 0:
                raise InvalidParameter(f"{name} must be >= 0")
        if self.carrier_freq <= 0:
            raise InvalidParameter("carrier_freq must be > 0")
        if self.rice_factor < 0:
            raise InvalidParameter("rice_factor must be >= 0")
        if self.antenna_spacing is None:
            object.__setattr__(self, "antenna_spacing", SPEED_OF_LIGHT / (2.0 * self.carrier_freq))
        if self.unit_ref_atten is None:
            object.__setattr__(self, "unit_ref_atten", (self.antenna_spacing / (2.0 * np.pi)) ** 2)
        if self.antenna_gains is None:
            gains = (1.0,) * self.n_antennas
        else:
            gains = tuple(float(a) for a in self.antenna_gains)
        if len(gains) != self.n_antennas:
            raise InvalidParameter("antenna_gains must have one entry per antenna")
        if any(a <= 0 for a in gains):
            raise InvalidParameter("antenna gains must be > 0")
        object.__setattr__(self, "antenna_gains", gains)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    def evolve(self, **changes) -> "SystemParams":
        """``dataclasses.replace`` that re-derives dependent defaults.

        Changing ``carrier_freq`` re-derives spacing and reference attenuation,
        changing ``n_antennas`` resets the gains, unless those are passed too.
        """
        current = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        if "carrier_freq" in changes:
            changes.setdefault("antenna_spacing", None)
        if "antenna_spacing" in changes:
            changes.setdefault("unit_ref_atten", None)
        if "n_antennas" in changes and "antenna_gains" not in changes:
            changes["antenna_gains"] = None
        current.update(changes)
        return SystemParams(**current)


def default_params(**overrides) -> SystemParams:
    """Baseline scenario: N=20, tau=10 ms, p_d=36 dBm, d=15 m, K=2, ..."""
    return SystemParams().evolve(**overrides) if overrides else SystemParams()


def large_scale_beta(p: SystemParams) -> float:
    if p.distance <= 0:
        raise InvalidParameter("distance must be > 0")
    return p.unit_ref_atten / p.distance**p.pathloss_exp


PARAM_FIELDS = tuple(f.name for f in dataclasses.fields(SystemParams))
