"""Magnetic phase classification on the (field, temperature) plane.

Three regions: antiferromagnetic at low field and temperature, spin-flop in
a wedge between the reorientation field and the saturation field, and
paramagnetic outside the ordered region.  The boundary curves are smooth
parametrized shapes anchored to the ordering temperature and the spin-flop
field; they are fitting conveniences, not derived thermodynamics, and every
shape parameter can be overridden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import core

ANTIFERROMAGNETIC = "antiferromagnetic"
SPIN_FLOP = "spin-flop"
PARAMAGNETIC = "paramagnetic"

_DEFAULT_SPIN_FLOP_FIELD = core.spin_flop_field(core.SpinSystemParams())


@dataclass(frozen=True)
class PhaseBoundaries:
    """Anchors and shape exponents of the three phase boundaries.

    The ordering (Neel) line is T_N(B) = T_N(0) * (1 - (B/B_c)^neel_exponent);
    the spin-flop line B_sf(T) = B_sf(0) * (1 - (T/T_N(0))^spin_flop_exponent)
    flattens at low temperature; the spin-flop region closes at the
    saturation field as (1 - T/T_N(0))^(1/neel_exponent).
    """

    neel_temperature: float = 2.495  # K, at zero field
    spin_flop_field: float = _DEFAULT_SPIN_FLOP_FIELD  # T, at zero temperature
    neel_exponent: float = 2.0
    critical_field: float = 2.5  # T, where the Neel line reaches zero
    saturation_field: float = 2.5  # T, spin-flop -> paramagnetic at T = 0
    spin_flop_exponent: float = 2.0

    def __post_init__(self):
        for name in (
            "neel_temperature",
            "spin_flop_field",
            "neel_exponent",
            "critical_field",
            "saturation_field",
            "spin_flop_exponent",
        ):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not self.spin_flop_field < self.saturation_field:
            raise ValueError(
                f"spin_flop_field ({self.spin_flop_field}) must be below "
                f"saturation_field ({self.saturation_field})"
            )


def neel_temperature_at(b: float, boundaries: PhaseBoundaries) -> float:
    """Ordering temperature at field ``b`` (kelvin, clipped at zero)."""
    reduced = 1.0 - (b / boundaries.critical_field) ** boundaries.neel_exponent
    return boundaries.neel_temperature * max(0.0, reduced)


def spin_flop_boundary(t: float, boundaries: PhaseBoundaries | None = None) -> float:
    """Field of the AFM / spin-flop boundary at temperature ``t`` (tesla).

    Monotone non-increasing in temperature and flat near zero; only defined
    below the zero-field ordering temperature.
    """
    if boundaries is None:
        boundaries = PhaseBoundaries()
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"temperature must be finite and >= 0, got {t!r}")
    if t >= boundaries.neel_temperature:
        raise ValueError(
            f"temperature {t} K is at or above the zero-field ordering "
            f"temperature {boundaries.neel_temperature} K; no ordered boundary there"
        )
    reduced = (t / boundaries.neel_temperature) ** boundaries.spin_flop_exponent
    return boundaries.spin_flop_field * (1.0 - reduced)


def paramagnetic_boundary(t: float, boundaries: PhaseBoundaries) -> float:
    """Field where the spin-flop region gives way to the paramagnet (tesla)."""
    if t >= boundaries.neel_temperature:
        return 0.0
    reduced = 1.0 - t / boundaries.neel_temperature
    return boundaries.saturation_field * reduced ** (1.0 / boundaries.neel_exponent)


def classify_phase(
    b: float, t: float, boundaries: PhaseBoundaries | None = None
) -> str:
    """Name the phase at (field, temperature).

    Points exactly on a boundary go to the higher-symmetry side
    (paramagnetic over spin-flop over antiferromagnetic).
    """
    if boundaries is None:
        boundaries = PhaseBoundaries()
    if not math.isfinite(b) or b < 0:
        raise ValueError(f"field must be finite and >= 0, got {b!r}")
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"temperature must be finite and >= 0, got {t!r}")
    if t >= neel_temperature_at(b, boundaries):
        return PARAMAGNETIC
    if b >= paramagnetic_boundary(t, boundaries):
        return PARAMAGNETIC
    if b < spin_flop_boundary(t, boundaries):
        return ANTIFERROMAGNETIC
    return SPIN_FLOP


def phase_grid(field_axis, temperature_axis, boundaries: PhaseBoundaries | None = None):
    """Classify every point of a rectangular raster; rows follow the field axis."""
    if boundaries is None:
        boundaries = PhaseBoundaries()
    return [
        [classify_phase(float(b), float(t), boundaries) for t in temperature_axis]
        for b in field_axis
    ]
