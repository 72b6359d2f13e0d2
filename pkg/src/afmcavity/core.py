"""Closed-form model of the coupled cavity / two-sublattice antiferromagnet.

The antiferromagnet is described by a degenerate pair of resonance modes at
``f_afmr0`` that Zeeman-split linearly with applied field; the cavity-magnon
hybrid by the eigenvalues of the 2x2 beam-splitter coupling matrix.  All
frequencies are ordinary frequencies in GHz, fields in tesla.  Every function
here is pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import GHZ_PER_TESLA_PER_G


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class SpinSystemParams:
    """Identity of the antiferromagnet: g-factor, zero-field resonance, ordering temperature."""

    g_factor: float = 2.0
    f_afmr0: float = 34.0  # GHz, zero-field resonance frequency
    neel_temperature: float = 2.495  # K

    def __post_init__(self):
        for name in ("g_factor", "f_afmr0", "neel_temperature"):
            value = _require_finite(name, getattr(self, name))
            if value <= 0:
                raise ValueError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class CavityParams:
    """Microwave cavity: center frequency, quality factor, external coupling share."""

    f_cavity: float = 11.245  # GHz
    quality_factor: float = 1300.0
    external_coupling_fraction: float = 0.5

    def __post_init__(self):
        if _require_finite("f_cavity", self.f_cavity) <= 0:
            raise ValueError("f_cavity must be > 0")
        if _require_finite("quality_factor", self.quality_factor) <= 0:
            raise ValueError("quality_factor must be > 0")
        frac = _require_finite(
            "external_coupling_fraction", self.external_coupling_fraction
        )
        if not 0.0 < frac < 1.0:
            raise ValueError("external_coupling_fraction must lie in (0, 1)")

    @property
    def total_linewidth(self) -> float:
        """Total cavity linewidth (FWHM, GHz): f_cavity / Q."""
        return self.f_cavity / self.quality_factor


@dataclass(frozen=True)
class CouplingParams:
    """Collective coupling strength, optionally decomposed into sqrt(N) * g_single."""

    big_g: float = 1.72  # GHz
    n_spins: float | None = None
    g_single: float | None = None  # GHz

    def __post_init__(self):
        if _require_finite("big_g", self.big_g) < 0:
            raise ValueError("big_g must be >= 0")
        if (self.n_spins is None) != (self.g_single is None):
            return
        if self.n_spins is None:
            return
        if self.n_spins < 0 or self.g_single < 0:
            raise ValueError("n_spins and g_single must be >= 0")
        expected = collective_coupling(self.n_spins, self.g_single)
        scale = max(abs(self.big_g), abs(expected), 1e-300)
        if abs(self.big_g - expected) > 1e-9 * scale:
            raise ValueError(
                f"big_g={self.big_g} inconsistent with sqrt(n_spins)*g_single={expected}"
            )


@dataclass(frozen=True)
class BranchPair:
    """An ordered pair of mode frequencies (GHz).

    ``clamped`` marks a lower branch that was pinned at zero because the
    requested field lies beyond the spin-flop transition, where the linear
    two-sublattice model stops being valid.
    """

    lower: float
    upper: float
    clamped: bool = False

    def __post_init__(self):
        _require_finite("lower", self.lower)
        _require_finite("upper", self.upper)
        if self.lower > self.upper:
            raise ValueError(f"lower={self.lower} exceeds upper={self.upper}")


def magnon_branches(spins: SpinSystemParams, field: float) -> BranchPair:
    """Zeeman-split resonance pair at the given field.

    upper = f_afmr0 + g * gamma1 * B, lower = f_afmr0 - g * gamma1 * B with
    gamma1 = 13.996245 GHz/T.  The lower branch is clamped at 0 (and flagged)
    past the spin-flop field, where this linear model no longer applies.
    """
    field = _require_finite("field", field)
    if field < 0:
        raise ValueError(f"field must be >= 0, got {field}")
    zeeman = spins.g_factor * GHZ_PER_TESLA_PER_G * field
    lower = spins.f_afmr0 - zeeman
    clamped = lower < 0.0
    return BranchPair(
        lower=max(0.0, lower), upper=spins.f_afmr0 + zeeman, clamped=clamped
    )


def spin_flop_field(spins: SpinSystemParams) -> float:
    """Field (tesla) where the lower branch reaches zero frequency."""
    return spins.f_afmr0 / (spins.g_factor * GHZ_PER_TESLA_PER_G)


def polariton_frequencies(
    cavity: CavityParams, f_magnon: float, coupling: CouplingParams
) -> BranchPair:
    """Dressed-state frequencies of the coupled cavity-magnon pair.

    Eigenvalues of [[f_c, G], [G, f_m]]:
    f± = (f_c + f_m)/2 ± sqrt(((f_c - f_m)/2)² + G²), so the splitting is
    at least 2G, with equality exactly on resonance.
    """
    f_magnon = _require_finite("f_magnon", f_magnon)
    if f_magnon < 0:
        raise ValueError(f"f_magnon must be >= 0, got {f_magnon}")
    mean = 0.5 * (cavity.f_cavity + f_magnon)
    half_detuning = 0.5 * (cavity.f_cavity - f_magnon)
    radius = math.hypot(half_detuning, coupling.big_g)
    return BranchPair(lower=mean - radius, upper=mean + radius)


def crossing_field(spins: SpinSystemParams, cavity: CavityParams) -> float:
    """Field (tesla) where the descending lower magnon branch meets the cavity."""
    if spins.f_afmr0 <= cavity.f_cavity:
        raise ValueError(
            "no crossing: zero-field resonance "
            f"{spins.f_afmr0} GHz does not exceed the cavity at {cavity.f_cavity} GHz"
        )
    return (spins.f_afmr0 - cavity.f_cavity) / (
        spins.g_factor * GHZ_PER_TESLA_PER_G
    )


@dataclass(frozen=True)
class RegimeReport:
    """Coupling-regime label plus the ratio G / f_cavity it was judged on."""

    label: str  # weak | strong | ultrastrong | deep-strong
    ratio: float


def coupling_regime(
    coupling: CouplingParams, cavity: CavityParams, magnon_linewidth: float
) -> RegimeReport:
    """Classify the coupling strength against loss rates and mode frequency.

    strong: G exceeds both the cavity and magnon linewidths; ultrastrong
    additionally requires G/f_cavity >= 0.1 and deep-strong >= 1.  Purely
    ratio-based, so invariant under a common rescaling of all frequencies.
    """
    magnon_linewidth = _require_finite("magnon_linewidth", magnon_linewidth)
    if magnon_linewidth < 0:
        raise ValueError("magnon_linewidth must be >= 0")
    ratio = coupling.big_g / cavity.f_cavity
    if coupling.big_g <= max(cavity.total_linewidth, magnon_linewidth):
        label = "weak"
    elif ratio >= 1.0:
        label = "deep-strong"
    elif ratio >= 0.1:
        label = "ultrastrong"
    else:
        label = "strong"
    return RegimeReport(label=label, ratio=ratio)


def collective_coupling(n_spins: float, g_single: float) -> float:
    """Ensemble coupling sqrt(N) * g_single (GHz)."""
    if n_spins < 0 or g_single < 0:
        raise ValueError("n_spins and g_single must be >= 0")
    return math.sqrt(n_spins) * g_single
