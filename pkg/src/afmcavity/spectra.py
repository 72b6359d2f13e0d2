"""Forward synthesis of two-port transmission maps |S21(f, B)|².

The lineshape is the standard coupled-mode transmission of a driven damped
cavity hybridized with one damped magnon mode:

    S21(f, B) = κ_ext / ( i(f − f_c) + κ_tot/2 + G² / (i(f − f_m(B)) + γ_m/2) )

with every linewidth an FWHM in GHz and f_m(B) the lower (descending) magnon
branch.  Maps carry their own axes and a metadata record of the parameters
used to synthesize them; they are immutable after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import core
from .core import CavityParams, CouplingParams, SpinSystemParams


@dataclass(frozen=True)
class LossParams:
    """FWHM linewidths in GHz for the magnon and the two cavity channels."""

    cavity_internal_linewidth: float
    cavity_external_linewidth: float
    magnon_linewidth: float = 0.035

    def __post_init__(self):
        for name in (
            "cavity_internal_linewidth",
            "cavity_external_linewidth",
            "magnon_linewidth",
        ):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")

    @classmethod
    def from_cavity(
        cls, cavity: CavityParams, magnon_linewidth: float = 0.035
    ) -> "LossParams":
        """Split f_cavity/Q into internal/external parts per the cavity's coupling fraction."""
        total = cavity.total_linewidth
        external = cavity.external_coupling_fraction * total
        return cls(
            cavity_internal_linewidth=total - external,
            cavity_external_linewidth=external,
            magnon_linewidth=magnon_linewidth,
        )

    @property
    def cavity_total_linewidth(self) -> float:
        return self.cavity_internal_linewidth + self.cavity_external_linewidth


@dataclass(frozen=True, eq=False)
class TransmissionMap:
    """Linear power transmission on a rectangular (field, frequency) grid.

    ``values[i, j]`` is |S21|² at ``field_axis[i]``, ``freq_axis[j]``.  Axes
    are strictly increasing; values finite and non-negative.
    """

    field_axis: np.ndarray  # tesla
    freq_axis: np.ndarray  # GHz
    values: np.ndarray
    metadata: dict | None = field(default=None)

    def __post_init__(self):
        field_axis = np.asarray(self.field_axis, dtype=float)
        freq_axis = np.asarray(self.freq_axis, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if field_axis.ndim != 1 or freq_axis.ndim != 1:
            raise ValueError("axes must be one-dimensional")
        if field_axis.size == 0 or freq_axis.size == 0:
            raise ValueError("axes must be non-empty")
        for name, axis in (("field_axis", field_axis), ("freq_axis", freq_axis)):
            if not np.all(np.isfinite(axis)):
                raise ValueError(f"{name} must be finite")
            if axis.size > 1 and not np.all(np.diff(axis) > 0):
                raise ValueError(f"{name} must be strictly increasing")
        if values.shape != (field_axis.size, freq_axis.size):
            raise ValueError(
                f"values shape {values.shape} does not match axes "
                f"({field_axis.size}, {freq_axis.size})"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("values must be finite and >= 0")
        for arr, name in ((field_axis, "field_axis"), (freq_axis, "freq_axis"), (values, "values")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def spectrum_at(self, field_index: int) -> np.ndarray:
        """Transmission vs frequency at one field point (a column of the map)."""
        return self.values[field_index]


def _evaluate_s21(freqs, f_magnon, cavity, coupling, loss) -> np.ndarray:
    """Vectorized |S21|² over a frequency array at one magnon frequency."""
    freqs = np.asarray(freqs, dtype=float)
    kappa_ext = loss.cavity_external_linewidth
    kappa_tot = loss.cavity_total_linewidth
    magnon_den = 1j * (freqs - f_magnon) + 0.5 * loss.magnon_linewidth
    big_g2 = coupling.big_g**2
    # A lossless magnon driven exactly on resonance shorts the cavity out:
    # the hybrid denominator diverges and the transmission limit is zero.
    singular = magnon_den == 0
    shift = big_g2 / np.where(singular, 1.0, magnon_den)
    den = 1j * (freqs - cavity.f_cavity) + 0.5 * kappa_tot + shift
    # a fully lossless cavity on resonance is 0/0; its transmission limit is 0
    dead = den == 0
    power = np.abs(kappa_ext / np.where(dead, 1.0, den)) ** 2
    if big_g2 > 0:
        power = np.where(singular, 0.0, power)
    return np.where(dead, 0.0, power)


def s21_power(
    f: float,
    field: float,
    spins: SpinSystemParams,
    cavity: CavityParams,
    coupling: CouplingParams,
    loss: LossParams,
    allow_beyond_spin_flop: bool = False,
) -> float:
    """Linear power transmission at a single (frequency, field) point.

    Fields past the spin-flop transition are extrapolation (the magnon branch
    is clamped at zero there) and are rejected unless explicitly allowed.
    """
    if not np.isfinite(f) or f <= 0:
        raise ValueError(f"f must be finite and > 0, got {f!r}")
    branches = core.magnon_branches(spins, field)
    if branches.clamped and not allow_beyond_spin_flop:
        raise ValueError(
            f"field {field} T lies beyond the spin-flop field "
            f"{core.spin_flop_field(spins):.4f} T; pass allow_beyond_spin_flop=True "
            "to evaluate the (extrapolated) clamped model there"
        )
    return float(_evaluate_s21(f, branches.lower, cavity, coupling, loss))


def synthesize_map(
    field_axis,
    freq_axis,
    spins: SpinSystemParams,
    cavity: CavityParams,
    coupling: CouplingParams,
    loss: LossParams,
) -> TransmissionMap:
    """Build the full |S21|² grid for a field sweep.

    Columns beyond the spin-flop field get the decoupled (G = 0) cavity
    response instead of an invalid magnon model; those field values are
    listed in the metadata.
    """
    field_axis = np.asarray(field_axis, dtype=float)
    freq_axis = np.asarray(freq_axis, dtype=float)
    if field_axis.size == 0 or freq_axis.size == 0:
        raise ValueError("axes must be non-empty")
    if np.any(field_axis < 0):
        raise ValueError("fields must be >= 0")
    if np.any(freq_axis <= 0):
        raise ValueError("frequencies must be > 0")

    flop = core.spin_flop_field(spins)
    decoupled = CouplingParams(big_g=0.0)
    values = np.empty((field_axis.size, freq_axis.size))
    beyond = []
    for i, b in enumerate(field_axis):
        branches = core.magnon_branches(spins, float(b))
        if branches.clamped:
            beyond.append(float(b))
            values[i] = _evaluate_s21(freq_axis, branches.lower, cavity, decoupled, loss)
        else:
            values[i] = _evaluate_s21(freq_axis, branches.lower, cavity, coupling, loss)

    metadata = {
        "spins": {
            "g_factor": spins.g_factor,
            "f_afmr0": spins.f_afmr0,
            "neel_temperature": spins.neel_temperature,
        },
        "cavity": {
            "f_cavity": cavity.f_cavity,
            "quality_factor": cavity.quality_factor,
            "external_coupling_fraction": cavity.external_coupling_fraction,
        },
        "coupling": {"big_g": coupling.big_g},
        "loss": {
            "cavity_internal_linewidth": loss.cavity_internal_linewidth,
            "cavity_external_linewidth": loss.cavity_external_linewidth,
            "magnon_linewidth": loss.magnon_linewidth,
        },
        "spin_flop_field": flop,
        "beyond_spin_flop_fields": beyond,
    }
    return TransmissionMap(field_axis, freq_axis, values, metadata)


def add_noise(tmap: TransmissionMap, sigma_db: float, seed: int) -> TransmissionMap:
    """Multiplicative log-normal noise: value -> value * 10^(n/10), n ~ N(0, sigma_db).

    dB-domain noise matches how a network analyzer measures and keeps the
    Lorentzian tails undistorted.  Deterministic for a fixed seed.
    """
    if not np.isfinite(sigma_db) or sigma_db < 0:
        raise ValueError(f"sigma_db must be finite and >= 0, got {sigma_db!r}")
    rng = np.random.default_rng(seed)
    exponents = rng.normal(0.0, sigma_db, size=tmap.values.shape)
    noisy = tmap.values * 10.0 ** (exponents / 10.0)
    metadata = dict(tmap.metadata) if tmap.metadata is not None else {}
    metadata["noise"] = {"sigma_db": float(sigma_db), "seed": int(seed)}
    return TransmissionMap(tmap.field_axis, tmap.freq_axis, noisy, metadata)


@dataclass(frozen=True)
class VerticalCut:
    """Transmission vs field at one frequency sample of a map."""

    frequency: float  # actual grid frequency used, GHz
    fields: np.ndarray  # tesla
    powers: np.ndarray

    def __post_init__(self):
        fields = np.asarray(self.fields, dtype=float)
        powers = np.asarray(self.powers, dtype=float)
        fields.setflags(write=False)
        powers.setflags(write=False)
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "powers", powers)

    def __iter__(self):
        return iter(zip(self.fields.tolist(), self.powers.tolist()))

    def __len__(self) -> int:
        return self.fields.size


def vertical_cut(tmap: TransmissionMap, f: float) -> VerticalCut:
    """Slice the map along field at the frequency sample nearest ``f``.

    ``f`` must lie inside the frequency axis range; the cut records the grid
    frequency actually used.
    """
    lo, hi = float(tmap.freq_axis[0]), float(tmap.freq_axis[-1])
    if not np.isfinite(f) or f < lo or f > hi:
        raise ValueError(
            f"frequency {f!r} GHz outside the map's axis range [{lo}, {hi}] GHz"
        )
    j = int(np.argmin(np.abs(tmap.freq_axis - f)))
    return VerticalCut(
        frequency=float(tmap.freq_axis[j]),
        fields=tmap.field_axis.copy(),
        powers=tmap.values[:, j].copy(),
    )


# --- serialization ---------------------------------------------------------

CSV_HEADER = "# field_T,freq_GHz,s21_linear"
CSV_HEADER_DB = "# field_T,freq_GHz,s21_db"


def map_to_csv(tmap: TransmissionMap, db: bool = False) -> str:
    """CSV text: one (field, freq, value) triple per line, field-major order.

    Floats are written with repr precision so a read-back reproduces the map
    bit for bit.  ``db=True`` writes 10*log10(values) instead; that format is
    for plotting and is not read back (zero transmission has no dB value).
    """
    lines = [CSV_HEADER_DB if db else CSV_HEADER]
    values = tmap.values
    if db:
        with np.errstate(divide="ignore"):
            values = 10.0 * np.log10(values)
    for b, row in zip(tmap.field_axis.tolist(), values.tolist()):
        for f, v in zip(tmap.freq_axis.tolist(), row):
            lines.append(f"{b!r},{f!r},{v!r}")
    return "\n".join(lines) + "\n"


def map_from_csv(text: str) -> TransmissionMap:
    """Rebuild a map from ``map_to_csv`` output (linear format only).

    Raises ValueError naming the offending line on malformed input.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ValueError(f"line 1: expected header {CSV_HEADER!r}")
    triples = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 comma-separated values")
        try:
            triples.append(tuple(float(p) for p in parts))
        except ValueError:
            raise ValueError(f"line {lineno}: could not parse {line!r}") from None
    if not triples:
        raise ValueError("line 2: no data rows")
    data = np.asarray(triples)
    field_axis = np.unique(data[:, 0])
    freq_axis = np.unique(data[:, 1])
    if data.shape[0] != field_axis.size * freq_axis.size:
        raise ValueError(
            f"line {len(lines)}: {data.shape[0]} rows do not form a complete "
            f"{field_axis.size} x {freq_axis.size} grid"
        )
    values = np.full((field_axis.size, freq_axis.size), np.nan)
    i = np.searchsorted(field_axis, data[:, 0])
    j = np.searchsorted(freq_axis, data[:, 1])
    values[i, j] = data[:, 2]
    if np.any(np.isnan(values)):
        raise ValueError(
            f"line {len(lines)}: grid has duplicate or missing (field, freq) samples"
        )
    return TransmissionMap(field_axis, freq_axis, values)


def save_map(tmap: TransmissionMap, csv_path, db: bool = False) -> Path:
    """Write the CSV plus a JSON metadata sidecar with the same stem."""
    csv_path = Path(csv_path)
    csv_path.write_text(map_to_csv(tmap, db=db))
    sidecar = csv_path.with_suffix(".json")
    sidecar.write_text(
        json.dumps(tmap.metadata or {}, sort_keys=True, indent=2) + "\n"
    )
    return csv_path


def load_map(csv_path) -> TransmissionMap:
    """Read a CSV map and, if present, its JSON metadata sidecar."""
    csv_path = Path(csv_path)
    tmap = map_from_csv(csv_path.read_text())
    sidecar = csv_path.with_suffix(".json")
    metadata = None
    if sidecar.exists():
        metadata = json.loads(sidecar.read_text())
    return TransmissionMap(tmap.field_axis, tmap.freq_axis, tmap.values, metadata)
