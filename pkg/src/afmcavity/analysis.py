"""Inverse problems: peak extraction, avoided-crossing fits, linewidths, trends.

The forward model lives in :mod:`afmcavity.core`; everything here recovers its
parameters from transmission data.  Fits run on the damped least-squares
solver in :mod:`afmcavity.optimize` with analytic Jacobians where the model
has one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import core, optimize
from .constants import GHZ_PER_TESLA_PER_G
from .core import CavityParams, CouplingParams, SpinSystemParams
from .spectra import TransmissionMap, VerticalCut

PARAMETER_ORDER = ("big_g", "f_afmr0", "g_factor", "f_cavity")


class FitError(ValueError):
    """Raised when input data cannot support the requested fit."""


class ConvergenceError(RuntimeError):
    """Raised when an optimizer fails to reach its tolerances."""


# --- peak extraction --------------------------------------------------------


@dataclass(frozen=True)
class ColumnPeaks:
    """Up to two refined peak positions for one field column."""

    field: float  # tesla
    positions: tuple[float, ...]  # GHz
    heights: tuple[float, ...]
    uncertainties: tuple[float, ...]  # GHz


@dataclass(frozen=True)
class PeakSet:
    """Per-field peak lists extracted from a transmission map."""

    columns: tuple[ColumnPeaks, ...]
    freq_range: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.freq_range
        for col in self.columns:
            if len(col.positions) > 2:
                raise ValueError("at most two peaks may be retained per column")
            for p in col.positions:
                if not lo <= p <= hi:
                    raise ValueError(
                        f"peak at {p} GHz outside the map frequency range [{lo}, {hi}]"
                    )

    def observations(self) -> list[tuple[float, float]]:
        """Flatten to (field, peak frequency) pairs."""
        return [(c.field, p) for c in self.columns for p in c.positions]

    def to_csv(self) -> str:
        lines = ["field_T,peak_GHz,height"]
        for col in self.columns:
            for p, h in zip(col.positions, col.heights):
                lines.append(f"{col.field!r},{p!r},{h!r}")
        return "\n".join(lines) + "\n"


def _local_maxima(y: np.ndarray) -> np.ndarray:
    """Interior local maxima; two-sample plateaus count once (left sample)."""
    if y.size < 3:
        return np.empty(0, dtype=int)
    interior = y[1:-1]
    candidates = (
        (interior >= y[:-2])
        & (interior >= y[2:])
        & ((interior > y[:-2]) | (interior > y[2:]))
    )
    idx = np.flatnonzero(candidates) + 1
    if idx.size > 1:
        duplicate = (np.diff(idx) == 1) & (y[idx[1:]] == y[idx[:-1]])
        idx = idx[np.concatenate(([True], ~duplicate))]
    return idx


def _prominence(y: np.ndarray, i: int) -> float:
    """Topographic prominence: height above the deeper of the two base saddles."""
    h = y[i]
    if h == y.max():
        return float(h - y.min())
    bases = []
    for step in (-1, 1):
        j = i + step
        base = h
        while 0 <= j < y.size and y[j] <= h:
            base = min(base, y[j])
            j += step
        bases.append(base)
    return float(h - max(bases))


def _parabolic_vertex(x: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    """Refine a grid maximum with the quadratic through its three samples.

    Works in coordinates centered on the grid point, so a symmetric pair of
    neighbors returns the grid frequency itself with no rounding drift; the
    vertex of a genuine 3-point maximum always lies inside the bracket.
    """
    t0 = x[i - 1] - x[i]
    t2 = x[i + 1] - x[i]
    d0 = y[i - 1] - y[i]
    d2 = y[i + 1] - y[i]
    det = t0 * t2 * (t2 - t0)
    slope = (d0 * t2 * t2 - d2 * t0 * t0) / det
    curvature = (d2 * t0 - d0 * t2) / det
    if curvature >= 0:  # collinear or upward: nothing to interpolate
        return float(x[i]), float(y[i])
    shift = -slope / (2.0 * curvature)
    height = y[i] - slope * slope / (4.0 * curvature)
    return float(x[i] + shift), float(height)


def extract_peaks(tmap: TransmissionMap, min_prominence: float = 0.1) -> PeakSet:
    """Locate up to two transmission peaks per field column.

    A sample qualifies if its topographic prominence reaches
    ``min_prominence`` times the column maximum; the two most prominent are
    kept and refined by three-point quadratic interpolation.  Position
    uncertainty is resolution-limited at half the local grid step.  Columns
    without qualifying peaks stay in the set with empty tuples.
    """
    if not 0.0 < min_prominence < 1.0:
        raise ValueError(f"min_prominence must lie in (0, 1), got {min_prominence!r}")
    freqs = tmap.freq_axis
    columns = []
    for i, b in enumerate(tmap.field_axis):
        y = tmap.values[i]
        threshold = min_prominence * float(y.max())
        candidates = []
        if threshold > 0:
            maxima = _local_maxima(y)
            # prominence never exceeds height, so short maxima can be skipped
            for j in maxima[y[maxima] >= threshold]:
                prom = _prominence(y, j)
                if prom >= threshold:
                    candidates.append((prom, int(j)))
        candidates.sort(key=lambda t: (-t[0], t[1]))
        picks = sorted(j for _, j in candidates[:2])
        positions, heights, uncertainties = [], [], []
        for j in picks:
            pos, height = _parabolic_vertex(freqs, y, j)
            positions.append(pos)
            heights.append(height)
            uncertainties.append(float(0.5 * (freqs[j + 1] - freqs[j - 1]) / 2.0))
        columns.append(
            ColumnPeaks(
                field=float(b),
                positions=tuple(positions),
                heights=tuple(heights),
                uncertainties=tuple(uncertainties),
            )
        )
    return PeakSet(
        columns=tuple(columns),
        freq_range=(float(freqs[0]), float(freqs[-1])),
    )


# --- avoided-crossing fit ---------------------------------------------------


@dataclass(frozen=True)
class FitReport:
    """Result of a least-squares parameter fit."""

    parameter_names: tuple[str, ...]
    values: tuple[float, ...]
    uncertainties: tuple[float, ...]  # 1 sigma, same order
    residual_rms: float  # GHz
    window: tuple[float, float]  # tesla
    iterations: int
    converged: bool
    gradient_norm: float
    fixed: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if any(u < 0 for u in self.uncertainties):
            raise ValueError("uncertainties must be >= 0")

    def value_of(self, name: str) -> float:
        return self.values[self.parameter_names.index(name)]

    def uncertainty_of(self, name: str) -> float:
        return self.uncertainties[self.parameter_names.index(name)]

    def to_json_dict(self) -> dict:
        return {
            "parameters": dict(zip(self.parameter_names, self.values)),
            "uncertainties": dict(zip(self.parameter_names, self.uncertainties)),
            "fixed": dict(self.fixed),
            "residual_rms_ghz": self.residual_rms,
            "window_t": list(self.window),
            "iterations": self.iterations,
            "converged": self.converged,
            "gradient_norm": self.gradient_norm,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def _branch_model(theta: dict[str, float], b: float) -> tuple[float, float, dict]:
    """Dressed branch pair and partials at one field for the current parameters."""
    gamma = theta["g_factor"] * GHZ_PER_TESLA_PER_G
    f_m = theta["f_afmr0"] - gamma * b
    clamped = f_m < 0.0
    f_m = max(0.0, f_m)
    half = 0.5 * (theta["f_cavity"] - f_m)
    radius = math.hypot(half, theta["big_g"])
    mean = 0.5 * (theta["f_cavity"] + f_m)
    aux = {"half": half, "radius": radius, "clamped": clamped, "b": b}
    return mean - radius, mean + radius, aux


def _branch_gradient(theta, aux, upper: bool) -> dict[str, float]:
    """Analytic partials of one dressed branch w.r.t. the model parameters."""
    sign = 1.0 if upper else -1.0
    radius = max(aux["radius"], 1e-300)
    half = aux["half"]
    d_dg = sign * theta["big_g"] / radius  # d branch / d big_g
    d_dfc = 0.5 + sign * half / (2.0 * radius)
    d_dfm = 0.5 - sign * half / (2.0 * radius)
    if aux["clamped"]:
        d_f0 = 0.0
        d_gf = 0.0
    else:
        d_f0 = d_dfm
        d_gf = d_dfm * (-GHZ_PER_TESLA_PER_G * aux["b"])
    return {"big_g": d_dg, "f_afmr0": d_f0, "g_factor": d_gf, "f_cavity": d_dfc}


def _make_objective(b_arr: np.ndarray, p_arr: np.ndarray, baseline: dict, names):
    """Residual and analytic-Jacobian functions for the branch fit.

    Each observed peak is re-assigned to the nearest model branch on every
    evaluation; the Jacobian differentiates the branch currently assigned.
    """

    def unpack(x: np.ndarray) -> dict[str, float]:
        theta = dict(baseline)
        theta.update(zip(names, x))
        return theta

    def residual(x: np.ndarray) -> np.ndarray:
        theta = unpack(x)
        res = np.empty(p_arr.size)
        for k in range(p_arr.size):
            lower, upper, _ = _branch_model(theta, b_arr[k])
            res[k] = p_arr[k] - (
                upper if abs(p_arr[k] - upper) < abs(p_arr[k] - lower) else lower
            )
        return res

    def jacobian(x: np.ndarray) -> np.ndarray:
        theta = unpack(x)
        jac = np.empty((p_arr.size, len(names)))
        for k in range(p_arr.size):
            lower, upper, aux = _branch_model(theta, b_arr[k])
            pick_upper = abs(p_arr[k] - upper) < abs(p_arr[k] - lower)
            grad = _branch_gradient(theta, aux, upper=pick_upper)
            jac[k] = [-grad[name] for name in names]
        return jac

    return residual, jacobian


def _initial_big_g(observations) -> float:
    """Half the smallest two-peak separation, if the data show any pairs."""
    by_field: dict[float, list[float]] = {}
    for b, p in observations:
        by_field.setdefault(b, []).append(p)
    gaps = [abs(ps[1] - ps[0]) for ps in by_field.values() if len(ps) == 2]
    if gaps:
        return 0.5 * min(gaps)
    return 0.5  # GHz, generic starting point when no splitting is resolved


def fit_avoided_crossing(
    peaks: PeakSet,
    spins: SpinSystemParams,
    cavity: CavityParams,
    free,
    window: tuple[float, float] | None = None,
    coupling: CouplingParams | None = None,
    max_iterations: int = optimize.MAX_ITERATIONS,
) -> FitReport:
    """Fit dressed-branch eigenfrequencies to extracted peaks.

    ``free`` selects the fitted parameters among ``big_g``, ``f_afmr0``,
    ``g_factor`` and ``f_cavity``; everything else is held at the values in
    ``spins``/``cavity``/``coupling``.  Each peak is matched to the nearest
    model branch anew on every iteration and the summed squared distance is
    minimized by damped least squares.  The default window upper edge of
    1.1 T keeps the fit away from the spin-flop region.
    """
    free = tuple(dict.fromkeys(free))
    unknown = [name for name in free if name not in PARAMETER_ORDER]
    if unknown:
        raise ValueError(f"unknown fit parameters: {unknown}")
    if not free:
        raise ValueError("free parameter mask is empty; nothing to fit")
    if window is None:
        window = (0.0, 1.1)
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError(f"window must be an increasing interval, got {window!r}")

    observations = [(b, p) for b, p in peaks.observations() if lo <= b <= hi]
    fields_with_peaks = {b for b, _ in observations}
    if len(fields_with_peaks) < 3:
        raise FitError(
            f"no usable peaks: need >= 3 field columns with peaks in the window "
            f"[{lo}, {hi}] T, found {len(fields_with_peaks)}"
        )

    baseline = {
        "big_g": coupling.big_g if coupling is not None else _initial_big_g(observations),
        "f_afmr0": spins.f_afmr0,
        "g_factor": spins.g_factor,
        "f_cavity": cavity.f_cavity,
    }
    names = tuple(name for name in PARAMETER_ORDER if name in free)

    b_arr = np.array([b for b, _ in observations])
    p_arr = np.array([p for _, p in observations])
    residual, jacobian = _make_objective(b_arr, p_arr, baseline, names)
    x0 = np.array([baseline[name] for name in names])
    result = optimize.levenberg_marquardt(
        residual, x0, jac=jacobian, max_iterations=max_iterations
    )
    uncertainties = optimize.covariance_uncertainties(result.jacobian, result.residual)
    fixed = {name: baseline[name] for name in PARAMETER_ORDER if name not in names}
    return FitReport(
        parameter_names=names,
        values=tuple(float(v) for v in result.x),
        uncertainties=tuple(float(u) for u in uncertainties),
        residual_rms=float(np.sqrt(result.cost / result.residual.size)),
        window=(lo, hi),
        iterations=result.iterations,
        converged=result.converged,
        gradient_norm=result.gradient_norm,
        fixed=fixed,
    )


# --- field-domain linewidth -------------------------------------------------


def _cut_arrays(cut) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(cut, VerticalCut):
        return np.asarray(cut.fields, float), np.asarray(cut.powers, float)
    data = np.asarray(list(cut), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] == 0:
        raise ValueError("cut must be a sequence of (field, power) pairs")
    return data[:, 0], data[:, 1]


def field_linewidth(cut) -> float:
    """FWHM (tesla) of a single-peaked transmission-vs-field trace.

    Fits a Lorentzian with a flat baseline.  Raises :class:`FitError` naming
    the failure mode for flat, multi-peaked or under-sampled traces.
    """
    b, p = _cut_arrays(cut)
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(p))):
        raise FitError("cut contains non-finite samples")
    base = float(p.min())
    peak = float(p.max())
    if peak - base <= 1e-12 * max(abs(peak), 1.0):
        raise FitError("no peak: the trace is flat")
    half_level = base + 0.5 * (peak - base)
    above = p > half_level
    runs = np.flatnonzero(np.diff(np.concatenate(([0], above.view(np.int8), [0]))) == 1)
    if runs.size > 1:
        raise FitError(f"multiple peaks: {runs.size} disjoint regions above half maximum")
    if int(above.sum()) < 5:
        raise FitError(
            f"too few points above half maximum ({int(above.sum())} < 5); "
            "refine the field grid"
        )

    above_idx = np.flatnonzero(above)
    width0 = max(b[above_idx[-1]] - b[above_idx[0]], float(np.min(np.diff(b))))
    center0 = float(b[np.argmax(p)])

    # Nondimensionalize so the optimizer sees O(1) parameters regardless of
    # whether the peak is millitesla- or tesla-wide.
    x_scaled = (b - center0) / width0
    y_scaled = (p - base) / (peak - base)

    def residual(x: np.ndarray) -> np.ndarray:
        center, width, amplitude, offset = x
        hw = 0.5 * abs(width)
        model = offset + amplitude * hw**2 / ((x_scaled - center) ** 2 + hw**2)
        return model - y_scaled

    def jacobian(x: np.ndarray) -> np.ndarray:
        center, width, amplitude, offset = x
        hw = 0.5 * abs(width)
        dx = x_scaled - center
        den = dx**2 + hw**2
        return np.column_stack(
            [
                amplitude * hw**2 * 2.0 * dx / den**2,
                amplitude * hw * dx**2 / den**2 * np.sign(width),
                hw**2 / den,
                np.ones_like(dx),
            ]
        )

    result = optimize.levenberg_marquardt(
        residual, np.array([0.0, 1.0, 1.0, 0.0]), jac=jacobian
    )
    if not result.converged:
        raise ConvergenceError(f"linewidth fit did not converge: {result.message}")
    return float(abs(result.x[1]) * width0)


def linewidth_field_to_freq(gamma_b: float, g_factor: float) -> float:
    """Convert a field-domain linewidth (tesla) to GHz: gamma_b * g * 13.996245."""
    if not np.isfinite(gamma_b) or gamma_b < 0:
        raise ValueError(f"gamma_b must be finite and >= 0, got {gamma_b!r}")
    if g_factor <= 0:
        raise ValueError("g_factor must be > 0")
    return gamma_b * g_factor * GHZ_PER_TESLA_PER_G


def magnon_linewidth_estimate(
    gamma_converted: float,
    f_magnon: float,
    cavity: CavityParams,
    coupling: CouplingParams,
    upper_branch: bool = True,
) -> float:
    """Correct a converted field-domain linewidth for cavity admixture (GHz).

    A field cut measures the polariton line gamma_pol = w_m*gamma_m +
    (1-w_m)*kappa_tot on a branch whose slope is w_m times the bare Zeeman
    slope, with w_m the magnon content.  Converting the field width with the
    bare slope therefore yields gamma_m + (1-w_m)/w_m * kappa_tot; this
    subtracts the cavity term to estimate the bare magnon linewidth.
    """
    half = 0.5 * (cavity.f_cavity - f_magnon)
    radius = math.hypot(half, coupling.big_g)
    sign = 1.0 if upper_branch else -1.0
    magnon_weight = 0.5 - sign * half / (2.0 * max(radius, 1e-300))
    if magnon_weight <= 0:
        raise ValueError("branch has no magnon content at this detuning")
    cavity_weight = 1.0 - magnon_weight
    return gamma_converted - cavity_weight / magnon_weight * cavity.total_linewidth


# --- temperature trends -----------------------------------------------------


@dataclass(frozen=True)
class TrendFit:
    """Power-law-in-temperature trend y = A ± B * T^p."""

    offset: float  # A, units of y
    coefficient: float  # B, units of y per K^p
    exponent: float  # p
    sign: str  # "+" or "-"
    residual_rms: float
    exponent_free: bool = False

    def __post_init__(self):
        if self.sign not in ("+", "-"):
            raise ValueError(f"sign must be '+' or '-', got {self.sign!r}")

    def evaluate(self, t_kelvin) -> np.ndarray:
        s = 1.0 if self.sign == "+" else -1.0
        return self.offset + s * self.coefficient * np.asarray(t_kelvin, float) ** self.exponent

    def to_json_dict(self) -> dict:
        return {
            "offset": self.offset,
            "coefficient": self.coefficient,
            "exponent": self.exponent,
            "sign": self.sign,
            "residual_rms": self.residual_rms,
            "exponent_free": self.exponent_free,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def fit_t4_trend(
    points,
    sign: str = "+",
    exponent_free: bool = False,
    temperature_unit: str = "K",
) -> TrendFit:
    """Fit y = A ± B * T^p, with p = 4 fixed unless ``exponent_free``.

    ``points`` is a sequence of (temperature, value) pairs; temperatures are
    converted to kelvin according to ``temperature_unit`` ("K" or "mK") so
    the returned coefficient is always per K^p.  Two points suffice for the
    fixed-exponent fit; the free-exponent fit needs at least three.
    """
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    if temperature_unit not in ("K", "mK"):
        raise ValueError(f"temperature_unit must be 'K' or 'mK', got {temperature_unit!r}")
    data = np.asarray(list(points), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("points must be (temperature, value) pairs")
    t = data[:, 0] * (1e-3 if temperature_unit == "mK" else 1.0)
    y = data[:, 1]
    min_points = 3 if exponent_free else 2
    if t.size < min_points:
        raise FitError(f"need at least {min_points} points, got {t.size}")
    if np.any(t <= 0) or not np.all(np.isfinite(t)) or not np.all(np.isfinite(y)):
        raise ValueError("temperatures must be finite and > 0, values finite")
    if np.ptp(t) == 0:
        raise FitError("singular design: all temperatures are equal")
    s = 1.0 if sign == "+" else -1.0

    design = np.column_stack([np.ones_like(t), s * t**4])
    (offset, coefficient), *_ = np.linalg.lstsq(design, y, rcond=None)
    exponent = 4.0

    if exponent_free:

        def residual(x: np.ndarray) -> np.ndarray:
            a, bb, p = x
            return a + s * bb * t**p - y

        def jacobian(x: np.ndarray) -> np.ndarray:
            _, bb, p = x
            tp = t**p
            return np.column_stack([np.ones_like(t), s * tp, s * bb * tp * np.log(t)])

        result = optimize.levenberg_marquardt(
            residual, np.array([offset, coefficient, 4.0]), jac=jacobian
        )
        offset, coefficient, exponent = result.x
        rms = float(np.sqrt(result.cost / t.size))
    else:
        res = design @ np.array([offset, coefficient]) - y
        rms = float(np.sqrt(res @ res / t.size))

    fit = TrendFit(
        offset=float(offset),
        coefficient=float(coefficient),
        exponent=float(exponent),
        sign=sign,
        residual_rms=rms,
        exponent_free=exponent_free,
    )
    if fit.offset <= 0:
        raise FitError(f"unphysical trend: fitted offset {fit.offset} is not positive")
    if sign == "-" and np.any(fit.evaluate(t) <= 0):
        raise FitError("unphysical trend: fitted curve crosses zero inside the data range")
    return fit
