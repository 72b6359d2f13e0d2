"""Command-line surface: dispersion | sweep | fit | linewidth | trend | phase-map.

Every command is deterministic for a fixed config and seed.  Exit codes:
0 success, 2 input or validation failure, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, core, phase, spectra
from .analysis import ConvergenceError, FitError
from .config import ConfigError, GridSpec, RunConfig, load_config

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NO_CONVERGENCE = 3


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration")
    parser.add_argument("--out", metavar="PATH", help="output path (default: stdout)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument(
        "--format", choices=("csv", "json"), default="csv",
        help="tabular output format (commands with JSON reports ignore this)",
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args) -> RunConfig:
    return load_config(args.config)


def _map_params(tmap: spectra.TransmissionMap, cfg: RunConfig):
    """Model parameters for an analysis run: map metadata first, config second."""
    meta = tmap.metadata or {}
    spins = core.SpinSystemParams(**meta["spins"]) if "spins" in meta else cfg.spins
    cavity = core.CavityParams(**meta["cavity"]) if "cavity" in meta else cfg.cavity
    coupling = (
        core.CouplingParams(**meta["coupling"]) if "coupling" in meta else cfg.coupling
    )
    loss = spectra.LossParams(**meta["loss"]) if "loss" in meta else cfg.loss
    return spins, cavity, coupling, loss


def cmd_dispersion(args) -> int:
    cfg = _load(args)
    grid = cfg.field_grid
    if args.b_min is not None or args.b_max is not None or args.b_step is not None:
        grid = GridSpec(
            start=grid.start if args.b_min is None else args.b_min,
            stop=grid.stop if args.b_max is None else args.b_max,
            step=grid.step if args.b_step is None else args.b_step,
        )
    flop = core.spin_flop_field(cfg.spins)
    rows = []
    for b in grid.samples():
        branches = core.magnon_branches(cfg.spins, float(b))
        rows.append((float(b), branches.lower, branches.upper, int(branches.clamped)))
    if args.format == "json":
        payload = {
            "spin_flop_field_t": flop,
            "field_t": [r[0] for r in rows],
            "lower_ghz": [r[1] for r in rows],
            "upper_ghz": [r[2] for r in rows],
            "beyond_spin_flop": [r[3] for r in rows],
        }
        _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    else:
        lines = [f"# spin_flop_field_T={flop!r}", "field_T,lower_GHz,upper_GHz,beyond_spin_flop"]
        lines += [f"{b!r},{lo!r},{up!r},{flag}" for b, lo, up, flag in rows]
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    field_axis = cfg.field_grid.samples()
    freq_axis = cfg.freq_grid.samples()
    tmap = spectra.synthesize_map(
        field_axis, freq_axis, cfg.spins, cfg.cavity, cfg.coupling, cfg.loss
    )
    seed = cfg.seed if args.seed is None else args.seed
    if cfg.noise_sigma_db > 0:
        tmap = spectra.add_noise(tmap, cfg.noise_sigma_db, seed)
    metadata = dict(tmap.metadata or {})
    metadata["config"] = cfg.to_dict()
    tmap = spectra.TransmissionMap(tmap.field_axis, tmap.freq_axis, tmap.values, metadata)
    out = args.out or "transmission_map.csv"
    spectra.save_map(tmap, out, db=args.db)
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _load(args)
    tmap = spectra.load_map(args.map)
    spins, cavity, coupling, loss = _map_params(tmap, cfg)
    free = tuple(name.strip() for name in args.free.split(",") if name.strip())
    window = _parse_window(args.window)
    peaks = analysis.extract_peaks(tmap, min_prominence=args.min_prominence)
    report = analysis.fit_avoided_crossing(
        peaks,
        spins,
        cavity,
        free=free,
        window=window,
        coupling=None if "big_g" in free else coupling,
    )
    payload = report.to_json_dict()
    fitted_g = (
        report.value_of("big_g") if "big_g" in report.parameter_names else coupling.big_g
    )
    fitted_fc = (
        report.value_of("f_cavity")
        if "f_cavity" in report.parameter_names
        else cavity.f_cavity
    )
    regime = core.coupling_regime(
        core.CouplingParams(big_g=abs(fitted_g)),
        core.CavityParams(
            f_cavity=fitted_fc,
            quality_factor=cavity.quality_factor,
            external_coupling_fraction=cavity.external_coupling_fraction,
        ),
        loss.magnon_linewidth,
    )
    payload["regime"] = {"label": regime.label, "ratio": regime.ratio}
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def cmd_linewidth(args) -> int:
    cfg = _load(args)
    tmap = spectra.load_map(args.map)
    spins, cavity, coupling, loss = _map_params(tmap, cfg)
    cut = spectra.vertical_cut(tmap, args.freq)
    gamma_t = analysis.field_linewidth(cut)
    gamma_f = analysis.linewidth_field_to_freq(gamma_t, spins.g_factor)
    payload = {
        "frequency_ghz": cut.frequency,
        "gamma_tesla": gamma_t,
        "gamma_ghz": gamma_f,
        "conversion_ghz_per_tesla": analysis.linewidth_field_to_freq(1.0, spins.g_factor),
        "g_factor": spins.g_factor,
    }
    if tmap.metadata and "spins" in tmap.metadata:
        # With the synthesis record available, also report the polariton
        # linewidth corrected for the cavity admixture of the branch.
        peak_field = float(cut.fields[int(cut.powers.argmax())])
        f_magnon = core.magnon_branches(spins, peak_field).lower
        try:
            corrected = analysis.magnon_linewidth_estimate(
                gamma_f,
                f_magnon,
                cavity,
                coupling,
                upper_branch=cut.frequency >= cavity.f_cavity,
            )
        except ValueError:
            corrected = None
        payload["magnon_corrected_ghz"] = corrected
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_trend(args) -> int:
    points = _read_points(Path(args.points))
    fit = analysis.fit_t4_trend(
        points,
        sign=args.sign,
        exponent_free=args.free_exponent,
        temperature_unit=args.t_unit,
    )
    _emit(fit.to_json(), args.out)
    return EXIT_OK


def cmd_phase_map(args) -> int:
    cfg = _load(args)
    b_grid = GridSpec(start=args.b_min, stop=args.b_max, step=args.b_step)
    t_grid = GridSpec(start=args.t_min, stop=args.t_max, step=args.t_step)
    fields = b_grid.samples()
    temps = t_grid.samples()
    labels = phase.phase_grid(fields, temps, cfg.boundaries)
    if args.format == "json":
        payload = {
            "note": "boundary shapes are approximate parametrized curves",
            "field_t": [float(b) for b in fields],
            "temperature_k": [float(t) for t in temps],
            "phase": labels,
        }
        _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    else:
        lines = [
            "# boundary shapes are approximate parametrized curves",
            "field_T,temperature_K,phase",
        ]
        for i, b in enumerate(fields):
            for j, t in enumerate(temps):
                lines.append(f"{float(b)!r},{float(t)!r},{labels[i][j]}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _parse_window(text: str | None) -> tuple[float, float] | None:
    if text is None:
        return None
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"window must be LO:HI in tesla, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"window must be numeric LO:HI, got {text!r}") from None


def _read_points(path: Path) -> list[tuple[float, float]]:
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"points file not found: {path}") from None
    points = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected 'temperature,value'")
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError:
            if lineno == 1:
                continue  # header row
            raise ConfigError(f"{path}:{lineno}: could not parse {line!r}") from None
    return points


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afmcavity",
        description="Cavity-antiferromagnet hybrid system simulation and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dispersion", help="resonance branches vs field (CSV)")
    _common_flags(p)
    p.add_argument("--b-min", type=float, help="field start (T)")
    p.add_argument("--b-max", type=float, help="field stop (T)")
    p.add_argument("--b-step", type=float, help="field step (T)")
    p.set_defaults(run=cmd_dispersion)

    p = sub.add_parser("sweep", help="synthesize a transmission map (CSV + JSON sidecar)")
    _common_flags(p)
    p.add_argument("--db", action="store_true", help="write values in dB (export only)")
    p.set_defaults(run=cmd_sweep)

    p = sub.add_parser("fit", help="fit dressed branches to a transmission map")
    _common_flags(p)
    p.add_argument("map", help="transmission map CSV")
    p.add_argument(
        "--free", default="big_g,f_afmr0",
        help="comma list among big_g,f_afmr0,g_factor,f_cavity",
    )
    p.add_argument("--window", help="fit window LO:HI in tesla (default 0:1.1)")
    p.add_argument("--min-prominence", type=float, default=0.1)
    p.set_defaults(run=cmd_fit)

    p = sub.add_parser("linewidth", help="field-domain linewidth at a fixed frequency")
    _common_flags(p)
    p.add_argument("map", help="transmission map CSV")
    p.add_argument("--freq", type=float, required=True, help="cut frequency (GHz)")
    p.set_defaults(run=cmd_linewidth)

    p = sub.add_parser("trend", help="fit y = A ± B·T^4 to (temperature, value) points")
    _common_flags(p)
    p.add_argument("points", help="CSV of temperature,value rows")
    p.add_argument("--sign", choices=("+", "-"), default="+")
    p.add_argument("--free-exponent", action="store_true")
    p.add_argument("--t-unit", choices=("K", "mK"), default="K")
    p.set_defaults(run=cmd_trend)

    p = sub.add_parser("phase-map", help="rasterized phase diagram (CSV)")
    _common_flags(p)
    p.add_argument("--b-min", type=float, default=0.0)
    p.add_argument("--b-max", type=float, default=3.0)
    p.add_argument("--b-step", type=float, default=0.05)
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=3.0)
    p.add_argument("--t-step", type=float, default=0.05)
    p.set_defaults(run=cmd_phase_map)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (ConfigError, FitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
