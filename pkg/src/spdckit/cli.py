"""Command-line interface.

Exit codes: 0 success (warnings included), 2 usage or file-format errors
(including out-of-range inputs), 3 physically unreachable requests.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, io
from .crystal_optics import (
    PHI0_DEG,
    THETA0_DEG,
    OrientationAngles,
    WavelengthRangeError,
    AngleRangeError,
    extraordinary_index_at_angle,
    load_crystal,
    ordinary_index,
    principal_extraordinary_index,
)
from .pair_statistics import (
    DetectionConfig,
    ResourceLimitError,
    TimestampStream,
    analyze_streams,
    power_scan,
    report_lines,
    simulate_timestamp_streams,
    summary_lines,
)
from .pair_statistics.rates import (
    DEFAULT_DURATION_S,
    DEFAULT_ETA,
    DEFAULT_JITTER_PS,
    DEFAULT_TAU_PS,
    DEFAULT_WINDOW_PS,
    PAIR_RATE_PER_MW,
)
from .pair_statistics.scan import SCAN_WINDOW_PS
from .phase_matching import (
    NoPhaseMatchError,
    PumpConfig,
    SweptAxis,
    UnreachableTargetError,
    external_tilt,
    idler_wavelength,
    solve_phase_match_angle,
    solve_signal_wavelength,
    stage_offset_for_theta_eff,
    sweep_tuning_curve,
    tuning_rate,
)

log = logging.getLogger("spdckit")

EXIT_USAGE = 2
EXIT_DOMAIN = 3
DEFAULT_OUTPUT = "spdckit_out"


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


# -- shared helpers ----------------------------------------------------------


def _ext(args) -> str:
    return "tsv" if args.format == "tsv" else "csv"


def _delim(args) -> str:
    return "\t" if args.format == "tsv" else ","


def _outdir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _crystal(args):
    try:
        return load_crystal(args.crystal)
    except (FileNotFoundError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot load crystal {args.crystal!r}: {exc}") from exc


def _params(args) -> dict:
    skip = {"func", "argv"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _manifest(args, crystal, outputs, seed=None) -> Path:
    path = _outdir(args) / f"{args.command}.manifest.json"
    sha = crystal.source_sha256 if crystal is not None else None
    return io.write_manifest(path, args.command, _params(args), args.argv, sha, seed, outputs)


def _detection_config(args, power: float | None = None) -> DetectionConfig:
    try:
        return DetectionConfig(
            pair_rate_per_mw=args.pair_rate,
            pump_power=args.power if power is None else power,
            eta_signal=args.eta_signal,
            eta_idler=args.eta_idler,
            dark_rate_signal=args.dark_signal,
            dark_rate_idler=args.dark_idler,
            jitter_sigma_signal=args.jitter_signal,
            jitter_sigma_idler=args.jitter_idler,
            duration=args.duration,
            rng_seed=args.seed,
            dead_time=args.dead_time,
            idler_delay=args.idler_delay,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# -- commands --------------------------------------------------------------


def cmd_index(args) -> int:
    crystal = _crystal(args)
    lam = args.wavelength
    try:
        no = float(ordinary_index(crystal, lam))
        ne = float(principal_extraordinary_index(crystal, lam))
        lines = [
            f"crystal        {crystal.name}",
            f"lambda_nm      {lam:g}",
            f"n_o            {no:.6f}",
            f"n_e_principal  {ne:.6f}",
        ]
        if args.theta_eff is not None:
            n = float(extraordinary_index_at_angle(crystal, args.theta_eff, lam))
            tag = ""
            if args.theta_eff == 0:
                tag = "  [ordinary limit]"
            elif args.theta_eff == 90:
                tag = "  [principal extraordinary limit]"
            lines.append(f"n_e({args.theta_eff:g} deg)   {n:.6f}{tag}")
    except (WavelengthRangeError, AngleRangeError) as exc:
        raise UsageError(f"domain error: {exc}") from exc
    print("\n".join(lines))
    _manifest(args, crystal, [])
    return 0


def _plot_curve(curve, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    a = curve.arrays()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(a["stage_angle"], a["lambda_signal"], "-", label="signal")
    ax.plot(a["stage_angle"], a["lambda_idler"], "-", label="idler")
    ax.set_xlabel(f"{curve.swept_parameter.value} stage offset (deg)")
    ax.set_ylabel("wavelength (nm)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_tune(args) -> int:
    crystal = _crystal(args)
    if args.steps < 1 or (args.steps < 2 and args.start != args.stop):
        raise UsageError("--steps must be >= 2 (or 1 with --from equal to --to)")
    pump = PumpConfig(lambda_pump=args.pump_nm)
    base = OrientationAngles.from_offsets(args.theta_offset, args.phi_offset)
    try:
        curve = sweep_tuning_curve(
            crystal, pump, base, SweptAxis(args.sweep), (args.start, args.stop), args.steps,
            refraction_correction=args.refraction, workers=args.workers,
        )
    except (WavelengthRangeError, AngleRangeError) as exc:
        raise UsageError(f"domain error: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _outdir(args)
    files = [io.write_tuning_csv(curve, out / f"tuning.{_ext(args)}", _delim(args))]
    matched = curve.matched_points
    if not matched:
        warnings.warn("no orientation in the sweep phase-matches; the curve is all gaps")
    else:
        sig = [p.lambda_signal for p in matched]
        idl = [p.lambda_idler for p in matched]
        print(f"phase-matched points  {len(matched)} of {len(curve.points)}")
        print(f"signal range_nm       {min(sig):.2f} - {max(sig):.2f}")
        print(f"idler range_nm        {min(idl):.2f} - {max(idl):.2f}")
        if len(matched) >= 2:
            rs = tuning_rate(curve, "signal")
            ri = tuning_rate(curve, "idler")
            print(f"stage span_deg        {rs.angle_span:.4f}")
            print(f"signal rate_deg_per_nm {rs.rate:.5f}")
            print(f"idler rate_deg_per_nm  {ri.rate:.5f}")
    if args.plot:
        try:
            svg = out / "tuning.svg"
            _plot_curve(curve, svg)
            files.append(svg)
        except ImportError:
            warnings.warn("matplotlib is not installed; skipping the plot")
    _manifest(args, crystal, files)
    return 0


SOLVE_PHIS = (0.0, 2.5, 5.0, 7.5, 10.7)


def cmd_solve(args) -> int:
    crystal = _crystal(args)
    lp = args.pump_nm
    try:
        crystal.check_wavelength(lp)
    except WavelengthRangeError as exc:
        raise UsageError(f"domain error: {exc}") from exc
    if args.idler is not None:
        if args.idler <= lp:
            raise DomainError(f"idler {args.idler:g} nm must be longer than the pump {lp:g} nm")
        target = idler_wavelength(lp, args.idler)
    else:
        target = args.signal
    try:
        th = solve_phase_match_angle(crystal, target, lp)
        sol = solve_signal_wavelength(crystal, th, lp)
    except (UnreachableTargetError, NoPhaseMatchError, WavelengthRangeError) as exc:
        raise DomainError(str(exc)) from exc
    lines = [
        f"theta_eff_deg     {th:.4f}",
        f"signal_nm         {sol.lambda_signal:.2f}",
        f"idler_nm          {sol.lambda_idler:.2f}",
        f"delta_k_rad_mm    {sol.delta_k:.3e}",
        f"degenerate        {'yes' if sol.degenerate else 'no'}",
        "stage solutions (theta, phi) with arccos(cos theta cos phi) = theta_eff:",
        "  phi_deg   theta_deg   theta_offset_deg",
    ]
    for phi in SOLVE_PHIS:
        base = OrientationAngles.from_offsets(0.0, phi - PHI0_DEG)
        try:
            d_theta = stage_offset_for_theta_eff(th, base, SweptAxis.THETA)
        except ValueError:
            continue
        lines.append(f"  {phi:7.2f}   {THETA0_DEG + d_theta:9.4f}   {d_theta:+.4f}")
    internal = stage_offset_for_theta_eff(th, OrientationAngles(), SweptAxis.THETA)
    ext = external_tilt(crystal, internal, OrientationAngles(), SweptAxis.THETA, lp)
    lines.append(f"refraction-corrected external theta offset at phi = 0: {ext:+.4f} deg")
    print("\n".join(lines))
    _manifest(args, crystal, [])
    return 0


def _write_streams(args, sig: TimestampStream, idl: TimestampStream) -> list[Path]:
    out = _outdir(args)
    d = _delim(args)
    return [
        io.write_timestamps(0, sig.times, out / f"signal.{_ext(args)}", d),
        io.write_timestamps(1, idl.times, out / f"idler.{_ext(args)}", d),
    ]


def cmd_simulate(args) -> int:
    config = _detection_config(args)
    try:
        sig, idl = simulate_timestamp_streams(config, workers=args.workers)
    except ResourceLimitError as exc:
        raise UsageError(str(exc)) from exc
    files = _write_streams(args, sig, idl)
    print(f"signal events  {len(sig)}")
    print(f"idler events   {len(idl)}")
    for f in files:
        print(f"wrote          {f}")
    _manifest(args, None, files, seed=config.rng_seed)
    return 0


def _duration_for(paths: list[Path], args, streams: dict[int, np.ndarray]) -> float:
    if args.duration is not None:
        return float(args.duration)
    for p in paths:
        m = p.parent / "simulate.manifest.json"
        if m.exists():
            try:
                return float(io.read_manifest(m)["parameters"]["duration"])
            except (KeyError, ValueError, TypeError):
                pass
    tmax = max((int(t[-1]) for t in streams.values() if t.size), default=0)
    if tmax == 0:
        return 1.0
    warnings.warn("integration time not given; using the last timestamp")
    return tmax / 1e12


def cmd_analyze(args) -> int:
    paths = [Path(p) for p in args.files]
    streams = {0: [], 1: []}
    for p in paths:
        if not p.exists():
            raise UsageError(f"no such file: {p}")
        try:
            data = io.read_timestamps(p)
        except io.FileFormatError as exc:
            raise UsageError(str(exc)) from exc
        for ch, t in data.items():
            if t.size:
                streams[ch].append(t)
    merged = {ch: np.sort(np.concatenate(v)) if v else np.empty(0, np.int64) for ch, v in streams.items()}
    T = _duration_for(paths, args, merged)
    if args.window % args.tau:
        raise UsageError("--window must be a multiple of --tau")
    sig = TimestampStream(0, merged[0], T)
    idl = TimestampStream(1, merged[1], T)
    res = analyze_streams(sig, idl, args.tau, args.window, args.dark_signal, args.dark_idler)
    out = _outdir(args)
    hist_path = io.write_histogram_csv(res.histogram, out / f"histogram.{_ext(args)}", _delim(args))
    report = report_lines(res)
    rep_path = out / "analysis.txt"
    rep_path.write_text("\n".join(report) + "\n")
    print("\n".join(report))
    _manifest(args, None, [hist_path, rep_path])
    return 0


def _parse_powers(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--powers must be a comma-separated list of numbers: {exc}") from exc
    return vals


def cmd_power_scan(args) -> int:
    powers = _parse_powers(args.powers)
    if len(set(powers)) < 3:
        raise UsageError("--powers needs at least 3 distinct values")
    powers = sorted(set(powers))
    config = _detection_config(args, power=powers[0])
    if args.window % args.tau:
        raise UsageError("--window must be a multiple of --tau")
    result = power_scan(config, powers, args.tau, args.window, workers=args.workers)
    out = _outdir(args)
    csv_path = io.write_power_scan_csv(result, out / f"power_scan.{_ext(args)}", _delim(args))
    summary = summary_lines(result)
    sum_path = out / "power_scan_fits.txt"
    sum_path.write_text("\n".join(summary) + "\n")
    print("\n".join(summary))
    _manifest(args, None, [csv_path, sum_path], seed=config.rng_seed)
    if len(result.succeeded) < 3:
        raise DomainError("fewer than 3 power points succeeded")
    return 0


def cmd_rerun(args) -> int:
    try:
        manifest = io.read_manifest(args.manifest)
        argv = list(manifest["argv"])
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from exc
    if args.output is not None:
        argv += ["--output", args.output]
    return main(argv)


# -- parser ------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--crystal", default="bbo", help="shipped crystal name or JSON file (default: bbo)")
    g.add_argument("--pump-nm", type=float, default=266.0, help="pump wavelength in nm (default: 266)")
    g.add_argument("--output", default=DEFAULT_OUTPUT, help=f"output directory (default: {DEFAULT_OUTPUT})")
    g.add_argument("--seed", type=int, default=0, help="random seed for simulations")
    g.add_argument("--format", choices=("csv", "tsv"), default="csv")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def _detector_flags(p: argparse.ArgumentParser, with_power: bool = True) -> None:
    p.add_argument("--pair-rate", type=float, default=PAIR_RATE_PER_MW, help="generated pairs per s per mW")
    if with_power:
        p.add_argument("--power", type=float, default=1.0, help="pump power in mW")
    p.add_argument("--eta-signal", type=float, default=DEFAULT_ETA)
    p.add_argument("--eta-idler", type=float, default=DEFAULT_ETA)
    p.add_argument("--dark-signal", type=float, default=0.0, help="dark counts per s")
    p.add_argument("--dark-idler", type=float, default=0.0, help="dark counts per s")
    p.add_argument("--jitter-signal", type=float, default=DEFAULT_JITTER_PS, help="Gaussian sigma in ps")
    p.add_argument("--jitter-idler", type=float, default=DEFAULT_JITTER_PS, help="Gaussian sigma in ps")
    p.add_argument("--duration", type=float, default=DEFAULT_DURATION_S, help="integration time in s")
    p.add_argument("--dead-time", type=float, default=0.0, help="non-paralyzable dead time in ps")
    p.add_argument("--idler-delay", type=float, default=0.0, help="fixed idler delay in ps")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="spdckit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"spdckit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", parents=[common], help="print refractive indices")
    p.add_argument("--lambda", dest="wavelength", type=float, required=True, help="wavelength in nm")
    p.add_argument("--theta-eff", type=float, default=None, help="effective angle in deg")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("tune", parents=[common], help="angle-tuning curve")
    p.add_argument("--sweep", choices=("theta", "phi"), default="theta")
    p.add_argument("--from", dest="start", type=float, default=-10.0, help="first stage offset, deg")
    p.add_argument("--to", dest="stop", type=float, default=2.0, help="last stage offset, deg")
    p.add_argument("--steps", type=int, default=121)
    p.add_argument("--theta-offset", type=float, default=0.0, help="fixed theta offset from theta0, deg")
    p.add_argument("--phi-offset", type=float, default=0.0, help="fixed phi offset from phi0, deg")
    p.add_argument("--refraction", action="store_true", help="treat stage angles as external (Snell)")
    p.add_argument("--plot", action="store_true", help="also write tuning.svg")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("solve", parents=[common], help="phase-matching angle for a target wavelength")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--signal", type=float, help="target signal wavelength, nm")
    g.add_argument("--idler", type=float, help="target idler wavelength, nm")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", parents=[common], help="simulate timestamp streams")
    _detector_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", parents=[common], help="histogram and analyze timestamp files")
    p.add_argument("files", nargs="+", help="timestamp files (channel,time_ps)")
    p.add_argument("--tau", type=int, default=DEFAULT_TAU_PS, help="bin width in ps")
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW_PS, help="half window in ps")
    p.add_argument("--duration", type=float, default=None, help="integration time in s")
    p.add_argument("--dark-signal", type=float, default=0.0)
    p.add_argument("--dark-idler", type=float, default=0.0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("power-scan", parents=[common], help="simulate and fit a pump-power scan")
    p.add_argument("--powers", required=True, help="comma-separated pump powers in mW")
    _detector_flags(p, with_power=False)
    p.add_argument("--tau", type=int, default=DEFAULT_TAU_PS)
    p.add_argument("--window", type=int, default=SCAN_WINDOW_PS)
    p.set_defaults(func=cmd_power_scan)

    p = sub.add_parser("rerun", help="repeat the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--output", default=None, help="write into another directory")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        warnings.showwarning = _show_warning
        try:
            return args.func(args)
        except UsageError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except DomainError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DOMAIN


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    raise SystemExit(main())
