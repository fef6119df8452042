"""Command-line front end.

Verbs: rotate-sweep, energy-sweep, calibrate, analyze, verify-oracle.
Exit codes: 0 success, 1 usage/config error, 2 domain/physics error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import analysis, experiment, fock, gaussian, stokes
from .errors import ConfigError, KerrpolError
from .experiment import BenchConfig

ORACLE_TOLERANCE = 0.05
ROTATE_COLUMNS = ("phi_deg", "theta_deg", "variance_linear", "variance_db", "raw_dbm", "corrected_db")
ENERGY_COLUMNS = ("energy_pj", "squeezing_db", "antisqueezing_db", "theta_sq_deg")


def parse_config(path) -> BenchConfig:
    """Read a flat ``key = value`` config file; ``#`` starts a comment."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, str(path))


def parse_config_text(text: str, source: str = "<config>") -> BenchConfig:
    known = {f.name for f in fields(BenchConfig)}
    values: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: {key} is not a number: {value!r}") from None
    try:
        return BenchConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def format_config(cfg: BenchConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is not None:
            lines.append(f"{f.name} = {float(v)!r}")
    return "\n".join(lines) + "\n"


@dataclass
class RunManifest:
    command: str
    config_path: str | None
    output_path: str | None
    seed: int | None = None
    timestamp: str | None = None

    def header_lines(self) -> list[str]:
        lines = [f"# command: {self.command}",
                 f"# config_path: {self.config_path or 'none'}",
                 f"# output_path: {self.output_path or 'stdout'}"]
        if self.seed is not None:
            lines.append(f"# seed: {self.seed}")
        if self.timestamp is not None:
            lines.append(f"# timestamp: {self.timestamp}")
        return lines


def _num(x: float) -> str:
    return f"{float(x):.9g}"


def _config_comments(cfg: BenchConfig) -> list[str]:
    return [f"# config: {line}" for line in format_config(cfg).splitlines()]


def _manifest(args, command: str) -> RunManifest:
    stamp = None
    if not args.no_timestamp:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return RunManifest(command, args.config, args.out, None, stamp)


def _emit(args, text: str) -> None:
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {args.out}: {exc}") from None
    else:
        sys.stdout.write(text)


def _load_config(args) -> BenchConfig:
    return parse_config(args.config) if args.config else BenchConfig()


def _metadata_comments(cfg: BenchConfig) -> list[str]:
    return [
        f"# analysis_frequency_mhz: {experiment.ANALYSIS_FREQUENCY_MHZ}",
        f"# rbw_khz: {experiment.RESOLUTION_BANDWIDTH_KHZ}",
        f"# vbw_hz: {experiment.VIDEO_BANDWIDTH_HZ}",
        f"# soliton_energy_pj: {cfg.soliton_energy_pj!r}",
        f"# efficiency: {cfg.efficiency!r}",
    ]


def cmd_rotate_sweep(args) -> int:
    cfg = _load_config(args)
    if args.energy is not None:
        cfg = cfg.with_energy(args.energy)
    grid = experiment.waveplate_grid(args.phi_start, args.phi_end, args.phi_step)
    trace = experiment.rotate_sweep(cfg, grid)
    lines = _manifest(args, "rotate-sweep").header_lines()
    lines += _config_comments(cfg) + _metadata_comments(cfg)
    lines.append(",".join(ROTATE_COLUMNS))
    for p in trace.points:
        lines.append(",".join(_num(x) for x in (
            p.abscissa, 4.0 * p.abscissa, p.variance_linear, p.variance_db, p.raw_dbm, p.corrected_db)))
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_energy_sweep(args) -> int:
    cfg = _load_config(args)
    energies = experiment.waveplate_grid(args.e_start, args.e_end, args.e_step)
    points = experiment.energy_sweep(cfg, energies)
    lines = _manifest(args, "energy-sweep").header_lines()
    lines += _config_comments(cfg) + _metadata_comments(cfg)
    lines.append(",".join(ENERGY_COLUMNS))
    for p in points:
        lines.append(",".join(_num(x) for x in p))
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _load_config(args)
    energy = args.at_energy if args.at_energy is not None else cfg.energy()
    kappa = experiment.calibrate_kerr(cfg, args.target_db, energy)
    calibrated = BenchConfig(**{**cfg.as_dict(), "kerr_coefficient": kappa})
    lines = _manifest(args, "calibrate").header_lines()
    lines += [f"# target_db: {args.target_db!r}",
              f"# at_energy_pj: {energy!r}",
              f"# gamma_at_energy: {kappa * energy!r}"]
    _emit(args, "\n".join(lines) + "\n" + format_config(calibrated))
    return 0


def cmd_analyze(args) -> int:
    notes = []
    if args.losses is not None:
        losses = [float(x) for x in args.losses.split(",") if x.strip()]
        eta = analysis.total_efficiency(losses)
        notes.append(f"eta from component losses {','.join(repr(x) for x in losses)}")
    elif args.eta is not None:
        eta = args.eta
    else:
        eta = analysis.PAPER_TOTAL_ETA
        notes.append(f"eta defaulted to quoted total {eta!r}")

    electronic = args.electronic_dbm
    if args.measured_db is not None:
        measured_db = args.measured_db
    elif args.raw_dbm is not None and args.shot_dbm is not None:
        floor = -math.inf if electronic is None else electronic
        measured_db = (analysis.electronic_noise_correct(args.raw_dbm, floor)
                       - analysis.electronic_noise_correct(args.shot_dbm, floor))
        notes.append(f"measured_db from raw {args.raw_dbm!r} dBm against shot {args.shot_dbm!r} dBm")
    else:
        raise ConfigError("give --measured-db, or --raw-dbm together with --shot-dbm")

    report = analysis.correction_report(measured_db, eta, electronic, notes)
    alt_eta = analysis.total_efficiency(analysis.PAPER_COMPONENT_LOSSES)
    for label, other in (("quoted total", analysis.PAPER_TOTAL_ETA), ("component product", alt_eta)):
        if abs(other - eta) > 1e-12:
            try:
                alt = analysis.linear_to_db(analysis.loss_correct(analysis.db_to_linear(measured_db), other))
                report.notes.append(f"with {label} eta {other:.6f}: inferred_source_db {alt:.6f}")
            except KerrpolError:
                report.notes.append(f"with {label} eta {other:.6f}: below loss floor")
    header = _manifest(args, "analyze").header_lines()
    _emit(args, "\n".join(header) + "\n" + report.to_text())
    return 0


def oracle_deviation(alpha2: float, gamma: float, n_max: int, n_theta: int = 16):
    """Max relative gap between exact and linearized Var(S_theta)."""
    exact_state = fock.circular_kerr_state(alpha2, gamma, n_max)
    linear_state = stokes.circular_state(alpha2, experiment.mode_block(gamma))
    thetas = np.arange(n_theta) * math.pi / n_theta
    rows = []
    for t in thetas:
        v_exact = fock.stokes_variance_exact(exact_state, t)
        v_lin = stokes.stokes_theta_variance(linear_state, t)
        rows.append((t, v_exact, v_lin, abs(v_exact - v_lin) / v_lin))
    return max(r[3] for r in rows), rows


def cmd_verify_oracle(args) -> int:
    worst, rows = oracle_deviation(args.alpha2, args.gamma, args.nmax)
    ok = worst <= ORACLE_TOLERANCE
    lines = _manifest(args, "verify-oracle").header_lines()
    lines += [f"# alpha2: {args.alpha2!r}", f"# gamma: {args.gamma!r}", f"# nmax: {args.nmax}",
              "theta_deg,var_exact,var_linearized,rel_deviation"]
    lines += [",".join(_num(x) for x in (math.degrees(t), a, b, d)) for t, a, b, d in rows]
    lines += [f"# max_rel_deviation: {worst:.6e}",
              f"# tolerance: {ORACLE_TOLERANCE}",
              f"# result: {'pass' if ok else 'fail'}"]
    _emit(args, "\n".join(lines) + "\n")
    return 0 if ok else 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="bench config file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file (default stdout)")
    common.add_argument("--no-timestamp", action="store_true", default=argparse.SUPPRESS,
                        help="omit the timestamp from the manifest header")

    parser = _Parser(prog="kerrpol", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--no-timestamp", action="store_true", default=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rotate-sweep", parents=[common], help="noise vs waveplate angle")
    p.add_argument("--phi-start", type=float, default=0.0)
    p.add_argument("--phi-end", type=float, default=90.0)
    p.add_argument("--phi-step", type=float, default=1.0)
    p.add_argument("--energy", type=float, default=None, help="pulse energy in pJ")
    p.set_defaults(func=cmd_rotate_sweep)

    p = sub.add_parser("energy-sweep", parents=[common], help="squeezing vs pulse energy")
    p.add_argument("--e-start", type=float, default=10.0)
    p.add_argument("--e-end", type=float, default=200.0)
    p.add_argument("--e-step", type=float, default=10.0)
    p.set_defaults(func=cmd_energy_sweep)

    p = sub.add_parser("calibrate", parents=[common], help="fit the Kerr coefficient")
    p.add_argument("--target-db", type=float, required=True)
    p.add_argument("--at-energy", type=float, default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("analyze", parents=[common], help="loss and noise-floor corrections")
    p.add_argument("--measured-db", type=float, default=None)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--eta", type=float, default=None)
    g.add_argument("--losses", default=None, help="comma-separated loss fractions")
    p.add_argument("--electronic-dbm", type=float, default=None)
    p.add_argument("--raw-dbm", type=float, default=None)
    p.add_argument("--shot-dbm", type=float, default=None,
                   help="raw shot-noise level in dBm, used with --raw-dbm")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify-oracle", parents=[common], help="exact Fock vs linearized check")
    p.add_argument("--alpha2", type=float, default=4.0)
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--nmax", type=int, default=30)
    p.set_defaults(func=cmd_verify_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except KerrpolError as exc:
        print(f"kerrpol: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
