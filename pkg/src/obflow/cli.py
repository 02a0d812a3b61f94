"""Command line entry point.

Subcommands:
    run           integrate one configuration, write diagnostics + snapshots
    linear-verify compare a single-mode run against the exact mode solution
    sweep-nu      vanishing-viscosity sweep with log-log slope fit
    dispersion    tabulate the per-mode decay rates for the configured model
    check-config  validate a config file and echo the resolved settings

Exit codes: 0 success, 2 configuration error, 3 blow-up, 4 a built-in
check failed (oracle disagreement, slope outside the requested band, or a
violated energy inequality).  All file output is deterministic: rerunning
a command with the same config produces byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

from .config import ConfigError, RunConfig, load_config
from .experiments import linear_verify, run_single, sweep_viscosity
from .linear import decay_envelope, write_dispersion_csv
from .snapshots import atomic_write_text
from .stepping import BlowUpError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_CHECK = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, type=Path,
                        help="path to a JSON config file")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override a config entry, dotted path, JSON value "
                             "(repeatable), e.g. --override model.eta=0.5")
    parser.add_argument("--output", type=Path, default=None,
                        help="output directory (default: config output.directory, "
                             "else $OBFLOW_OUTPUT_ROOT/<config stem>-<command>, "
                             "else ./runs/<config stem>-<command>)")


def _resolve_outdir(args: argparse.Namespace, cfg: RunConfig) -> Path:
    if args.output is not None:
        return args.output
    if cfg.output.directory is not None:
        return Path(cfg.output.directory)
    root = Path(os.environ.get("OBFLOW_OUTPUT_ROOT", "runs"))
    return root / f"{args.config.stem}-{args.command}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obflow",
        description="Pseudo-spectral solver for incompressible Oldroyd-B "
                    "flow with fractional stress dissipation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configuration")
    _add_common(p_run)

    p_lin = sub.add_parser("linear-verify",
                           help="check a single-mode run against the exact "
                                "damped-wave solution")
    _add_common(p_lin)
    p_lin.add_argument("--oracle-tol", type=float, default=1e-10,
                       help="gate for the toggles-off deviation (default 1e-10)")

    p_sweep = sub.add_parser("sweep-nu", help="vanishing-viscosity sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--nu", action="append", type=float, default=[],
                         help="viscosity value (repeat at least three times, "
                              "spanning two decades)")
    p_sweep.add_argument("--threads", type=int, default=1,
                         help="process-pool size for sweep members")
    p_sweep.add_argument("--slope-band", nargs=2, type=float,
                         default=[0.9, 1.1], metavar=("LO", "HI"),
                         help="acceptance band for the fitted slope")

    p_disp = sub.add_parser("dispersion",
                            help="tabulate per-mode decay rates up to the "
                                 "grid Nyquist wavenumber")
    _add_common(p_disp)

    p_chk = sub.add_parser("check-config", help="validate a config file")
    _add_common(p_chk)
    return parser


def _cmd_run(args: argparse.Namespace, cfg: RunConfig,
             warnings: List[str]) -> int:
    outdir = _resolve_outdir(args, cfg)
    result = run_single(cfg, outdir)
    for w in warnings:
        print(f"warning: {w}")
    print(f"wrote {outdir / 'diagnostics.csv'}")
    print(f"wrote {outdir / 'summary.json'}")
    if result.blew_up:
        info = result.summary["blow_up"]
        print(f"blow-up at t={info['t']:g} (step {info['step']})",
              file=sys.stderr)
        return EXIT_BLOWUP
    print(f"t_final={result.summary['t_final']:g} "
          f"steps={result.summary['steps']} "
          f"sup_u_hs={result.summary['sup_u_hs']:.6e} "
          f"c_star={result.summary['bootstrap']['c_star']:.6e}")
    if not all(result.summary["checks"].values()):
        failed = [k for k, v in result.summary["checks"].items() if not v]
        print(f"check failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _cmd_linear_verify(args: argparse.Namespace, cfg: RunConfig,
                       warnings: List[str]) -> int:
    outdir = _resolve_outdir(args, cfg)
    report = linear_verify(cfg, outdir, oracle_tol=args.oracle_tol)
    for w in warnings:
        print(f"warning: {w}")
    print(f"wrote {outdir / 'linear_verify.json'}")
    print(f"mode={report.mode} max_deviation={report.max_deviation:.6e} "
          f"dev/eps={report.deviation_over_eps:.6e} "
          f"dev/eps^2={report.deviation_over_eps_sq:.6e}")
    if not all(report.checks.values()):
        failed = [k for k, v in report.checks.items() if not v]
        print(f"check failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace, cfg: RunConfig,
               warnings: List[str]) -> int:
    outdir = _resolve_outdir(args, cfg)
    result = sweep_viscosity(cfg, args.nu, outdir, threads=args.threads,
                             slope_band=tuple(args.slope_band))
    for w in warnings:
        print(f"warning: {w}")
    print(f"wrote {outdir / 'sweep.csv'}")
    print(f"wrote {outdir / 'sweep_summary.json'}")
    if result.blew_up:
        print("a sweep member blew up", file=sys.stderr)
        return EXIT_BLOWUP
    print(f"slope={result.slope:.4f} "
          f"distances={[f'{d:.3e}' for d in result.distances]}")
    if not all(result.checks.values()):
        print(f"check failed: slope {result.slope:.4f} outside "
              f"[{args.slope_band[0]:g}, {args.slope_band[1]:g}]",
              file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _cmd_dispersion(args: argparse.Namespace, cfg: RunConfig,
                    warnings: List[str]) -> int:
    outdir = _resolve_outdir(args, cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = decay_envelope(cfg.model.eta, cfg.model.beta, cfg.grid.n // 2)
    path = outdir / "dispersion.csv"
    write_dispersion_csv(path, rows)
    for w in warnings:
        print(f"warning: {w}")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_check_config(args: argparse.Namespace, cfg: RunConfig,
                      warnings: List[str]) -> int:
    import json

    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    for w in warnings:
        print(f"warning: {w}")
    print("config ok")
    if args.output is not None:
        args.output.mkdir(parents=True, exist_ok=True)
        atomic_write_text(args.output / "resolved_config.json",
                          json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
                          + "\n")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "linear-verify": _cmd_linear_verify,
    "sweep-nu": _cmd_sweep,
    "dispersion": _cmd_dispersion,
    "check-config": _cmd_check_config,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, warnings = load_config(args.config, args.override)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args, cfg, warnings)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up at t={exc.state.t:g} (step {exc.step})",
              file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
