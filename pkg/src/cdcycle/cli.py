"""Command-line entry point.

Subcommands map one to one onto the scripted experiments; every run writes
its outputs as CSV/JSON into the output directory together with the fully
resolved configuration (``resolved_config.json``), which can be fed back via
``--config`` to reproduce the run exactly.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O
error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import experiments as exp
from .errors import CdcycleError, ConfigError
from .output import write_csv, write_json
from .selfcheck import run_checks
from .sweeps import ArctanProfile, PolynomialProfile

OUTPUT_ENV_VAR = "CDCYCLE_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdcycle",
        description="Cyclic state preparation in a driven three-level system",
    )
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--out", help=f"output directory (overrides ${OUTPUT_ENV_VAR} and config)")
    parser.add_argument("--threads", type=int, help="cap on parallel scan workers")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--tf", type=float, help="protocol duration in ns")
        p.add_argument("--profile", choices=["arctan", "polynomial"], help="sweep shape")
        p.add_argument("--samples", type=int, help="grid samples per cycle")
        p.add_argument("--k", type=int, help="coupling phase winding number")
        p.add_argument("--v", type=float, help="constant sweep shift (1/ns)")
        p.add_argument("--sign-mode", action=argparse.BooleanOptionalAction, default=None,
                       help="smooth sign flip of the coupling")
        p.add_argument("--cd", action=argparse.BooleanOptionalAction, default=None,
                       help="counterdiabatic drive on/off")
        p.add_argument("--dim", type=int, choices=[2, 3], help="model dimension")
        p.add_argument("--initial", help="initial state: 1, S, T or eigenstate")

    p = sub.add_parser("propagate", help="single protocol cycle, trajectory CSV")
    add_common(p)
    p.add_argument("--cd-norms", action="store_true",
                   help="also dump the counterdiabatic drive strength along the grid")
    p = sub.add_parser("cycles", help="repeated protocol cycles, trajectory CSV")
    add_common(p)
    p.add_argument("--n-cycles", type=int, default=None, help="number of cycles")
    p = sub.add_parser("fig2", help="mid-protocol fidelity versus duration (both sweeps)")
    p.add_argument("--tf-min", type=float, default=100.0)
    p.add_argument("--tf-max", type=float, default=10000.0)
    p.add_argument("--points", type=int, default=15)
    p = sub.add_parser("fig3", help="slow plain-sweep population traces (both sweeps)")
    p.add_argument("--tf", type=float, default=5000.0)
    p = sub.add_parser("fig4", help="three fast counterdiabatic cycles, trajectory CSV")
    p.add_argument("--n-cycles", type=int, default=3)
    p = sub.add_parser("fig5", help="closed Bloch loops for three coupling modulations")
    p = sub.add_parser("fig6", help="shift scan, correlation and degree-8 fit")
    p.add_argument("--v-start", type=float, default=None)
    p.add_argument("--v-stop", type=float, default=None)
    p.add_argument("--v-points", type=int, default=None)
    p = sub.add_parser("berry", help="geometric-phase report for the configured loop")
    add_common(p)
    p = sub.add_parser("check", help="run the built-in invariant self-tests")
    return parser


def _load_config(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load_config(args.config) if args.config else cfgmod.default_config()
    sweep_over = {}
    if getattr(args, "tf", None) is not None:
        sweep_over["t_f"] = args.tf
    if getattr(args, "profile", None) is not None:
        sweep_over["profile"] = (
            ArctanProfile() if args.profile == "arctan" else PolynomialProfile()
        )
    if getattr(args, "k", None) is not None:
        sweep_over["k"] = args.k
    if getattr(args, "v", None) is not None:
        sweep_over["v"] = args.v
    if getattr(args, "sign_mode", None) is not None:
        sweep_over["sign_mode"] = args.sign_mode
    if sweep_over:
        cfg = cfg.with_sweep(**sweep_over)
    run_over = {}
    if getattr(args, "samples", None) is not None:
        run_over["samples"] = args.samples
    if getattr(args, "cd", None) is not None:
        run_over["cd_enabled"] = args.cd
    if getattr(args, "dim", None) is not None:
        run_over["dimension"] = args.dim
    if getattr(args, "initial", None) is not None:
        run_over["initial_state"] = args.initial
    if getattr(args, "n_cycles", None) is not None:
        run_over["n_cycles"] = args.n_cycles
    if args.threads is not None:
        run_over["workers"] = args.threads
    if run_over:
        cfg = cfg.with_run(**run_over)
    if args.command == "fig6" and cfg.sweep.k == 0:
        cfg = cfg.with_sweep(k=1)  # the correlation scan is a phased protocol
    out_dir = args.out or os.environ.get(OUTPUT_ENV_VAR) or cfg.output_dir
    return replace(cfg, output_dir=out_dir, experiment=args.command)


def _emit_config(cfg: cfgmod.RunConfig) -> Path:
    return write_json(Path(cfg.output_dir) / "resolved_config.json", cfg.to_dict())


def _write_trajectory(cfg, traj, name: str) -> Path:
    return write_csv(Path(cfg.output_dir) / name, traj.csv_header(), traj.csv_rows())


def _cmd_propagate(cfg, args) -> None:
    traj = exp.run_single(cfg.with_run(n_cycles=1))
    path = _write_trajectory(cfg, traj, "trajectory.csv")
    print(f"trajectory with {traj.n_samples} samples -> {path}")
    if args.cd_norms:
        from .cd import cd_norm_profile, make_assembly

        assembly = make_assembly(
            cfg.model, cfg.sweep, dim=cfg.run.dimension,
            cd_enabled=cfg.run.cd_enabled, phase_targets=cfg.phase_targets,
        )
        norms = cd_norm_profile(assembly, traj.grid)
        norm_path = write_csv(
            Path(cfg.output_dir) / "cd_norms.csv",
            ["tau", "hcd_norm"],
            np.column_stack([traj.grid, norms]),
        )
        print(f"counterdiabatic drive strength (peak {norms.max():.6f} 1/ns) -> {norm_path}")


def _cmd_cycles(cfg, args) -> None:
    traj = exp.run_single(cfg)
    path = _write_trajectory(cfg, traj, "trajectory.csv")
    final_p1 = float(traj.populations[-1, 0])
    print(f"{cfg.run.n_cycles} cycle(s), final P_1 = {final_p1:.6f} -> {path}")


def _cmd_fig2(cfg, args) -> None:
    tf_values = np.logspace(np.log10(args.tf_min), np.log10(args.tf_max), args.points)
    scan = exp.fig2_data(cfg, tf_values, workers=cfg.run.workers)
    path = write_csv(Path(cfg.output_dir) / "fig2_fidelity_vs_tf.csv", scan.columns, scan.csv_rows())
    print(f"{len(scan.records)} scan points -> {path}")


def _cmd_fig3(cfg, args) -> None:
    for name, traj in exp.fig3_data(cfg, args.tf).items():
        path = _write_trajectory(cfg, traj, f"fig3_populations_{name}.csv")
        print(f"{name} trace ({traj.n_samples} samples) -> {path}")


def _cmd_fig4(cfg, args) -> None:
    traj = exp.fig4_data(cfg, args.n_cycles)
    path = _write_trajectory(cfg, traj, "fig4_trajectory.csv")
    print(f"{args.n_cycles} CD cycles, final P_1 = {float(traj.populations[-1, 0]):.6f} -> {path}")


def _cmd_fig5(cfg, args) -> None:
    for name, panel in exp.fig5_data(cfg).items():
        rows = np.column_stack([panel["trajectory"].grid, panel["bloch"]])
        path = write_csv(Path(cfg.output_dir) / f"fig5_bloch_{name}.csv",
                         ["tau", "x", "y", "z"], rows)
        print(f"panel {name} (k={panel['modulation']['k']}, "
              f"sign_mode={panel['modulation']['sign_mode']}) -> {path}")


def _cmd_fig6(cfg, args) -> None:
    if args.v_start is not None or args.v_stop is not None or args.v_points is not None:
        start = args.v_start if args.v_start is not None else -10.0
        stop = args.v_stop if args.v_stop is not None else -0.25
        points = args.v_points if args.v_points is not None else 40
        v_grid = np.linspace(start, stop, points)
    else:
        v_grid = None
    data = exp.fig6_data(cfg, v_grid, workers=cfg.run.workers)
    scan = data["scan"]
    path = write_csv(Path(cfg.output_dir) / "fig6_scan.csv", scan.columns, scan.csv_rows())
    fit = data["fit"]
    report = {
        "spearman_population_vs_abs_gamma": data["spearman"],
        "n_ok": data["n_ok"],
        "fit_coefficients_high_to_low": list(fit.coefficients) if fit else None,
        "fit_residual_norm": fit.residual_norm if fit else None,
        "fit_condition": fit.condition if fit else None,
        "reference_coefficients_high_to_low": list(data["reference_coefficients"]),
        "fingerprint": scan.fingerprint,
    }
    fit_path = write_json(Path(cfg.output_dir) / "fig6_fit.json", report)
    print(f"{len(scan.records)} scan points -> {path}; fit report -> {fit_path}")


def _cmd_berry(cfg, args) -> None:
    report = exp.berry_report_data(cfg)
    path = write_json(Path(cfg.output_dir) / "berry_report.json", report)
    print(
        f"gamma_B = {report['gamma_B']:+.6f} (|gamma| = {report['gamma_abs']:.6f}, "
        f"k = {report['k']}, 2/3-level difference = {report['equivalence_difference']:.2e}) "
        f"-> {path}"
    )


def _cmd_check(cfg, args) -> int:
    results = run_checks(cfg)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERICAL


_COMMANDS = {
    "propagate": _cmd_propagate,
    "cycles": _cmd_cycles,
    "fig2": _cmd_fig2,
    "fig3": _cmd_fig3,
    "fig4": _cmd_fig4,
    "fig5": _cmd_fig5,
    "fig6": _cmd_fig6,
    "berry": _cmd_berry,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "check":
            return _cmd_check(cfg, args)
        _emit_config(cfg)
        _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CdcycleError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
