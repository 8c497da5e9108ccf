"""Command line front end.

Subcommands::

    qemon simulate --out DIR [--config FILE] [--seed INT] [--rule R]
    qemon ensemble --out DIR [--config FILE] [--n INT] [--workers INT] ...
    qemon sweep    --out DIR [--lambdas L1,L2,...] [--n INT] ...

Exit codes: 0 on success, 2 on configuration errors (with a line/key
diagnostic on stderr), 3 on I/O failures.  Given the same configuration and
seed, every output byte is reproducible regardless of worker count.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import __version__
from .ensemble import run_ensemble, run_one, run_sweep
from .io import (
    ensemble_ft_summary,
    format_float,
    ft_summary_rows,
    write_fig_table,
    write_json,
    write_ledgers,
    write_manifest,
    write_measured_trajectory,
    write_measurement_records,
    write_omega_mean,
    write_true_trajectory,
)
from .model import ConfigError, RunConfig, default_run_config, load_config
from .reconstruct import Rule

__all__ = ["build_parser", "main", "entry_point"]

DEFAULT_LAMBDAS = "1e2,1e3,1e4,1e5,1e6"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qemon",
        description="Simulate and analyse continuously monitored energy exchange of a driven two-level system.",
    )
    parser.add_argument("--version", action="version", version=f"qemon {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="configuration file (flat key = value)")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override master_seed from the config")
        p.add_argument(
            "--rule",
            choices=("naive", "corrected", "both"),
            default="both",
            help="reconstruction rule(s) to run (default: both)",
        )
        p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")

    p_sim = sub.add_parser("simulate", help="run and dump a single trajectory")
    common(p_sim)

    p_ens = sub.add_parser("ensemble", help="run an ensemble and reduce it")
    common(p_ens)
    p_ens.add_argument("--n", type=int, default=None, help="number of trajectories (default: config)")

    p_sweep = sub.add_parser("sweep", help="repeat an ensemble over quality factors")
    common(p_sweep)
    p_sweep.add_argument("--n", type=int, default=None, help="number of trajectories per point (default: config)")
    p_sweep.add_argument(
        "--lambdas",
        type=str,
        default=DEFAULT_LAMBDAS,
        help=f"comma-separated quality factors (default: {DEFAULT_LAMBDAS})",
    )
    return parser


def _resolve(args) -> RunConfig:
    run = load_config(args.config) if args.config else default_run_config()
    if args.seed is not None:
        run = RunConfig(
            sim=dataclasses.replace(run.sim, master_seed=args.seed),
            n_trajectories=run.n_trajectories,
        )
    return run


def _rules(args) -> tuple[Rule, ...]:
    if args.rule == "both":
        return (Rule.NAIVE, Rule.CORRECTED)
    return (Rule(args.rule),)


def _ledger_rule(args) -> str:
    return "corrected" if args.rule == "both" else args.rule


def _parse_lambdas(text: str) -> list[float]:
    values = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            lam = float(token)
        except ValueError:
            raise ConfigError(f"invalid quality factor {token!r}", key="lambdas") from None
        if lam <= 0:
            raise ConfigError(f"quality factors must be positive, got {lam}", key="lambdas")
        values.append(lam)
    if not values:
        raise ConfigError("empty quality-factor list", key="lambdas")
    return values


def cmd_simulate(args) -> int:
    run = _resolve(args)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    result = run_one(run.sim, index=0)
    ledger = result.ledger
    ledger.entropy_measured = result.entropy_measured[_ledger_rule(args)]

    files = []
    path = out / "true_trajectory.csv"
    write_true_trajectory(result.trajectory, path)
    files.append(path)
    path = out / "measurement_record.csv"
    write_measurement_records(result.records, path)
    files.append(path)
    for name, track in result.tracks.items():
        path = out / f"measured_trajectory_{name}.csv"
        write_measured_trajectory(track, path)
        files.append(path)
    path = out / "ledger.csv"
    write_ledgers([ledger], path)
    files.append(path)
    manifest = write_manifest(out, files, run, __version__)
    print(f"wrote {len(files)} files + {manifest.name} to {out}")
    return 0


def cmd_ensemble(args) -> int:
    run = _resolve(args)
    n = args.n if args.n is not None else run.n_trajectories
    if n < 1:
        raise ConfigError("need at least one trajectory", key="n")
    rules = _rules(args)
    result = run_ensemble(run.sim, n, rules, workers=args.workers, collect_tracks=True)

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for rule in rules:
        name = rule.value
        path = out / f"ledger_{name}.csv"
        write_ledgers(result.ledgers(measured_rule=name), path)
        files.append(path)
        mean, stderr = result.omega_mean[name]
        path = out / f"omega_mean_{name}.csv"
        write_omega_mean(run.sim.time_grid, run.sim.omega_grid, mean, stderr, path)
        files.append(path)
        path = out / f"ft_summary_{name}.json"
        write_json(path, ensemble_ft_summary(result, name))
        files.append(path)
    manifest = write_manifest(out, files, run, __version__)
    print(f"wrote {len(files)} files + {manifest.name} to {out}")
    return 0


def cmd_sweep(args) -> int:
    run = _resolve(args)
    n = args.n if args.n is not None else run.n_trajectories
    if n < 1:
        raise ConfigError("need at least one trajectory", key="n")
    lambdas = _parse_lambdas(args.lambdas)
    rules = _rules(args)
    points = run_sweep(run.sim, lambdas, n, rules, workers=args.workers)

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for rule in rules:
        name = rule.value
        path = out / f"ft_summary_{name}.json"
        write_json(path, ft_summary_rows(points, name))
        files.append(path)
        path = out / f"ft_table_{name}.csv"
        write_fig_table(points, name, path)
        files.append(path)
        path = out / f"diagnostics_{name}.json"
        write_json(
            path,
            [
                {
                    "lambda_q": point.lambda_q,
                    "mean_abs_entropy_err": point.mean_abs_entropy_err[name],
                    "mean_recon_err": point.mean_recon_err[name],
                    "mean_clamped_steps": point.mean_clamped_steps[name],
                }
                for point in points
            ],
        )
        files.append(path)
    manifest = write_manifest(out, files, run, __version__)
    print(f"wrote {len(files)} files + {manifest.name} to {out}")
    return 0


_COMMANDS = {"simulate": cmd_simulate, "ensemble": cmd_ensemble, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


def entry_point() -> None:
    sys.exit(main())
