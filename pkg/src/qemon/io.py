"""Deterministic CSV/JSON writers and the run manifest.

All floats are rendered with shortest round-trip ``repr``, JSON keys are
sorted, and manifest entries are ordered by path, so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .engine import TrueTrajectory
from .ensemble import EnsembleResult, SweepPoint
from .measurement import JumpLabel, MeasurementRecords
from .model import RunConfig, State
from .reconstruct import MeasuredTrajectory
from .thermo import FtEstimate, ThermoLedger

__all__ = [
    "format_float",
    "write_csv",
    "write_json",
    "write_true_trajectory",
    "write_measurement_records",
    "write_measured_trajectory",
    "write_ledgers",
    "write_omega_mean",
    "ft_summary_rows",
    "write_manifest",
]

_STATE_TEXT = {0: "g", 1: "e"}
_LABEL_TEXT = {0: "stay", 1: "jump_up", -1: "jump_down"}


def format_float(value) -> str:
    return repr(float(value))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_true_trajectory(traj: TrueTrajectory, path: Path) -> None:
    config = traj.config
    du = traj.du_exact
    state_after = traj.state_after

    def rows():
        for k in range(config.n_steps):
            yield (
                str(k),
                format_float(config.time_grid[k]),
                _STATE_TEXT[int(traj.state_before[k])],
                _STATE_TEXT[int(state_after[k])],
                "1" if traj.jumped[k] else "0",
                format_float(du[k]),
                format_float(config.omega_grid[k]),
                format_float(config.d_omega_grid[k]),
            )

    write_csv(
        path,
        ("index", "t_start", "state_before", "state_after", "jumped", "dU_exact", "omega_start", "d_omega_exact"),
        rows(),
    )


def write_measurement_records(records: MeasurementRecords, path: Path) -> None:
    def rows():
        for k in range(len(records)):
            yield (
                str(k),
                format_float(records.de_measured[k]),
                _LABEL_TEXT[int(records.labels[k])],
                _STATE_TEXT[int(records.believed_after[k])],
            )

    write_csv(path, ("index", "dE_measured", "label", "believed_state_after"), rows())


def write_measured_trajectory(mtraj: MeasuredTrajectory, path: Path) -> None:
    def rows():
        yield (
            format_float(mtraj.times[0]),
            format_float(mtraj.omega_m[0]),
            format_float(mtraj.energy_m[0]),
            "",
            "",
        )
        for k in range(mtraj.labels.shape[0]):
            yield (
                format_float(mtraj.times[k + 1]),
                format_float(mtraj.omega_m[k + 1]),
                format_float(mtraj.energy_m[k + 1]),
                _LABEL_TEXT[int(mtraj.labels[k])],
                "1" if mtraj.clamped[k] else "0",
            )

    write_csv(path, ("t", "omega_m", "energy_m", "label", "clamped"), rows())


def write_ledgers(ledgers: Iterable[ThermoLedger], path: Path) -> None:
    def rows():
        for led in ledgers:
            yield (
                str(led.trajectory_index),
                format_float(led.heat),
                format_float(led.work),
                format_float(led.du),
                format_float(led.entropy_exact) if led.entropy_exact is not None else "",
                format_float(led.entropy_measured) if led.entropy_measured is not None else "",
            )

    write_csv(
        path,
        ("trajectory_index", "heat", "work", "dU", "entropy_exact", "entropy_measured"),
        rows(),
    )


def write_omega_mean(
    times: np.ndarray,
    omega_exact: np.ndarray,
    mean: np.ndarray,
    stderr: np.ndarray,
    path: Path,
) -> None:
    def rows():
        for k in range(times.shape[0]):
            yield (
                format_float(times[k]),
                format_float(omega_exact[k]),
                format_float(mean[k]),
                format_float(stderr[k]),
            )

    write_csv(path, ("t", "omega_exact", "mean_omega_m", "stderr_omega_m"), rows())


def _ft_fields(estimate: FtEstimate | None) -> tuple[float | None, float | None]:
    if estimate is None:
        return None, None
    return estimate.mean, estimate.std_error


def ft_summary_rows(points: Sequence[SweepPoint], rule: str) -> list[dict]:
    rows = []
    for point in points:
        mean_exact, stderr_exact = _ft_fields(point.ft_exact)
        mean_meas, stderr_meas = _ft_fields(point.ft_measured.get(rule))
        rows.append(
            {
                "lambda_q": point.lambda_q,
                "n_trajectories": point.n_trajectories,
                "ft_mean_exact": mean_exact,
                "ft_stderr_exact": stderr_exact,
                "ft_mean_measured": mean_meas,
                "ft_stderr_measured": stderr_meas,
            }
        )
    return rows


def ensemble_ft_summary(result: EnsembleResult, rule: str) -> dict:
    mean_exact, stderr_exact = _ft_fields(result.ft_exact)
    mean_meas, stderr_meas = _ft_fields(result.ft_measured.get(rule))
    lam = result.config.meas.lambda_q
    return {
        "lambda_q": lam if lam is not None else None,
        "n_trajectories": result.n_trajectories,
        "ft_mean_exact": mean_exact,
        "ft_stderr_exact": stderr_exact,
        "ft_mean_measured": mean_meas,
        "ft_stderr_measured": stderr_meas,
    }


def write_fig_table(points: Sequence[SweepPoint], rule: str, path: Path) -> None:
    """CSV table behind the fluctuation-theorem-versus-quality-factor plot."""

    def rows():
        for row in ft_summary_rows(points, rule):
            yield (
                format_float(row["lambda_q"]),
                format_float(row["ft_mean_exact"]),
                format_float(row["ft_stderr_exact"]),
                format_float(row["ft_mean_measured"]),
                format_float(row["ft_stderr_measured"]),
            )

    write_csv(
        path,
        ("lambda_q", "ft_mean_exact", "ft_stderr_exact", "ft_mean_measured", "ft_stderr_measured"),
        rows(),
    )


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(
    out_dir: Path,
    files: Sequence[Path],
    run_config: RunConfig,
    artifact_version: str,
) -> Path:
    """Hash every output file into ``manifest.json``; rerunning an identical
    configuration reproduces identical digests."""
    entries = sorted(
        ({"path": str(p.relative_to(out_dir)), "sha256": sha256_file(p)} for p in files),
        key=lambda e: e["path"],
    )
    manifest = {
        "artifact_version": artifact_version,
        "master_seed": run_config.sim.master_seed,
        "config_echo": run_config.echo(),
        "outputs": entries,
    }
    path = out_dir / "manifest.json"
    write_json(path, manifest)
    return path
