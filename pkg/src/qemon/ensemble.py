"""Deterministic orchestration of trajectory ensembles and quality-factor
sweeps.

Trajectories are processed in fixed-size chunks (the chunk layout never
depends on the worker count), each trajectory drawing randomness only from
its own ``(master_seed, index)`` stream, and all ensemble reductions run
over the gathered per-trajectory arrays in index order with compensated
summation.  Together this makes every derived number identical whether the
chunks ran inline, or on any number of worker processes, and regardless of
which subcommand produced them.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    OccupationTable,
    TrueTrajectory,
    _simulate_jumps,
    draw_jump_uniforms,
    draw_readout_normals,
    integrate_occupation,
    run_trajectory,
)
from .measurement import MeasurementRecords, _measure, measure_trajectory
from .model import MeasurementModel, SimConfig, State
from .reconstruct import MeasuredTrajectory, Rule, _fold, reconstruct_track
from .thermo import (
    FtEstimate,
    ThermoLedger,
    _entropy_exact_batch,
    _entropy_measured_batch,
    _ledger_sums,
    entropy_exact,
    entropy_measured,
    ft_estimator,
)

__all__ = [
    "CHUNK_SIZE",
    "OneResult",
    "EnsembleResult",
    "SweepPoint",
    "run_one",
    "run_ensemble",
    "run_sweep",
]

# Trajectory indices are partitioned into chunks of this size no matter how
# many workers consume them; batching therefore never changes results.
CHUNK_SIZE = 256


def _kahan_add_rows(matrix: np.ndarray) -> np.ndarray:
    """Compensated column sums of a 2-D array, accumulated in row order."""
    total = np.zeros(matrix.shape[1], dtype=np.float64)
    comp = np.zeros_like(total)
    for row in matrix:
        y = row - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def _mean_stderr_rows(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise mean and standard error across the row (trajectory) axis."""
    n = matrix.shape[0]
    mean = _kahan_add_rows(matrix) / n
    if n < 2:
        return mean, np.zeros_like(mean)
    sq = _kahan_add_rows((matrix - mean) ** 2)
    return mean, np.sqrt(sq / (n - 1) / n)


@dataclass
class ChunkResult:
    """Per-trajectory outputs of one processed chunk, in index order."""

    indices: np.ndarray
    heat: np.ndarray
    work: np.ndarray
    du: np.ndarray
    entropy_exact: np.ndarray
    n_jumps: np.ndarray
    n_detected: np.ndarray
    entropy_measured: dict[str, np.ndarray]
    recon_abs_err: dict[str, np.ndarray]
    clamped_steps: dict[str, np.ndarray]
    omega_tracks: dict[str, np.ndarray] | None


def _process_chunk(
    config: SimConfig,
    indices: np.ndarray,
    rules: tuple[Rule, ...],
    p_excited_final: float,
    collect_tracks: bool,
) -> ChunkResult:
    uniforms = draw_jump_uniforms(config, indices)
    state_before, jumped = _simulate_jumps(config, uniforms)
    heat, work, du = _ledger_sums(config, state_before, jumped)
    ent_exact = _entropy_exact_batch(config, state_before, jumped, p_excited_final, config.bath)

    normals = draw_readout_normals(config, indices)
    de, labels, _ = _measure(config, state_before, jumped, normals)

    omega_true = config.omega_grid
    ent_measured: dict[str, np.ndarray] = {}
    recon_err: dict[str, np.ndarray] = {}
    clamp_steps: dict[str, np.ndarray] = {}
    tracks: dict[str, np.ndarray] = {}
    for rule in rules:
        omega_m, believed, clamped = _fold(
            de,
            labels,
            float(config.omega_grid[0]),
            int(config.initial_state),
            rule,
            config.protocol.floor,
        )
        ent_measured[rule.value] = _entropy_measured_batch(
            config, config.bath, omega_m, labels, believed[:, -1] == 1
        )
        recon_err[rule.value] = np.mean(np.abs(omega_m - omega_true), axis=1)
        clamp_steps[rule.value] = np.sum(clamped, axis=1)
        if collect_tracks:
            tracks[rule.value] = omega_m
    return ChunkResult(
        indices=np.asarray(indices),
        heat=heat,
        work=work,
        du=du,
        entropy_exact=ent_exact,
        n_jumps=np.sum(jumped, axis=1),
        n_detected=np.count_nonzero(labels, axis=1),
        entropy_measured=ent_measured,
        recon_abs_err=recon_err,
        clamped_steps=clamp_steps,
        omega_tracks=tracks if collect_tracks else None,
    )


@dataclass
class OneResult:
    """Full pipeline output for a single trajectory."""

    trajectory: TrueTrajectory
    records: MeasurementRecords
    tracks: dict[str, MeasuredTrajectory]
    ledger: ThermoLedger
    entropy_measured: dict[str, float]


def run_one(
    config: SimConfig,
    index: int,
    rules: tuple[Rule, ...] = (Rule.NAIVE, Rule.CORRECTED),
    occ: OccupationTable | None = None,
) -> OneResult:
    """Simulate, measure, reconstruct and balance a single trajectory."""
    from .thermo import accumulate_ledger

    if occ is None:
        occ = integrate_occupation(config)
    traj = run_trajectory(config, index)
    records = measure_trajectory(traj)
    tracks = {
        rule.value: reconstruct_track(
            records,
            float(config.omega_grid[0]),
            config.initial_state,
            rule,
            floor=config.protocol.floor,
            dt=config.dt,
        )
        for rule in rules
    }
    ledger = accumulate_ledger(traj)
    ledger.entropy_exact = entropy_exact(traj, occ, config.bath)
    ent_measured = {
        name: entropy_measured(track, config.bath, config) for name, track in tracks.items()
    }
    return OneResult(
        trajectory=traj,
        records=records,
        tracks=tracks,
        ledger=ledger,
        entropy_measured=ent_measured,
    )


@dataclass
class EnsembleResult:
    """Gathered per-trajectory arrays and canonical-order reductions."""

    config: SimConfig
    rules: tuple[Rule, ...]
    indices: np.ndarray
    heat: np.ndarray
    work: np.ndarray
    du: np.ndarray
    entropy_exact: np.ndarray
    n_jumps: np.ndarray
    n_detected: np.ndarray
    entropy_measured: dict[str, np.ndarray]
    recon_abs_err: dict[str, np.ndarray]
    clamped_steps: dict[str, np.ndarray]
    omega_tracks: dict[str, np.ndarray] | None
    ft_exact: FtEstimate | None = None
    ft_measured: dict[str, FtEstimate] = field(default_factory=dict)
    omega_mean: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    @property
    def n_trajectories(self) -> int:
        return self.indices.shape[0]

    def ledgers(self, measured_rule: str | None = None) -> list[ThermoLedger]:
        """Per-trajectory ledgers, with the measured entropy taken from the
        requested rule (None leaves it unset)."""
        measured = self.entropy_measured.get(measured_rule) if measured_rule else None
        out = []
        for row in range(self.n_trajectories):
            out.append(
                ThermoLedger(
                    trajectory_index=int(self.indices[row]),
                    heat=float(self.heat[row]),
                    work=float(self.work[row]),
                    du=float(self.du[row]),
                    entropy_exact=float(self.entropy_exact[row]),
                    entropy_measured=float(measured[row]) if measured is not None else None,
                )
            )
        return out

    def mean_abs_entropy_err(self, rule: str) -> float:
        diff = np.abs(self.entropy_measured[rule] - self.entropy_exact)
        return math.fsum(diff.tolist()) / diff.shape[0]

    def mean_recon_err(self, rule: str) -> float:
        err = self.recon_abs_err[rule]
        return math.fsum(err.tolist()) / err.shape[0]


def _chunk_indices(start_index: int, n_trajectories: int, chunk_size: int) -> list[np.ndarray]:
    stop = start_index + n_trajectories
    return [
        np.arange(lo, min(lo + chunk_size, stop), dtype=np.int64)
        for lo in range(start_index, stop, chunk_size)
    ]


def run_ensemble(
    config: SimConfig,
    n_trajectories: int,
    rules: tuple[Rule, ...] = (Rule.NAIVE, Rule.CORRECTED),
    *,
    workers: int = 1,
    collect_tracks: bool = True,
    start_index: int = 0,
    chunk_size: int = CHUNK_SIZE,
) -> EnsembleResult:
    """Run the full pipeline over ``n_trajectories`` consecutive indices.

    Results are byte-identical for any ``workers`` value; ``chunk_size``
    exists for testing the batching-invariance contract and should normally
    stay at the default.
    """
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be at least 1")
    rules = tuple(Rule(r) for r in rules)
    occ = integrate_occupation(config)
    p_final = float(occ.p_excited[-1])
    chunks = _chunk_indices(start_index, n_trajectories, chunk_size)

    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_process_chunk, config, idx, rules, p_final, collect_tracks)
                for idx in chunks
            ]
            results = [f.result() for f in futures]
    else:
        results = [_process_chunk(config, idx, rules, p_final, collect_tracks) for idx in chunks]

    def gather(puller) -> np.ndarray:
        return np.concatenate([puller(r) for r in results])

    out = EnsembleResult(
        config=config,
        rules=rules,
        indices=gather(lambda r: r.indices),
        heat=gather(lambda r: r.heat),
        work=gather(lambda r: r.work),
        du=gather(lambda r: r.du),
        entropy_exact=gather(lambda r: r.entropy_exact),
        n_jumps=gather(lambda r: r.n_jumps),
        n_detected=gather(lambda r: r.n_detected),
        entropy_measured={
            rule.value: gather(lambda r, k=rule.value: r.entropy_measured[k]) for rule in rules
        },
        recon_abs_err={
            rule.value: gather(lambda r, k=rule.value: r.recon_abs_err[k]) for rule in rules
        },
        clamped_steps={
            rule.value: gather(lambda r, k=rule.value: r.clamped_steps[k]) for rule in rules
        },
        omega_tracks=(
            {rule.value: np.concatenate([r.omega_tracks[rule.value] for r in results]) for rule in rules}
            if collect_tracks
            else None
        ),
    )
    if out.n_trajectories >= 2:
        out.ft_exact = ft_estimator(out.entropy_exact)
        out.ft_measured = {name: ft_estimator(vals) for name, vals in out.entropy_measured.items()}
    if collect_tracks:
        out.omega_mean = {name: _mean_stderr_rows(tracks) for name, tracks in out.omega_tracks.items()}
    return out


@dataclass
class SweepPoint:
    """Ensemble summary for one quality-factor value."""

    lambda_q: float
    n_trajectories: int
    ft_exact: FtEstimate | None
    ft_measured: dict[str, FtEstimate]
    mean_abs_entropy_err: dict[str, float]
    mean_recon_err: dict[str, float]
    mean_clamped_steps: dict[str, float]


def run_sweep(
    config: SimConfig,
    lambdas,
    n_trajectories: int,
    rules: tuple[Rule, ...] = (Rule.CORRECTED,),
    *,
    workers: int = 1,
) -> list[SweepPoint]:
    """Repeat the ensemble for each quality factor.

    Each sweep point draws a fresh block of trajectory indices
    (``k*n .. (k+1)*n - 1``), mirroring an experiment that randomises new
    trajectories per setting.
    """
    rules = tuple(Rule(r) for r in rules)
    points = []
    for k, lam in enumerate(lambdas):
        cfg = dataclasses.replace(config, meas=MeasurementModel(lambda_q=float(lam)))
        result = run_ensemble(
            cfg,
            n_trajectories,
            rules,
            workers=workers,
            collect_tracks=False,
            start_index=k * n_trajectories,
        )
        points.append(
            SweepPoint(
                lambda_q=float(lam),
                n_trajectories=n_trajectories,
                ft_exact=result.ft_exact,
                ft_measured=dict(result.ft_measured),
                mean_abs_entropy_err={r.value: result.mean_abs_entropy_err(r.value) for r in rules},
                mean_recon_err={r.value: result.mean_recon_err(r.value) for r in rules},
                mean_clamped_steps={
                    r.value: float(np.mean(result.clamped_steps[r.value])) for r in rules
                },
            )
        )
    return points
