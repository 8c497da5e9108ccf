"""Ground-truth stochastic jump trajectories and the occupation equation.

Each step draws one Bernoulli variable: with probability ``rate * dt`` the
state flips (a jump exchanging a photon with the bath), otherwise it stays.
Two jumps within a step are excluded by construction, so the heat/work split
of the bookkeeping is exact in-model.  Randomness comes from per-trajectory
streams derived by hashing ``(master_seed, trajectory_index)``, which makes
every trajectory reproducible independently of batching or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np

from .model import SimConfig, State

__all__ = [
    "StepRecord",
    "TrueTrajectory",
    "OccupationTable",
    "trajectory_streams",
    "draw_jump_uniforms",
    "draw_readout_normals",
    "step_trajectory",
    "run_trajectory",
    "integrate_occupation",
    "occupation_from_omega",
]


def trajectory_streams(master_seed: int, index: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (jump, readout) random streams for one trajectory."""
    root = np.random.SeedSequence((master_seed, index))
    jump_seq, readout_seq = root.spawn(2)
    return np.random.default_rng(jump_seq), np.random.default_rng(readout_seq)


def draw_jump_uniforms(config: SimConfig, indices) -> np.ndarray:
    """Per-trajectory uniform draws deciding jumps, shape (len(indices), n_steps)."""
    out = np.empty((len(indices), config.n_steps), dtype=np.float64)
    for row, index in enumerate(indices):
        jump_rng, _ = trajectory_streams(config.master_seed, int(index))
        out[row] = jump_rng.random(config.n_steps)
    return out


def draw_readout_normals(config: SimConfig, indices) -> np.ndarray:
    """Per-trajectory standard-normal readout draws, shape (len(indices), n_steps)."""
    out = np.empty((len(indices), config.n_steps), dtype=np.float64)
    for row, index in enumerate(indices):
        _, readout_rng = trajectory_streams(config.master_seed, int(index))
        out[row] = readout_rng.standard_normal(config.n_steps)
    return out


def _simulate_jumps(config: SimConfig, uniforms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evolve a batch of trajectories in lockstep.

    Returns ``(state_before, jumped)`` with shape (batch, n_steps); states
    are int8 (0 ground, 1 excited).  Only elementwise arithmetic touches
    per-trajectory data, so each row is independent of the batch it ran in.
    """
    n = config.n_steps
    p_up = config.rate_up_grid * config.dt
    p_down = config.rate_down_grid * config.dt
    batch = uniforms.shape[0]
    state = np.full(batch, int(config.initial_state), dtype=np.int8)
    state_before = np.empty((batch, n), dtype=np.int8)
    jumped = np.empty((batch, n), dtype=bool)
    for k in range(n):
        p_flip = np.where(state == 1, p_down[k], p_up[k])
        jump = uniforms[:, k] < p_flip
        state_before[:, k] = state
        jumped[:, k] = jump
        state = state ^ jump
    return state_before, jumped


def _energy_components(
    config: SimConfig, state_before: np.ndarray, jumped: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-step (du, heat, work) from the state/jump record.

    On a jump the photon energy ``-+omega(t_k)`` is booked as heat and the
    drive part ``+-d_omega/2`` as work; ``du`` is their float sum, so the
    first-law identity holds at machine precision by construction.
    """
    n = config.n_steps
    omega = config.omega_grid[:n]
    d_omega = config.d_omega_grid
    state_after = state_before ^ jumped
    sign_after = 2.0 * state_after - 1.0
    work = sign_after * (0.5 * d_omega)
    heat = np.where(jumped, (1.0 - 2.0 * state_before) * omega, 0.0)
    return heat + work, heat, work


@dataclass
class StepRecord:
    """One simulated monitoring step of the true dynamics."""

    index: int
    t_start: float
    state_before: State
    state_after: State
    jumped: bool
    du_exact: float
    omega_start: float
    d_omega_exact: float


@dataclass
class TrueTrajectory:
    """Ground-truth record of one trajectory, stored column-wise."""

    config: SimConfig
    index: int
    state_before: np.ndarray  # (n_steps,) int8, 0 ground / 1 excited
    jumped: np.ndarray  # (n_steps,) bool

    @cached_property
    def state_after(self) -> np.ndarray:
        return self.state_before ^ self.jumped

    @cached_property
    def _components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _energy_components(self.config, self.state_before[None, :], self.jumped[None, :])

    @property
    def du_exact(self) -> np.ndarray:
        return self._components[0][0]

    @property
    def heat_steps(self) -> np.ndarray:
        return self._components[1][0]

    @property
    def work_steps(self) -> np.ndarray:
        return self._components[2][0]

    @property
    def final_state(self) -> State:
        return State(int(self.state_after[-1]))

    @property
    def n_jumps(self) -> int:
        return int(self.jumped.sum())

    def steps(self) -> Iterator[StepRecord]:
        du = self.du_exact
        omega = self.config.omega_grid
        d_omega = self.config.d_omega_grid
        times = self.config.time_grid
        for k in range(self.config.n_steps):
            yield StepRecord(
                index=k,
                t_start=float(times[k]),
                state_before=State(int(self.state_before[k])),
                state_after=State(int(self.state_after[k])),
                jumped=bool(self.jumped[k]),
                du_exact=float(du[k]),
                omega_start=float(omega[k]),
                d_omega_exact=float(d_omega[k]),
            )


def step_trajectory(state: State, t: float, config: SimConfig, random_draw: float) -> StepRecord:
    """Advance one step from ``state`` at grid time ``t``.

    The state flips iff ``random_draw < rate * dt`` (half-open convention),
    with the rate evaluated at the step start.  Matches the batched engine
    bit for bit.
    """
    k = int(round(t / config.dt))
    if not 0 <= k < config.n_steps:
        raise ValueError(f"t = {t} is not on the step grid")
    rate = config.rate_down_grid[k] if state is State.EXCITED else config.rate_up_grid[k]
    jumped = random_draw < rate * config.dt
    state_after = state.flipped() if jumped else state
    omega_k = float(config.omega_grid[k])
    d_omega_k = float(config.d_omega_grid[k])
    sign_after = 2.0 * int(state_after) - 1.0
    work = sign_after * (0.5 * d_omega_k)
    heat = (1.0 - 2.0 * int(state)) * omega_k if jumped else 0.0
    return StepRecord(
        index=k,
        t_start=float(config.time_grid[k]),
        state_before=state,
        state_after=state_after,
        jumped=bool(jumped),
        du_exact=heat + work,
        omega_start=omega_k,
        d_omega_exact=d_omega_k,
    )


def run_trajectory(config: SimConfig, index: int) -> TrueTrajectory:
    """Simulate one full trajectory, deterministic in (master_seed, index)."""
    uniforms = draw_jump_uniforms(config, [index])
    state_before, jumped = _simulate_jumps(config, uniforms)
    return TrueTrajectory(config=config, index=index, state_before=state_before[0], jumped=jumped[0])


@dataclass
class OccupationTable:
    """Deterministic state probabilities on the step grid."""

    times: np.ndarray  # (n_steps + 1,)
    p_excited: np.ndarray  # (n_steps + 1,)

    @property
    def p_ground(self) -> np.ndarray:
        return 1.0 - self.p_excited

    def prob(self, state: State, k: int) -> float:
        p = float(self.p_excited[k])
        return p if state is State.EXCITED else 1.0 - p


def occupation_from_omega(
    omega_grid: np.ndarray,
    omega_mid: np.ndarray,
    bath,
    p_excited0,
    dt: float,
) -> np.ndarray:
    """Integrate dp_e/dt = rate_up(omega) * p_g - rate_down(omega) * p_e
    with classic 4th-order stepping on the step grid.

    ``omega_grid`` has shape (..., n_steps + 1) and ``omega_mid``
    (..., n_steps); leading dimensions (e.g. a trajectory batch) are carried
    through.  Returns p_excited with the same shape as ``omega_grid``.
    """
    up_grid = np.asarray(bath.rate_up(omega_grid), dtype=np.float64)
    down_grid = np.asarray(bath.rate_down(omega_grid), dtype=np.float64)
    up_mid = np.asarray(bath.rate_up(omega_mid), dtype=np.float64)
    down_mid = np.asarray(bath.rate_down(omega_mid), dtype=np.float64)
    n = omega_mid.shape[-1]
    out = np.empty_like(np.asarray(omega_grid, dtype=np.float64))
    p = np.broadcast_to(np.asarray(p_excited0, dtype=np.float64), out[..., 0].shape).copy()
    out[..., 0] = p
    sixth = dt / 6.0
    for k in range(n):
        u0, d0 = up_grid[..., k], down_grid[..., k]
        um, dm = up_mid[..., k], down_mid[..., k]
        u1, d1 = up_grid[..., k + 1], down_grid[..., k + 1]
        k1 = u0 - (u0 + d0) * p
        k2 = um - (um + dm) * (p + 0.5 * dt * k1)
        k3 = um - (um + dm) * (p + 0.5 * dt * k2)
        k4 = u1 - (u1 + d1) * (p + dt * k3)
        p = p + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        out[..., k + 1] = p
    lo, hi = float(np.min(out)), float(np.max(out))
    if lo < -1e-12 or hi > 1.0 + 1e-12:
        raise RuntimeError(f"occupation integration left [0, 1]: range [{lo}, {hi}]")
    np.clip(out, 0.0, 1.0, out=out)
    return out


def integrate_occupation(config: SimConfig) -> OccupationTable:
    """Solve the diagonal master equation for the configured run."""
    p0 = 1.0 if config.initial_state is State.EXCITED else 0.0
    p_excited = occupation_from_omega(
        config.omega_grid, config.omega_mid_grid, config.bath, p0, config.dt
    )
    return OccupationTable(times=config.time_grid.copy(), p_excited=p_excited)
