"""Gaussian energy-readout channel, jump detection, and the exact
two-point-measurement distribution.

The ancilla-based readout is represented by its operational content: each
step's true energy change is reported with additive Gaussian noise of
standard deviation ``1/lambda_q``.  A per-step maximum-likelihood test then
decides between the only two hypotheses available given the believed state
-- stay (mean ``+-d_omega/2``) or jump (mean ``-+omega - d_omega/2``) --
i.e. a midpoint threshold between the two candidate means.  Misclassifying
is a modelled physical outcome, not an error: a wrong label desynchronises
the believed state from the true one until the next misclassification.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import ndtr

from .engine import TrueTrajectory, _energy_components, draw_readout_normals
from .model import MeasurementModel, SimConfig, State

__all__ = [
    "JumpLabel",
    "MeasurementRecord",
    "MeasurementRecords",
    "DiscreteEnergyDistribution",
    "SmearedDensity",
    "readout",
    "classify",
    "measure_trajectory",
    "two_point_distribution",
    "smeared_density",
]


class JumpLabel(enum.IntEnum):
    """Classified outcome of one monitoring step."""

    STAY = 0
    JUMP_UP = 1
    JUMP_DOWN = -1

    @property
    def text(self) -> str:
        return {JumpLabel.STAY: "stay", JumpLabel.JUMP_UP: "jump_up", JumpLabel.JUMP_DOWN: "jump_down"}[self]

    @classmethod
    def parse(cls, text: str) -> "JumpLabel":
        key = text.strip().lower()
        for label in cls:
            if label.text == key:
                return label
        raise ValueError(f"invalid jump label {text!r}")


@dataclass
class MeasurementRecord:
    """One step of the measurement record."""

    index: int
    de_measured: float
    label: JumpLabel
    believed_state_after: State


@dataclass
class MeasurementRecords:
    """Column-wise measurement record of one trajectory."""

    trajectory_index: int
    initial_state: State
    de_measured: np.ndarray  # (n_steps,)
    labels: np.ndarray  # (n_steps,) int8
    believed_after: np.ndarray  # (n_steps,) int8

    def __len__(self) -> int:
        return self.de_measured.shape[0]

    def __getitem__(self, k: int) -> MeasurementRecord:
        return MeasurementRecord(
            index=k,
            de_measured=float(self.de_measured[k]),
            label=JumpLabel(int(self.labels[k])),
            believed_state_after=State(int(self.believed_after[k])),
        )

    def __iter__(self) -> Iterator[MeasurementRecord]:
        return (self[k] for k in range(len(self)))

    @property
    def n_detected_jumps(self) -> int:
        return int(np.count_nonzero(self.labels))


def readout(du_exact: float, meas: MeasurementModel, random_draw: float) -> float:
    """One noisy energy readout: ``du_exact + random_draw / lambda_q``.

    ``random_draw`` is a standard normal sample; in perfect mode the exact
    value is returned.
    """
    return float(du_exact) + float(random_draw) * meas.sigma


def classify(
    de_measured: float,
    believed_state: State,
    omega_believed: float,
    d_omega_believed: float = 0.0,
) -> JumpLabel:
    """Maximum-likelihood jump detection for one step.

    Under equal-variance Gaussian readout the ML decision between the two
    candidate means is a midpoint threshold; ties resolve to stay.
    """
    sign_b = 2.0 * int(believed_state) - 1.0
    stay_mean = sign_b * (0.5 * d_omega_believed)
    jump_mean = -sign_b * (omega_believed + 0.5 * d_omega_believed)
    threshold = 0.5 * (stay_mean + jump_mean)
    if believed_state is State.EXCITED:
        detected = de_measured < threshold
    else:
        detected = de_measured > threshold
    if not detected:
        return JumpLabel.STAY
    return JumpLabel.JUMP_DOWN if believed_state is State.EXCITED else JumpLabel.JUMP_UP


def _measure(
    config: SimConfig,
    state_before: np.ndarray,
    jumped: np.ndarray,
    normals: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run the readout-and-classify pipeline over a batch.

    Returns ``(de_measured, labels, believed_after)``, each (batch,
    n_steps).  The classifier threads a believed state and a believed
    frequency track updated with the jump-averaged rule -- the
    error-contracting update is what keeps the detection thresholds
    calibrated over long records; a plainly-updated track random-walks
    until real jumps fall inside its stay region.  The believed d_omega
    entering the hypothesis means is the previous step's increment (zero
    at step 0).
    """
    du, _, _ = _energy_components(config, state_before, jumped)
    if config.meas.perfect:
        de_measured = du.copy()
    else:
        de_measured = du + normals * config.meas.sigma
    batch, n = de_measured.shape
    floor = config.protocol.floor
    labels = np.empty((batch, n), dtype=np.int8)
    believed_after = np.empty((batch, n), dtype=np.int8)
    b = np.full(batch, int(config.initial_state), dtype=np.int8)
    w = np.full(batch, float(config.omega_grid[0]), dtype=np.float64)
    d_omega_b = np.zeros(batch, dtype=np.float64)
    for k in range(n):
        de = de_measured[:, k]
        sign_b = 2.0 * b - 1.0
        stay_mean = sign_b * (0.5 * d_omega_b)
        jump_mean = -sign_b * (w + 0.5 * d_omega_b)
        threshold = 0.5 * (stay_mean + jump_mean)
        detected = np.where(b == 1, de < threshold, de > threshold)
        labels[:, k] = np.where(detected, np.where(b == 1, -1, 1), 0)
        f = b ^ detected
        base = np.where(f == 1, 2.0 * de, -2.0 * de)
        incr = np.where(detected, 0.5 * (base - 2.0 * w), base)
        w = w + incr
        w = np.where(w < floor, floor, w)
        d_omega_b = incr
        believed_after[:, k] = f
        b = f
    return de_measured, labels, believed_after


def measure_trajectory(traj: TrueTrajectory) -> MeasurementRecords:
    """Measure one true trajectory with its own readout stream."""
    config = traj.config
    normals = draw_readout_normals(config, [traj.index])
    de, labels, believed_after = _measure(
        config, traj.state_before[None, :], traj.jumped[None, :], normals
    )
    return MeasurementRecords(
        trajectory_index=traj.index,
        initial_state=config.initial_state,
        de_measured=de[0],
        labels=labels[0],
        believed_after=believed_after[0],
    )


@dataclass
class DiscreteEnergyDistribution:
    """Finite distribution of energy changes from a two-point measurement."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.values.shape != self.probs.shape or self.values.ndim != 1:
            raise ValueError("values and probs must be 1-D arrays of equal length")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        total = math.fsum(self.probs.tolist())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

    @property
    def support(self) -> list[tuple[float, float]]:
        return [(float(v), float(p)) for v, p in zip(self.values, self.probs)]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cum = np.cumsum(self.probs)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, rng.random(size), side="right")
        return self.values[idx]


def two_point_distribution(
    eigen_energies_before,
    eigen_energies_after,
    evolution: np.ndarray,
    initial_populations,
) -> DiscreteEnergyDistribution:
    """Exact distribution of the energy change measured projectively before
    and after a unitary evolution of a two-level system.

    Outcome ``E_after[m] - E_before[n]`` carries probability
    ``p_n * |<m|V|n>|**2``; equal energy changes are merged.
    """
    e_before = np.asarray(eigen_energies_before, dtype=np.float64).reshape(2)
    e_after = np.asarray(eigen_energies_after, dtype=np.float64).reshape(2)
    v = np.asarray(evolution, dtype=np.complex128)
    if v.shape != (2, 2):
        raise ValueError("evolution must be a 2x2 matrix")
    defect = np.max(np.abs(v.conj().T @ v - np.eye(2)))
    if defect > 1e-10:
        raise ValueError(f"evolution is not unitary (defect {defect:.2e})")
    pops = np.asarray(initial_populations, dtype=np.float64).reshape(2)
    if np.any(pops < 0) or abs(math.fsum(pops.tolist()) - 1.0) > 1e-12:
        raise ValueError("initial populations must be nonnegative and sum to 1")

    transition = np.abs(v) ** 2  # transition[m, n] = |<m|V|n>|^2
    merged: dict[float, float] = {}
    for m in range(2):
        for n in range(2):
            weight = float(pops[n] * transition[m, n])
            value = float(e_after[m] - e_before[n])
            merged[value] = merged.get(value, 0.0) + weight
    values = np.array(sorted(merged), dtype=np.float64)
    probs = np.array([merged[v] for v in values], dtype=np.float64)
    return DiscreteEnergyDistribution(values=values, probs=probs)


@dataclass
class SmearedDensity:
    """Gaussian-smeared view of a discrete energy distribution: a mixture of
    normals centered at the discrete outcomes with sigma = 1/lambda_q."""

    dist: DiscreteEnergyDistribution
    lambda_q: float

    def pdf(self, energy) -> np.ndarray:
        x = (np.asarray(energy, dtype=np.float64)[..., None] - self.dist.values) * self.lambda_q
        norm = self.lambda_q / math.sqrt(2.0 * math.pi)
        return np.sum(self.dist.probs * norm * np.exp(-0.5 * x * x), axis=-1)

    def cdf(self, energy) -> np.ndarray:
        x = (np.asarray(energy, dtype=np.float64)[..., None] - self.dist.values) * self.lambda_q
        return np.sum(self.dist.probs * ndtr(x), axis=-1)


def smeared_density(dist: DiscreteEnergyDistribution, meas: MeasurementModel) -> SmearedDensity:
    """Readout-channel view of ``dist``; undefined for a perfect channel."""
    if meas.perfect:
        raise ValueError("perfect readout has no smeared density (delta comb)")
    return SmearedDensity(dist=dist, lambda_q=meas.lambda_q)
