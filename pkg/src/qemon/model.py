"""Physical model and configuration.

Units: ``hbar = 1``, energies are measured in units of ``hbar*omega0``,
times in units of ``1/omega0``, and the readout quality factor ``lambda_q``
in units of ``1/(hbar*omega0)``.  With these conventions the instantaneous
level splitting ``omega(t)`` doubles as the energy gap.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "State",
    "ConfigError",
    "DriveProtocol",
    "BathParams",
    "MeasurementModel",
    "SimConfig",
    "RunConfig",
    "CONFIG_KEYS",
    "default_run_config",
    "load_config",
    "parse_config_text",
    "resolve_config",
]

# Default validation limits.  A per-step jump probability or drive increment
# above these makes the one-jump-per-step, piecewise-linear-drive model a
# poor surrogate for the continuous dynamics.
DT_RATE_LIMIT = 0.05
DT_DRIVE_LIMIT = 0.05
DRIVE_STEP_LIMIT = 0.05


class State(enum.IntEnum):
    """Energy eigenstate of the monitored two-level system."""

    GROUND = 0
    EXCITED = 1

    @property
    def sign(self) -> int:
        """Eigenvalue of sigma_z: +1 for excited, -1 for ground."""
        return 1 if self is State.EXCITED else -1

    @property
    def label(self) -> str:
        return "e" if self is State.EXCITED else "g"

    @classmethod
    def parse(cls, text: str) -> "State":
        key = text.strip().lower()
        if key in ("g", "ground", "0"):
            return cls.GROUND
        if key in ("e", "excited", "1"):
            return cls.EXCITED
        raise ConfigError(f"invalid state {text!r}: expected 'g' or 'e'")

    def flipped(self) -> "State":
        return State.EXCITED if self is State.GROUND else State.GROUND


class ConfigError(ValueError):
    """Raised when a configuration value or file is invalid."""

    def __init__(self, message: str, *, key: str | None = None, line: int | None = None):
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"key '{key}': "
        super().__init__(prefix + message)
        self.key = key
        self.line = line


ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class DriveProtocol:
    """Sinusoidally modulated level splitting.

    ``omega(t) = omega0 * (1 + modulation_depth * sin(big_omega * t))``

    Parameters
    ----------
    omega0 : float
        Carrier splitting; sets the global frequency unit.
    big_omega : float
        Angular frequency of the modulation.  Zero means a static drive.
    modulation_depth : float
        Relative amplitude of the modulation (default 0.5).
    epsilon : float
        Dimensionless floor: the run is only valid while
        ``omega(t) >= epsilon * omega0``, and reconstructed tracks are
        clamped at this floor.
    """

    omega0: float
    big_omega: float
    modulation_depth: float = 0.5
    epsilon: float = 0.1

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ConfigError("omega0 must be positive", key="omega0")
        if self.big_omega < 0:
            raise ConfigError("big_omega must be nonnegative", key="big_omega")
        if self.modulation_depth < 0:
            raise ConfigError("modulation_depth must be nonnegative", key="modulation_depth")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        if self.modulation_depth > 1 - self.epsilon:
            raise ConfigError(
                f"modulation_depth {self.modulation_depth} violates "
                f"omega(t) >= epsilon*omega0 (needs depth <= {1 - self.epsilon})",
                key="modulation_depth",
            )

    def omega_at(self, t: ArrayLike) -> ArrayLike:
        """Instantaneous splitting omega(t); strictly positive."""
        return self.omega0 * (1.0 + self.modulation_depth * np.sin(self.big_omega * np.asarray(t)))

    @property
    def omega_min(self) -> float:
        return self.omega0 * (1.0 - self.modulation_depth)

    @property
    def period(self) -> float:
        """Duration of one modulation cycle (inf for a static drive)."""
        return 2.0 * math.pi / self.big_omega if self.big_omega > 0 else math.inf

    @property
    def floor(self) -> float:
        """Lowest admissible splitting, epsilon * omega0."""
        return self.epsilon * self.omega0


@dataclass(frozen=True)
class BathParams:
    """Thermal reservoir: coupling strength and inverse temperature."""

    gamma: float
    beta: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigError("gamma must be nonnegative", key="gamma")
        if self.beta <= 0:
            raise ConfigError("beta must be positive", key="beta")

    def nbar(self, omega: ArrayLike) -> ArrayLike:
        """Mean photon number of the reservoir mode at splitting ``omega``.

        Overflow-safe: for beta*omega large the result underflows to 0.0
        rather than producing NaN.
        """
        with np.errstate(over="ignore"):
            return 1.0 / np.expm1(self.beta * np.asarray(omega))

    def rate_up(self, omega: ArrayLike) -> ArrayLike:
        """Absorption rate gamma_plus = Gamma * nbar(omega)."""
        return self.gamma * self.nbar(omega)

    def rate_down(self, omega: ArrayLike) -> ArrayLike:
        """Emission rate gamma_minus = Gamma * (nbar(omega) + 1)."""
        return self.gamma * (self.nbar(omega) + 1.0)

    def jump_rate(self, state: State, omega: ArrayLike) -> ArrayLike:
        """Rate of leaving ``state`` at splitting ``omega``."""
        if state is State.GROUND:
            return self.rate_up(omega)
        return self.rate_down(omega)


@dataclass(frozen=True)
class MeasurementModel:
    """Gaussian energy-readout channel.

    A single readout of an energy change ``dU`` returns
    ``dU + xi / lambda_q`` with ``xi`` a standard normal draw, i.e. the
    readout standard deviation is ``1/lambda_q``.  ``perfect=True`` models
    the infinite-quality limit with exact readouts.
    """

    lambda_q: float | None = None
    perfect: bool = False

    def __post_init__(self):
        if not self.perfect:
            if self.lambda_q is None or not self.lambda_q > 0:
                raise ConfigError("lambda_q must be positive unless perfect=true", key="lambda_q")

    @property
    def sigma(self) -> float:
        """Readout standard deviation in energy units (0 when perfect)."""
        return 0.0 if self.perfect else 1.0 / self.lambda_q


@dataclass(frozen=True)
class SimConfig:
    """A fully validated single-trajectory simulation setup.

    The validation limits are configurable; pushing them beyond the module
    defaults is allowed but emits a warning, since the per-step model then
    drifts away from the continuous dynamics it discretises.
    """

    protocol: DriveProtocol
    bath: BathParams
    meas: MeasurementModel
    dt: float
    n_steps: int
    initial_state: State = State.GROUND
    master_seed: int = 12345
    dt_rate_limit: float = DT_RATE_LIMIT
    dt_drive_limit: float = DT_DRIVE_LIMIT
    drive_step_limit: float = DRIVE_STEP_LIMIT

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive", key="dt")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be at least 1", key="n_steps")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must fit in 64 bits", key="master_seed")
        for name, value, default in (
            ("dt_rate_limit", self.dt_rate_limit, DT_RATE_LIMIT),
            ("dt_drive_limit", self.dt_drive_limit, DT_DRIVE_LIMIT),
            ("drive_step_limit", self.drive_step_limit, DRIVE_STEP_LIMIT),
        ):
            if value <= 0:
                raise ConfigError(f"{name} must be positive", key=name)
            if value > default:
                warnings.warn(
                    f"{name}={value} loosened beyond the default {default}; "
                    "the per-step model may no longer track the continuous dynamics",
                    stacklevel=2,
                )
        rate_max = float(self.bath.rate_down(self.protocol.omega_min))
        if self.dt * rate_max > self.dt_rate_limit:
            raise ConfigError(
                f"dt*gamma_max = {self.dt * rate_max:.4g} exceeds {self.dt_rate_limit} "
                "(per-step jump probability too large)",
                key="dt",
            )
        if self.dt * self.protocol.big_omega > self.dt_drive_limit:
            raise ConfigError(
                f"dt*big_omega = {self.dt * self.protocol.big_omega:.4g} exceeds "
                f"{self.dt_drive_limit} (drive not linear per step)",
                key="dt",
            )
        step_max = self.protocol.modulation_depth * self.protocol.big_omega * self.dt
        if step_max > self.drive_step_limit * self.protocol.epsilon:
            raise ConfigError(
                f"per-step |d_omega| = {step_max * self.protocol.omega0:.4g} exceeds "
                f"{self.drive_step_limit} * epsilon*omega0 "
                f"= {self.drive_step_limit * self.protocol.floor:.4g}",
                key="dt",
            )

    def __getstate__(self):
        # keep pickles lean: drop cached grids, rebuild lazily after transfer
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    def __setstate__(self, state):
        self.__dict__.update(state)

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    @cached_property
    def time_grid(self) -> np.ndarray:
        """Step boundaries t_0 .. t_n (n_steps + 1 points)."""
        return np.arange(self.n_steps + 1, dtype=np.float64) * self.dt

    @cached_property
    def omega_grid(self) -> np.ndarray:
        """omega(t) on the step boundaries."""
        return np.asarray(self.protocol.omega_at(self.time_grid), dtype=np.float64)

    @cached_property
    def d_omega_grid(self) -> np.ndarray:
        """Per-step increments omega(t_{k+1}) - omega(t_k)."""
        grid = self.omega_grid
        return grid[1:] - grid[:-1]

    @cached_property
    def omega_mid_grid(self) -> np.ndarray:
        """omega(t) at step midpoints (used by the occupation integrator)."""
        mid = self.time_grid[:-1] + 0.5 * self.dt
        return np.asarray(self.protocol.omega_at(mid), dtype=np.float64)

    @cached_property
    def rate_up_grid(self) -> np.ndarray:
        return np.asarray(self.bath.rate_up(self.omega_grid[:-1]), dtype=np.float64)

    @cached_property
    def rate_down_grid(self) -> np.ndarray:
        return np.asarray(self.bath.rate_down(self.omega_grid[:-1]), dtype=np.float64)

    def energy(self, state: State, t: ArrayLike) -> ArrayLike:
        """Internal energy +-omega(t)/2 of an eigenstate."""
        return 0.5 * state.sign * self.protocol.omega_at(t)


# --------------------------------------------------------------------------
# Configuration files: flat "key = value" text with exactly these keys.

CONFIG_KEYS = (
    "omega0",
    "big_omega",
    "modulation_depth",
    "gamma",
    "beta",
    "lambda_q",
    "perfect",
    "dt",
    "n_steps",
    "initial_state",
    "master_seed",
    "n_trajectories",
)

DEFAULTS: dict[str, str] = {
    "omega0": "1.0",
    "big_omega": "0.05",
    "modulation_depth": "0.5",
    "gamma": "1.3",
    "beta": "0.75",
    "lambda_q": "100.0",
    "perfect": "false",
    # dt defaults to one full drive cycle split over n_steps
    "dt": "",
    "n_steps": "10800",
    "initial_state": "g",
    "master_seed": "12345",
    "n_trajectories": "1000",
}

DEFAULT_EPSILON = 0.1


@dataclass(frozen=True)
class RunConfig:
    """A resolved configuration: simulation setup plus ensemble size."""

    sim: SimConfig
    n_trajectories: int

    def echo(self) -> dict[str, str]:
        """Render back to the flat key/value form; reparsing reproduces an
        identical resolved configuration."""
        sim = self.sim
        meas = sim.meas
        return {
            "omega0": repr(float(sim.protocol.omega0)),
            "big_omega": repr(float(sim.protocol.big_omega)),
            "modulation_depth": repr(float(sim.protocol.modulation_depth)),
            "gamma": repr(float(sim.bath.gamma)),
            "beta": repr(float(sim.bath.beta)),
            "lambda_q": repr(float(meas.lambda_q)) if meas.lambda_q is not None else "",
            "perfect": "true" if meas.perfect else "false",
            "dt": repr(float(sim.dt)),
            "n_steps": str(sim.n_steps),
            "initial_state": sim.initial_state.label,
            "master_seed": str(sim.master_seed),
            "n_trajectories": str(self.n_trajectories),
        }


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; '#' starts a comment.

    Unknown or duplicated keys raise :class:`ConfigError` with the line
    number.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}", key=key, line=lineno)
        if key in values:
            raise ConfigError("duplicate key", key=key, line=lineno)
        values[key] = value
    return values


def _parse_float(values: dict[str, str], key: str) -> float:
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"invalid number {values[key]!r}", key=key) from None


def _parse_int(values: dict[str, str], key: str) -> int:
    try:
        return int(values[key])
    except ValueError:
        raise ConfigError(f"invalid integer {values[key]!r}", key=key) from None


def _parse_bool(values: dict[str, str], key: str) -> bool:
    text = values[key].strip().lower()
    if text in ("true", "1", "yes"):
        return True
    if text in ("false", "0", "no"):
        return False
    raise ConfigError(f"invalid boolean {values[key]!r}", key=key)


def resolve_config(overrides: dict[str, str] | None = None, *, epsilon: float = DEFAULT_EPSILON) -> RunConfig:
    """Apply ``overrides`` on top of the defaults and build a validated
    :class:`RunConfig`.

    With no overrides this reproduces the stock setup: unit carrier
    frequency, half-depth sinusoidal modulation, and a step grid covering
    exactly one drive cycle.
    """
    values = dict(DEFAULTS)
    if overrides:
        for key in overrides:
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown key {key!r}", key=key)
        values.update({k: str(v) for k, v in overrides.items()})

    protocol = DriveProtocol(
        omega0=_parse_float(values, "omega0"),
        big_omega=_parse_float(values, "big_omega"),
        modulation_depth=_parse_float(values, "modulation_depth"),
        epsilon=epsilon,
    )
    bath = BathParams(gamma=_parse_float(values, "gamma"), beta=_parse_float(values, "beta"))
    perfect = _parse_bool(values, "perfect")
    lambda_text = values["lambda_q"].strip()
    meas = MeasurementModel(
        lambda_q=_parse_float(values, "lambda_q") if lambda_text else None,
        perfect=perfect,
    )
    n_steps = _parse_int(values, "n_steps")
    dt_text = values["dt"].strip()
    if dt_text:
        dt = _parse_float(values, "dt")
    else:
        if protocol.big_omega <= 0:
            raise ConfigError("dt is required for a static drive (big_omega = 0)", key="dt")
        dt = protocol.period / n_steps
    sim = SimConfig(
        protocol=protocol,
        bath=bath,
        meas=meas,
        dt=dt,
        n_steps=n_steps,
        initial_state=State.parse(values["initial_state"]),
        master_seed=_parse_int(values, "master_seed"),
    )
    n_trajectories = _parse_int(values, "n_trajectories")
    if n_trajectories < 1:
        raise ConfigError("n_trajectories must be at least 1", key="n_trajectories")
    return RunConfig(sim=sim, n_trajectories=n_trajectories)


def load_config(path: str | Path) -> RunConfig:
    """Read and resolve a configuration file."""
    text = Path(path).read_text(encoding="utf-8")
    return resolve_config(parse_config_text(text))


def default_run_config() -> RunConfig:
    """The stock configuration used when no file is given."""
    return resolve_config()
