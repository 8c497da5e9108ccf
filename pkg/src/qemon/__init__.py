"""Monte Carlo simulator and analysis tools for a continuously monitored,
thermally coupled two-level system with a slowly modulated level splitting.

The package is organised around a per-step measurement pipeline:

* :mod:`qemon.model` -- physical parameters (drive, bath, readout) and the
  jump rates derived from them.
* :mod:`qemon.engine` -- ground-truth stochastic jump trajectories and the
  deterministic occupation (rate) equation.
* :mod:`qemon.measurement` -- the Gaussian energy-readout channel, per-step
  jump classification and the exact two-point-measurement distribution.
* :mod:`qemon.reconstruct` -- rebuilding the drive frequency from the
  measurement record (plain and jump-averaged update rules).
* :mod:`qemon.thermo` -- heat/work bookkeeping, trajectory entropy
  production and the fluctuation-theorem estimator.
* :mod:`qemon.ensemble` -- deterministic ensemble orchestration.
* :mod:`qemon.cli` -- the ``qemon`` command line front end.
"""

from .model import (
    BathParams,
    ConfigError,
    DriveProtocol,
    MeasurementModel,
    RunConfig,
    SimConfig,
    State,
    default_run_config,
    load_config,
    resolve_config,
)
from .engine import (
    OccupationTable,
    StepRecord,
    TrueTrajectory,
    integrate_occupation,
    run_trajectory,
    step_trajectory,
)
from .measurement import (
    DiscreteEnergyDistribution,
    JumpLabel,
    MeasurementRecord,
    MeasurementRecords,
    classify,
    measure_trajectory,
    readout,
    smeared_density,
    two_point_distribution,
)
from .reconstruct import (
    MeasuredTrajectory,
    Rule,
    reconstruct_track,
    step_corrected,
    step_naive,
)
from .thermo import (
    FtEstimate,
    ThermoLedger,
    accumulate_ledger,
    entropy_exact,
    entropy_measured,
    ft_estimator,
)
from .ensemble import EnsembleResult, run_ensemble, run_one, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BathParams",
    "ConfigError",
    "DiscreteEnergyDistribution",
    "DriveProtocol",
    "EnsembleResult",
    "FtEstimate",
    "JumpLabel",
    "MeasuredTrajectory",
    "MeasurementModel",
    "MeasurementRecord",
    "MeasurementRecords",
    "OccupationTable",
    "Rule",
    "RunConfig",
    "SimConfig",
    "State",
    "StepRecord",
    "ThermoLedger",
    "TrueTrajectory",
    "accumulate_ledger",
    "classify",
    "default_run_config",
    "entropy_exact",
    "entropy_measured",
    "ft_estimator",
    "integrate_occupation",
    "load_config",
    "measure_trajectory",
    "readout",
    "reconstruct_track",
    "resolve_config",
    "run_ensemble",
    "run_one",
    "run_sweep",
    "run_trajectory",
    "smeared_density",
    "step_corrected",
    "step_naive",
    "step_trajectory",
    "two_point_distribution",
]
