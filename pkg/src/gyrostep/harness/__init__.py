"""Scenario configs, experiment runners and the command-line front end."""

from .config import ConfigError, ScenarioConfig, SweepConfig, load_scenario, load_sweep
from .experiments import (DRIFT_COLUMNS, ENERGY_COLUMNS, SWEEP_COLUMNS, TRAJECTORY_COLUMNS,
                          DriftResult, EnergyResult, RunResult, SweepRow, check_resonance_cmd,
                          run_convergence_sweep, run_drift_experiment, run_longtime_energy,
                          run_scenario)
