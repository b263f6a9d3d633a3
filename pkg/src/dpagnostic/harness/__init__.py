"""Experiment configuration, trial sweeps, CSV output, and the CLI."""

from .config import ExperimentConfig, SweepPoint, generate_distribution, load_config, parse_config
from .experiment import TrialRecord, exponential_search, run_experiment, run_trials
from .plot import emit_plot_script, plot_script

__all__ = [
    "ExperimentConfig", "SweepPoint", "TrialRecord", "emit_plot_script", "exponential_search",
    "generate_distribution", "load_config", "parse_config", "plot_script", "run_experiment",
    "run_trials",
]
