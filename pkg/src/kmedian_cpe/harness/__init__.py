"""Configurable experiment sweeps with CSV and plot-data output."""

from .config import DecayAxis, Experiment, ExperimentConfig, dump_config, load_config, parse_config, preset
from .experiments import (SweepResult, linearity_r2, min_separation_reached, run,
                          run_compression_sweep, run_decay_sweep, run_separation_sweep,
                          run_single, run_snr_sweep, trial_seed)
from .records import (CSV_FIELDS, TrialRecord, emit_csv, emit_plotdata, parse_csv, read_csv,
                      read_plotdata, records_to_csv)

__all__ = [
    "CSV_FIELDS", "DecayAxis", "Experiment", "ExperimentConfig", "SweepResult", "TrialRecord",
    "dump_config", "emit_csv", "emit_plotdata", "linearity_r2", "load_config",
    "min_separation_reached", "parse_config", "parse_csv", "preset", "read_csv",
    "read_plotdata", "records_to_csv", "run", "run_compression_sweep", "run_decay_sweep",
    "run_separation_sweep", "run_single", "run_snr_sweep", "trial_seed",
]
