"""Experiment runner, UQ compression and command-line interface."""
from .config import ExperimentConfig, load_config, parse_config, preset
from .experiment import comparison_sets, generate_candidates, run_experiment, tensor_grid
from .plotdata import emit_plot_data, plot_rows
from .uq import UqDataset, UqResult, synthetic_uq, uq_compress, uq_sweep
