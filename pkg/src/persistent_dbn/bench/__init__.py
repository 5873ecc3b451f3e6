"""Random model generation, forward sampling and benchmark harness."""

from .generators import ACCURACY, POLYTREE, SPEED, TREE, Sample, forward_sample, gen_random_prototype, sample_trajectories
from .plotdata import aggregate, emit_plot_data, mean_sd, read_rows
from .runner import ALGORITHMS, COLUMNS, ExperimentSpec, run_benchmark, run_seeds, write_csv

__all__ = [
    "ACCURACY",
    "ALGORITHMS",
    "COLUMNS",
    "ExperimentSpec",
    "POLYTREE",
    "SPEED",
    "Sample",
    "TREE",
    "aggregate",
    "emit_plot_data",
    "forward_sample",
    "gen_random_prototype",
    "mean_sd",
    "read_rows",
    "run_benchmark",
    "run_seeds",
    "sample_trajectories",
    "write_csv",
]
