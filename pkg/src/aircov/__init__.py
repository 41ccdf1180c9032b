"""Covert over-the-air computation: aggregation design under a warden.

Layout: model holds the physical scenario, covertness the detection-side
analysis, conic a self-contained cone-program solver, dcp the convex
subproblem construction, solver the penalized descent, baselines the
comparison schemes, harness the Monte-Carlo sweeps and CSV artifacts.
"""

from .baselines import Scheme, brute_force_scalar, fixed_an_matrix, \
    run_baseline
from .covertness import CovertBounds, covert_feasible, covert_roots, \
    dep_pinsker_bound, detection_report, exact_min_dep, kld
from .harness import ExperimentSpec, TrialRecord, db2pow, pow2db, preset, \
    read_csv, run_experiment, summarize, write_csv
from .model import ChannelSet, Design, SystemConfig, desk_config, \
    mmse_receiver, mse, sample_channels, trial_rng, willie_variances
from .solver import SolveReport, initialize, run

__version__ = "0.1.0"

__all__ = [
    "ChannelSet", "CovertBounds", "Design", "ExperimentSpec", "Scheme",
    "SolveReport", "SystemConfig", "TrialRecord", "brute_force_scalar",
    "covert_feasible", "covert_roots", "db2pow", "dep_pinsker_bound",
    "desk_config", "detection_report", "exact_min_dep", "fixed_an_matrix",
    "initialize", "kld", "mmse_receiver", "mse", "pow2db", "preset",
    "read_csv", "run", "run_baseline", "run_experiment", "sample_channels",
    "summarize", "trial_rng", "willie_variances", "write_csv",
    "__version__",
]
