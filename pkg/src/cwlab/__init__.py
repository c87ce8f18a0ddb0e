"""cwlab: a numerical laboratory for censored and ordinary heat-bath dynamics
on the mean-field ferromagnet.

Exact birth-and-death analysis of the magnetization chain, an n-spin Monte
Carlo simulator, a small brute-force oracle over the full configuration
space, and a deterministic experiment runner.
"""

__version__ = "0.1.0"

from .magchain import (
    BirthDeathKernel,
    ConductanceProfile,
    MagLattice,
    ProbVector,
    SpectralResult,
    TVProfile,
    build_kernel,
    conductance_profile,
    evolve,
    fold_law,
    moments,
    spectral_gap,
    stationary,
    stationary_from_conductances,
    t_mix,
    tv_all_starts,
    tv_profile,
)
from .experiments import (
    ExperimentSpec,
    figure_data,
    run_spec,
    run_to_files,
    spec_from_dict,
    spec_to_dict,
)
from .model import CutoffSchedule, ModelParams, cutoff_schedule, p_minus, p_plus, solve_zeta
from .simulate import (
    DriftBins,
    PairRunResult,
    RecordSpec,
    SpinConfig,
    TrajectoryRecord,
    TwoCoordStats,
    UpdateDraw,
    censored_pair_probe,
    coalescence_drift_stats,
    ensemble_magnetizations,
    hitting_time,
    mag_coupling_coalescence,
    monotone_pair_run,
    monotone_pair_step,
    replica_rng,
    run,
    step,
    two_coord_experiment,
)

__all__ = [
    "BirthDeathKernel",
    "ConductanceProfile",
    "CutoffSchedule",
    "DriftBins",
    "ExperimentSpec",
    "MagLattice",
    "ModelParams",
    "PairRunResult",
    "ProbVector",
    "RecordSpec",
    "SpectralResult",
    "SpinConfig",
    "TVProfile",
    "TrajectoryRecord",
    "TwoCoordStats",
    "UpdateDraw",
    "build_kernel",
    "censored_pair_probe",
    "coalescence_drift_stats",
    "conductance_profile",
    "cutoff_schedule",
    "ensemble_magnetizations",
    "evolve",
    "figure_data",
    "fold_law",
    "hitting_time",
    "mag_coupling_coalescence",
    "moments",
    "monotone_pair_run",
    "monotone_pair_step",
    "p_minus",
    "p_plus",
    "replica_rng",
    "run",
    "run_spec",
    "run_to_files",
    "solve_zeta",
    "spec_from_dict",
    "spec_to_dict",
    "spectral_gap",
    "stationary",
    "stationary_from_conductances",
    "t_mix",
    "tv_all_starts",
    "tv_profile",
    "two_coord_experiment",
    "__version__",
]
