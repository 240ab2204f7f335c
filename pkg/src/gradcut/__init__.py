"""gradcut: recovery of gradient-sparse signals on graphs.

Piecewise-constant signals are recovered from noisy linear measurements by
descending a least-squares objective with an l0 penalty on the discrete
gradient. Each proximal step is solved by alpha-expansion graph cuts over a
label grid, and the penalty decays geometrically along the path, which
doubles as the regularization path for model selection.
"""

__version__ = "0.1.0"

from .expansion import EdgeCost, alpha_expansion, build_delta_grid, build_label_grid
from .experiments import (
    ExperimentSpec,
    RecoveryResult,
    ResultRow,
    recover_cell,
    run_experiment,
)
from .graphs import (
    GraphTopology,
    Partition,
    gradient,
    gradient_support_size,
    induced_partition,
    lattice_graph,
    line_graph,
)
from .isometry import (
    CripReport,
    l1_l2_norm_bound_check,
    probe_crip,
    sample_gradient_sparse,
)
from .maxflow import CutResult, FlowNetwork, min_cut
from .operators import SamplingLaw, fourier_weighted_design, gaussian_design
from .signals import (
    head_phantom,
    load_phantom,
    make_spike_signal,
    make_wave_signal,
    two_region_phantom,
    write_phantom,
)
from .solver import RegularizationPath, SolverConfig, path_to_csv, solve_path
from .tv import TvConfig, solve_tv, tv_lambda_grid

__all__ = [
    "GraphTopology",
    "Partition",
    "line_graph",
    "lattice_graph",
    "gradient",
    "gradient_support_size",
    "induced_partition",
    "FlowNetwork",
    "CutResult",
    "min_cut",
    "EdgeCost",
    "alpha_expansion",
    "build_label_grid",
    "build_delta_grid",
    "SolverConfig",
    "RegularizationPath",
    "solve_path",
    "path_to_csv",
    "TvConfig",
    "solve_tv",
    "tv_lambda_grid",
    "gaussian_design",
    "fourier_weighted_design",
    "SamplingLaw",
    "sample_gradient_sparse",
    "probe_crip",
    "CripReport",
    "l1_l2_norm_bound_check",
    "make_spike_signal",
    "make_wave_signal",
    "load_phantom",
    "write_phantom",
    "two_region_phantom",
    "head_phantom",
    "ExperimentSpec",
    "ResultRow",
    "RecoveryResult",
    "run_experiment",
    "recover_cell",
    "__version__",
]
