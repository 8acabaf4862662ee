"""Identification of linear continuous-time systems with symmetric state
matrices.

The discrete-time model triple (A, B, C) is estimated with A constrained to
the symmetric positive definite matrices (or their positive-diagonal
subset) by Riemannian conjugate gradient on the prediction error, starting
from a repaired subspace estimate; the continuous-time (F, G, C) is then
recovered exactly through the matrix logarithm.
"""

from ._backend import HAVE_COMPILED_KERNELS, get_kernels
from .benchmark import (
    ContinuousSystem,
    RcNetworkSpec,
    UndirectedGraph,
    build_system,
    discretize,
    generate_dataset,
    incidence,
    random_benchmark_system,
    watts_strogatz,
)
from .errors import (
    HorizontalSolveError,
    NormUndefinedError,
    NotPositiveDefiniteError,
    SubspaceOrderError,
    SymidError,
)
from .evaluation import (
    EvalReport,
    bode_data,
    evaluate_estimate,
    h2_norm,
    h2_relative,
    hinf_norm,
    hinf_relative,
    recover_continuous,
    stability_report,
)
from .manifold import (
    OrthogonalMatrix,
    SystemTriple,
    TangentTriple,
    TripleKind,
    egrad_to_rgrad,
    exp_map,
    group_action,
    metric,
    parallel_transport,
    tangent_action,
)
from .model import (
    GradientTriple,
    IODataset,
    euclid_gradient,
    load_dataset,
    objective,
    output_dderiv,
    save_dataset,
    simulate,
)
from .optimize import (
    ArmijoConfig,
    OptConfig,
    OptTrace,
    run,
    run_gn_baseline,
)
from .quotient import (
    SkewSolveReport,
    build_beta,
    horizontal_project,
    horizontal_residual,
    solve_skew,
    vertical_vector,
)
from .subspace import (
    SubspaceConfig,
    initial_point,
    repair_diag,
    repair_spd,
    subspace_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "HAVE_COMPILED_KERNELS",
    "get_kernels",
    "ContinuousSystem",
    "RcNetworkSpec",
    "UndirectedGraph",
    "build_system",
    "discretize",
    "generate_dataset",
    "incidence",
    "random_benchmark_system",
    "watts_strogatz",
    "SymidError",
    "NotPositiveDefiniteError",
    "HorizontalSolveError",
    "SubspaceOrderError",
    "NormUndefinedError",
    "EvalReport",
    "bode_data",
    "evaluate_estimate",
    "h2_norm",
    "h2_relative",
    "hinf_norm",
    "hinf_relative",
    "recover_continuous",
    "stability_report",
    "OrthogonalMatrix",
    "SystemTriple",
    "TangentTriple",
    "TripleKind",
    "egrad_to_rgrad",
    "exp_map",
    "group_action",
    "metric",
    "parallel_transport",
    "tangent_action",
    "GradientTriple",
    "IODataset",
    "euclid_gradient",
    "load_dataset",
    "objective",
    "output_dderiv",
    "save_dataset",
    "simulate",
    "ArmijoConfig",
    "OptConfig",
    "OptTrace",
    "run",
    "run_gn_baseline",
    "SkewSolveReport",
    "build_beta",
    "horizontal_project",
    "horizontal_residual",
    "solve_skew",
    "vertical_vector",
    "SubspaceConfig",
    "initial_point",
    "repair_diag",
    "repair_spd",
    "subspace_estimate",
]
