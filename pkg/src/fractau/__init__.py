"""Fast all-at-once solvers for time-space fractional diffusion equations.

The package discretizes a Caputo-in-time, Riesz-in-space fractional
diffusion problem into one block-structured linear system over all time
levels, then solves it with restarted GMRES under a sine-transform-
diagonalizable preconditioner built from a tau (Toeplitz minus Hankel)
approximation of the spatial operator.  A single-sided and a two-sided
variant of the preconditioner are provided, together with matrix-free
operators, a dense verification oracle, and a benchmark/sweep CLI.
"""

from .weights import (
    ProblemSpec,
    PropertyReport,
    SpatialScheme,
    SpatialWeights,
    TemporalWeights,
    direction_weights,
    l1_weights,
    spatial_weights,
    verify_weight_properties,
)
from .operators import (
    AllAtOnceOperator,
    SpatialOperator,
    TemporalOperator,
    apply_A,
    apply_B,
    apply_T,
    assemble_rhs,
)
from .preconditioner import (
    ETA_DEFAULT,
    SineTransformPlan,
    TauPreconditioner,
    block_lower_toeplitz_solve,
    build_preconditioner,
    dst,
    solve_shifted_blocks,
    tau_eigenvalues,
    tau_first_column,
)
from .gmres import (
    SolveReport,
    SolverConfig,
    gmres_solve,
    solve_os,
    solve_ts,
    solve_unpreconditioned,
)
from .experiment import (
    CSV_HEADER,
    ExperimentConfig,
    RunRecord,
    benchmark_spec,
    example_2d_exact,
    example_2d_forcing,
    load_config,
    parse_config_text,
    render_table,
    run_sweep,
    solve_once,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ProblemSpec",
    "PropertyReport",
    "SpatialScheme",
    "SpatialWeights",
    "TemporalWeights",
    "direction_weights",
    "l1_weights",
    "spatial_weights",
    "verify_weight_properties",
    "AllAtOnceOperator",
    "SpatialOperator",
    "TemporalOperator",
    "apply_A",
    "apply_B",
    "apply_T",
    "assemble_rhs",
    "ETA_DEFAULT",
    "SineTransformPlan",
    "TauPreconditioner",
    "block_lower_toeplitz_solve",
    "build_preconditioner",
    "dst",
    "solve_shifted_blocks",
    "tau_eigenvalues",
    "tau_first_column",
    "SolveReport",
    "SolverConfig",
    "gmres_solve",
    "solve_os",
    "solve_ts",
    "solve_unpreconditioned",
    "CSV_HEADER",
    "ExperimentConfig",
    "RunRecord",
    "benchmark_spec",
    "example_2d_exact",
    "example_2d_forcing",
    "load_config",
    "parse_config_text",
    "render_table",
    "run_sweep",
    "solve_once",
    "write_csv",
    "__version__",
]
