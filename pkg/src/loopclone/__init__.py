"""loopclone: clone a static feedback law from noisy closed-loop logs.

The package identifies a sparse controller u = kappa_hat(y) from logged
(y, u) data by solving two linear programs, estimates the noise level and
the relevant Lipschitz constants from the same data, and turns the results
into closed-form stability certificates that simulation can stress-test.
"""
from .core import (
    ControllerInterface,
    Dataset,
    FunctionController,
    NoiseModel,
    NoiseSequences,
    PlantInterface,
    validate_dataset,
)
from .basis import (
    BasisDiagnosis,
    BasisDictionary,
    diagnose_basis,
    evaluate_row,
    gaussian_from_data,
    polynomial_dictionary,
)
from .estimation import (
    EstimationReport,
    NoInformativePairsError,
    RhoTooSmallError,
    ScatterData,
    controller_scatter,
    estimate_gamma_f,
    estimate_gamma_gy,
    estimate_lipschitz,
    estimate_noise_bound,
)
from .lp import (
    LinearProgram,
    LpSolution,
    SolverFailure,
    chebyshev_residual,
    reformulate_l1_min,
    solve,
)
from .learner import (
    AlphaSelection,
    EmptySupportError,
    InfeasibleFitError,
    LearnConfig,
    LearnedController,
    LearningError,
    ResidualSummary,
    build_regressor,
    extract_support,
    learn_controller,
    min_feasible_gamma_delta,
    select_alpha,
    select_gamma_delta_prime,
    stage1_sparsify,
    stage2_tighten,
)
from .stability import (
    CertificateError,
    StabilityCertificate,
    baseline_bound,
    certify,
    deviation_bound,
    learned_loop_bound,
)
from .simulation import (
    DeviationSeries,
    SimulationError,
    Trajectory,
    benchmark_plant,
    deviation_run,
    generate_example_dataset,
    grid_error_lipschitz,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # core
    "Dataset", "validate_dataset", "PlantInterface", "ControllerInterface",
    "FunctionController", "NoiseModel", "NoiseSequences",
    # basis
    "BasisDictionary", "BasisDiagnosis", "evaluate_row",
    "gaussian_from_data", "polynomial_dictionary", "diagnose_basis",
    # estimation
    "ScatterData", "EstimationReport", "RhoTooSmallError",
    "NoInformativePairsError", "estimate_noise_bound", "estimate_lipschitz",
    "estimate_gamma_f", "estimate_gamma_gy", "controller_scatter",
    # lp
    "LinearProgram", "LpSolution", "SolverFailure", "solve",
    "reformulate_l1_min", "chebyshev_residual",
    # learner
    "LearnConfig", "LearnedController", "LearningError",
    "InfeasibleFitError", "EmptySupportError", "ResidualSummary",
    "AlphaSelection", "build_regressor", "select_alpha",
    "select_gamma_delta_prime", "stage1_sparsify", "extract_support",
    "stage2_tighten", "min_feasible_gamma_delta", "learn_controller",
    # stability
    "StabilityCertificate", "CertificateError", "baseline_bound",
    "certify", "learned_loop_bound", "deviation_bound",
    # simulation
    "Trajectory", "DeviationSeries", "SimulationError", "simulate",
    "deviation_run", "grid_error_lipschitz", "generate_example_dataset",
    "benchmark_plant",
]
