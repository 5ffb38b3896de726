"""Finite element Monte Carlo solver for the stochastic Allen-Cahn equation
with gradient-type noise on the unit square."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DivergenceError,
    EvaluationError,
    GeometryError,
    InvalidArgument,
    NonconvergenceError,
    SolverError,
    StochACError,
    UndefinedOrderError,
)
from .mesh import Mesh, generate_uniform  # noqa: E402
from .vector_field import VectorField  # noqa: E402
from .assembly import SystemMatrices, assemble_system, l2_project  # noqa: E402
from .noise import BrownianPath, generate_path, macro_increments  # noqa: E402
from .stepper import (  # noqa: E402
    Convection,
    Nonlinearity,
    SchemeConfig,
    SolverConfig,
    StepWorkspace,
    run_trajectory,
)
from .montecarlo import EnsembleConfig, run_ensemble, strong_error, convergence_orders  # noqa: E402
from .observables import energy, level_set, interface_radius, l2_norm, h1_semi  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError", "DivergenceError", "EvaluationError", "GeometryError", "InvalidArgument",
    "NonconvergenceError", "SolverError", "StochACError", "UndefinedOrderError",
    "Mesh", "generate_uniform", "VectorField", "SystemMatrices", "assemble_system", "l2_project",
    "BrownianPath", "generate_path", "macro_increments",
    "Convection", "Nonlinearity", "SchemeConfig", "SolverConfig", "StepWorkspace", "run_trajectory",
    "EnsembleConfig", "run_ensemble", "strong_error", "convergence_orders",
    "energy", "level_set", "interface_radius", "l2_norm", "h1_semi",
]
