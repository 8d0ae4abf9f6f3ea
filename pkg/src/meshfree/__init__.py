"""Mesh-free strong-form PDE solver: WLS, PHS RBF-FD and a hybrid of both."""
from .approximation import (
    Engine,
    EngineAssignment,
    RBFConfig,
    ShapeStore,
    WLSConfig,
    assign_engines,
    compute_shapes,
)
from .assembly import SparseSystem, assemble_cauchy_navier, assemble_poisson
from .domain import Box3D, Disc2D, NodeSet, SpacingFunction, discretize
from .estimator import MeshlessDifferentiator
from .exceptions import (
    AssemblyError,
    ConfigError,
    DegenerateStencil,
    DiscretizationError,
    InsufficientNodesError,
    MeshfreeError,
    SingularSystem,
)
from .solver import SolveReport, SolverConfig, solve
from .stencil import find_stencils, stencil_size

__version__ = "0.1.0"

__all__ = [
    "Engine", "EngineAssignment", "RBFConfig", "ShapeStore", "WLSConfig", "assign_engines", "compute_shapes",
    "SparseSystem", "assemble_cauchy_navier", "assemble_poisson",
    "Box3D", "Disc2D", "NodeSet", "SpacingFunction", "discretize",
    "MeshlessDifferentiator",
    "AssemblyError", "ConfigError", "DegenerateStencil", "DiscretizationError", "InsufficientNodesError",
    "MeshfreeError", "SingularSystem",
    "SolveReport", "SolverConfig", "solve", "find_stencils", "stencil_size",
]
