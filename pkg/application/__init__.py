from .mesh_generator import MeshGenSpec, MeshMode, generate_mesh, face_statistics
from .problems import ManufacturedProblem, ProblemKind, manufactured_problem
from .pipeline import MappingMode, SolveResult, solve_on_mesh
from .convergence import ConvergenceRecord, ConvergenceStudy, run_convergence
from .analytics_engine import AnalyticsEngine

__all__ = [
    "MeshGenSpec",
    "MeshMode",
    "generate_mesh",
    "face_statistics",
    "ManufacturedProblem",
    "ProblemKind",
    "manufactured_problem",
    "MappingMode",
    "SolveResult",
    "solve_on_mesh",
    "ConvergenceRecord",
    "ConvergenceStudy",
    "run_convergence",
    "AnalyticsEngine",
]
