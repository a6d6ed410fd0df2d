from .config import QuadratureConfig, SolverConfig, ElasticityConfig, StudyConfig, assembly_threads
from .logger import LoggingConfig, configure_logging

__all__ = [
    "QuadratureConfig",
    "SolverConfig",
    "ElasticityConfig",
    "StudyConfig",
    "assembly_threads",
    "LoggingConfig",
    "configure_logging",
]
