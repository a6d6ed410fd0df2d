from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from engine.reference_elements import MAX_DEGREE, MIN_DEGREE, CellKind

logger = logging.getLogger(__name__)

THREADS_ENV = "HYBRIDFEM_THREADS"
MESH_MODES = ("hybrid", "all-hex", "all-tet")


@dataclass(frozen=True)
class QuadratureConfig:
    """
    Quadrature exactness degrees.

    Note:
    - hex_degree is per axis; 5 gives the 3x3x3 Gauss rule.
    - source_extra is added for load vectors, error_extra for L2 errors
      (tets capped at the highest available rule).
    """
    hex_degree: int = 5
    tet_degree: int = 4
    source_extra: int = 1
    error_extra: int = 2

    def __post_init__(self) -> None:
        if self.hex_degree < MIN_DEGREE[CellKind.HEX] or self.hex_degree > MAX_DEGREE[CellKind.HEX]:
            raise ValueError(f"hex_degree must be in [{MIN_DEGREE[CellKind.HEX]}, {MAX_DEGREE[CellKind.HEX]}]")
        if self.tet_degree < MIN_DEGREE[CellKind.TET] or self.tet_degree > MAX_DEGREE[CellKind.TET]:
            raise ValueError(f"tet_degree must be in [{MIN_DEGREE[CellKind.TET]}, {MAX_DEGREE[CellKind.TET]}]")
        if self.source_extra < 0 or self.error_extra < 0:
            raise ValueError("extra degrees must be non-negative")

    @property
    def stiffness(self) -> Dict[CellKind, int]:
        return {CellKind.HEX: self.hex_degree, CellKind.TET: self.tet_degree}

    @property
    def error(self) -> Dict[CellKind, int]:
        return {
            kind: min(deg + self.error_extra, MAX_DEGREE[kind])
            for kind, deg in self.stiffness.items()
        }

    def raised(self, by: int) -> "QuadratureConfig":
        """Same config with stiffness degrees raised (quadrature-insensitivity checks)."""
        return QuadratureConfig(
            hex_degree=min(self.hex_degree + by, MAX_DEGREE[CellKind.HEX]),
            tet_degree=min(self.tet_degree + by, MAX_DEGREE[CellKind.TET]),
            source_extra=self.source_extra,
            error_extra=self.error_extra,
        )


@dataclass(frozen=True)
class SolverConfig:
    rel_residual_target: float = 1e-10
    max_iters: Optional[int] = None  # None -> 10 * n
    preconditioner: str = "none"     # 'none' | 'jacobi'

    def __post_init__(self) -> None:
        if not 0.0 < self.rel_residual_target < 1.0:
            raise ValueError("rel_residual_target must be in (0, 1)")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.preconditioner not in ("none", "jacobi"):
            raise ValueError(f"unknown preconditioner '{self.preconditioner}' (valid: none, jacobi)")


@dataclass(frozen=True)
class ElasticityConfig:
    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self) -> None:
        if self.lam <= 0.0 or self.mu <= 0.0:
            raise ValueError("Lame coefficients must be positive")


@dataclass(frozen=True)
class StudyConfig:
    """
    StudyConfig controls one refinement study.

    Note:
    - spaces and problem are stored by name so the config serialises as-is
      into the JSON sidecar.
    - P1 runs always use all-tet meshes and Q1 runs all-hex meshes;
      mesh_mode applies to the other spaces.
    """
    name: str
    problem: str
    spaces: Tuple[str, ...]
    n_values: Tuple[int, ...]
    distortion: float
    tet_fraction: float
    seed: int
    mapping_mode: str = "quadratic"  # 'quadratic' | 'affine'
    mesh_mode: str = "hybrid"  # 'hybrid' | 'all-hex' | 'all-tet'

    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    elasticity: ElasticityConfig = field(default_factory=ElasticityConfig)

    def __post_init__(self) -> None:
        if not self.spaces:
            raise ValueError("at least one space is required")
        if not self.n_values or min(self.n_values) < 2:
            raise ValueError("n_values must be non-empty and >= 2")
        if not 0.0 <= self.distortion <= 0.3:
            raise ValueError("distortion must be in [0, 0.3]")
        if not 0.0 <= self.tet_fraction <= 1.0:
            raise ValueError("tet_fraction must be in [0, 1]")
        if self.mapping_mode not in ("quadratic", "affine"):
            raise ValueError(f"unknown mapping mode '{self.mapping_mode}' (valid: quadratic, affine)")
        if self.mesh_mode not in MESH_MODES:
            raise ValueError(f"unknown mesh mode '{self.mesh_mode}' (valid: {', '.join(MESH_MODES)})")

    @staticmethod
    def POISSON() -> "StudyConfig":
        return StudyConfig(
            name="POISSON",
            problem="poisson-sin",
            spaces=("q1", "hyb1", "hyb12", "p1"),
            n_values=(4, 8, 12, 16),
            distortion=0.10,
            tet_fraction=0.20,
            seed=7,
        )

    @staticmethod
    def ELASTICITY() -> "StudyConfig":
        return StudyConfig(
            name="ELASTICITY",
            problem="elasticity-sin",
            spaces=("hyb1", "p1"),
            n_values=(4, 8, 12, 16),
            distortion=0.10,
            tet_fraction=0.20,
            seed=7,
        )

    @staticmethod
    def ABLATION() -> "StudyConfig":
        return StudyConfig(
            name="ABLATION",
            problem="poisson-sin",
            spaces=("hyb1",),
            n_values=(4, 8, 12, 16),
            distortion=0.20,
            tet_fraction=0.20,
            seed=7,
            mapping_mode="affine",
        )

    @staticmethod
    def SMOKE() -> "StudyConfig":
        return StudyConfig(
            name="SMOKE",
            problem="poisson-sin",
            spaces=("q1", "hyb1"),
            n_values=(2, 4),
            distortion=0.10,
            tet_fraction=0.20,
            seed=7,
        )


def assembly_threads() -> int:
    """Assembly worker count from HYBRIDFEM_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        logger.warning("ignoring %s=%r (not an integer)", THREADS_ENV, raw)
        return 1
    if n < 1:
        logger.warning("ignoring %s=%r (must be >= 1)", THREADS_ENV, raw)
        return 1
    return n
