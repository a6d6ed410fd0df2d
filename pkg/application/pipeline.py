"""
One solve on one mesh: interfaces -> mappings -> space -> assembly -> Dirichlet -> CG -> error.

Shared by `hybridfem solve` and the convergence runner.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from engine.assembly import SparseSystem, WeakForm, apply_dirichlet, assemble
from engine.function_spaces import DofSystem, SpaceKind, build_space
from engine.geometry import MappingSet, build_mappings
from engine.mesh import HybridMesh, build_interfaces
from engine.solver import solve_cg
from infrastructure.config import QuadratureConfig, SolverConfig

from .analytics_engine import AnalyticsEngine

logger = logging.getLogger(__name__)


class MappingMode(Enum):
    QUADRATIC = "quadratic"
    AFFINE = "affine"  # true-midpoint tet mappings, constraints unchanged

    @staticmethod
    def parse(name: str) -> "MappingMode":
        try:
            return MappingMode(name.strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in MappingMode)
            raise ValueError(f"unknown mapping mode '{name}' (valid: {valid})") from None


@dataclass(frozen=True, eq=False)
class SolveResult:
    space_kind: SpaceKind
    mapping_mode: MappingMode
    mesh: HybridMesh
    mappings: MappingSet
    dofs: DofSystem
    system: SparseSystem      # assembled, before Dirichlet elimination
    solution: np.ndarray      # free-DOF vector (component-blocked for vectors)
    iterations: int
    residual: float
    assembly_s: float
    solve_s: float
    energy: float             # a(u_h, u_h)
    l2_rel_error: Optional[float] = None

    @property
    def dof_count(self) -> int:
        return self.dofs.n_free

    def summary(self) -> str:
        err = f"{self.l2_rel_error:.6e}" if self.l2_rel_error is not None else "n/a"
        return (
            f"space={self.space_kind.value} dofs={self.dof_count} cg_iterations={self.iterations} "
            f"l2_rel_error={err} assembly_s={self.assembly_s:.3f} solve_s={self.solve_s:.3f}"
        )


def solve_on_mesh(
    mesh: HybridMesh,
    form: WeakForm,
    space_kind: SpaceKind,
    exact: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    mapping_mode: MappingMode = MappingMode.QUADRATIC,
    quadrature: Optional[QuadratureConfig] = None,
    solver: Optional[SolverConfig] = None,
    threads: int = 1,
    strategy: str = "reduce",
) -> SolveResult:
    """
    Raises:
        HybridFemError subclasses from any stage (NoConvergence from CG).
    """
    quadrature = quadrature or QuadratureConfig()
    solver = solver or SolverConfig()

    interfaces = build_interfaces(mesh)
    mappings = build_mappings(
        mesh, interfaces, affine_tets=mapping_mode is MappingMode.AFFINE, degrees=quadrature.stiffness
    )
    dofs = build_space(mesh, mappings, interfaces, space_kind)

    t0 = time.perf_counter()
    system = assemble(
        mesh, mappings, dofs, form,
        quad_degree=quadrature.stiffness,
        strategy=strategy,
        threads=threads,
        source_extra=quadrature.source_extra,
    )
    constrained = apply_dirichlet(system, dofs, form.dirichlet_value)
    assembly_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    cg = solve_cg(
        constrained,
        rel_residual_target=solver.rel_residual_target,
        max_iters=solver.max_iters,
        preconditioner=solver.preconditioner,
    )
    solve_s = time.perf_counter() - t0

    error = None
    if exact is not None:
        error = AnalyticsEngine.l2_relative_error(mesh, mappings, dofs, cg.x, exact, quadrature.error)

    result = SolveResult(
        space_kind=space_kind,
        mapping_mode=mapping_mode,
        mesh=mesh,
        mappings=mappings,
        dofs=dofs,
        system=system,
        solution=cg.x,
        iterations=cg.iterations,
        residual=cg.residual,
        assembly_s=assembly_s,
        solve_s=solve_s,
        energy=system.energy(cg.x),
        l2_rel_error=error,
    )
    logger.info(result.summary())
    return result
