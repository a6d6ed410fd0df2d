"""
Analytics engine - error norms and convergence metrics.

Calculations:
1. Relative L2 error of a discrete solution against an exact field
2. Convergence rates (pairwise and least-squares fit)
3. Comparisons between spaces at matched dof counts

All functions are pure (stateless) - take solution data as input.

Used by:
- pipeline (error of every solve)
- convergence studies (rate tables, CSV reports)
- acceptance tests
"""
import math
from typing import Callable, List, Mapping, Optional, Sequence

import numpy as np

from engine.function_spaces import DofSystem
from engine.geometry import MappingSet
from engine.mesh import HybridMesh
from engine.reference_elements import (
    MAX_DEGREE,
    P2_BASIS,
    Q1_BASIS,
    CellKind,
    _eval_grads,
    _eval_values,
    quadrature_for,
)

# stiffness defaults + 2 (tets capped at the highest rule)
DEFAULT_ERROR_DEGREE = {CellKind.HEX: 7, CellKind.TET: 6}


class AnalyticsEngine:
    """
    Pure analytics calculations.

    Design: All static methods - no state.
    """

    # ==================== Error norms ====================

    @staticmethod
    def integrate_error(
        mappings: MappingSet,
        dofs: DofSystem,
        solution: np.ndarray,
        exact: Callable[[np.ndarray], np.ndarray],
        degrees: Optional[Mapping[CellKind, int]] = None,
    ) -> tuple:
        """
        (int |u_h - u|^2, int |u|^2) by per-cell quadrature through the cell mappings.
        """
        degrees = {**DEFAULT_ERROR_DEGREE, **(degrees or {})}
        raw = dofs.raw_values(solution)
        vector = raw.ndim == 2
        err_sq = 0.0
        ref_sq = 0.0
        for kind in (CellKind.TET, CellKind.HEX):
            coeffs = mappings.block(kind)
            if coeffs.shape[0] == 0:
                continue
            map_basis = P2_BASIS if kind is CellKind.TET else Q1_BASIS
            fe_basis = dofs.tet_basis if kind is CellKind.TET else Q1_BASIS
            rule = quadrature_for(kind, min(degrees[kind], MAX_DEGREE[kind]))
            J = np.einsum("ebi,qbj->eqij", coeffs, _eval_grads(map_basis, rule.points))
            w = np.abs(np.linalg.det(J)) * rule.weights[None, :]
            X = np.einsum("qb,ebi->eqi", _eval_values(map_basis, rule.points), coeffs)
            phi = _eval_values(fe_basis, rule.points)
            cell_dofs = dofs.block(kind)
            e, q = w.shape
            u = np.asarray(exact(X.reshape(-1, 3)), dtype=float)
            if vector:
                uh = np.einsum("qb,ceb->eqc", phi, raw[:, cell_dofs])
                diff = (uh - u.reshape(e, q, 3)) ** 2
                err_sq += float(np.sum(diff.sum(axis=2) * w))
                ref_sq += float(np.sum((u.reshape(e, q, 3) ** 2).sum(axis=2) * w))
            else:
                uh = np.einsum("qb,eb->eq", phi, raw[cell_dofs])
                err_sq += float(np.sum((uh - u.reshape(e, q)) ** 2 * w))
                ref_sq += float(np.sum(u.reshape(e, q) ** 2 * w))
        return err_sq, ref_sq

    @staticmethod
    def l2_relative_error(
        mesh: HybridMesh,
        mappings: MappingSet,
        dofs: DofSystem,
        solution: np.ndarray,
        exact: Callable[[np.ndarray], np.ndarray],
        degrees: Optional[Mapping[CellKind, int]] = None,
    ) -> float:
        """
        sqrt(int |u_h - u|^2) / sqrt(int |u|^2).

        Args:
            solution: free-DOF vector (component-blocked for vector fields)
            degrees: quadrature degree per cell kind (assembly default + 2)
        """
        err_sq, ref_sq = AnalyticsEngine.integrate_error(mappings, dofs, solution, exact, degrees)
        if ref_sq <= 0.0:
            return math.sqrt(err_sq)
        return math.sqrt(err_sq / ref_sq)

    # ==================== Rates ====================

    @staticmethod
    def mesh_size(dof_count: float) -> float:
        """Effective h ~ dofs^(-1/3)."""
        return float(dof_count) ** (-1.0 / 3.0)

    @staticmethod
    def pairwise_rates(dof_counts: Sequence[int], errors: Sequence[float]) -> List[float]:
        """Rate between successive refinements: -d log(err) / d log(dofs^(1/3))."""
        rates = []
        for k in range(1, len(errors)):
            dx = math.log(dof_counts[k] ** (1.0 / 3.0)) - math.log(dof_counts[k - 1] ** (1.0 / 3.0))
            rates.append(-(math.log(errors[k]) - math.log(errors[k - 1])) / dx)
        return rates

    @staticmethod
    def fit_rate(dof_counts: Sequence[int], errors: Sequence[float], last: int = 3) -> Optional[float]:
        """
        Least-squares slope of -log(err) vs log(dofs^(1/3)) over the last `last` points.

        Returns None with fewer than 2 points.
        """
        if len(errors) < 2:
            return None
        x = np.log(np.asarray(dof_counts[-last:], dtype=float) ** (1.0 / 3.0))
        y = np.log(np.asarray(errors[-last:], dtype=float))
        slope, _ = np.polyfit(x, y, 1)
        return float(-slope)

    # ==================== Comparisons ====================

    @staticmethod
    def error_at_dofs(dof_counts: Sequence[int], errors: Sequence[float], target: float) -> float:
        """
        Error at `target` dofs by piecewise-linear log-log interpolation
        (linear extrapolation from the end segments outside the range).
        """
        x = np.log(np.asarray(dof_counts, dtype=float))
        y = np.log(np.asarray(errors, dtype=float))
        order = np.argsort(x)
        x, y = x[order], y[order]
        t = math.log(target)
        if x.size == 1:
            return float(math.exp(y[0]))
        if t <= x[0]:
            k = 0
        elif t >= x[-1]:
            k = x.size - 2
        else:
            k = int(np.searchsorted(x, t)) - 1
        slope = (y[k + 1] - y[k]) / (x[k + 1] - x[k])
        return float(math.exp(y[k] + slope * (t - x[k])))

    @staticmethod
    def matched_dof_ratio(
        dofs_a: Sequence[int], errors_a: Sequence[float],
        dofs_b: Sequence[int], errors_b: Sequence[float],
    ) -> float:
        """
        Geometric mean of error_b / error_a at matched dof counts.

        Curve b is interpolated at the dof counts of curve a that fall inside
        b's range (all of a's points when the ranges do not overlap).
        """
        lo, hi = min(dofs_b), max(dofs_b)
        targets = [d for d in dofs_a if lo <= d <= hi] or list(dofs_a)
        logs = []
        for d in targets:
            ea = AnalyticsEngine.error_at_dofs(dofs_a, errors_a, d)
            eb = AnalyticsEngine.error_at_dofs(dofs_b, errors_b, d)
            logs.append(math.log(eb / ea))
        return float(math.exp(sum(logs) / len(logs)))
