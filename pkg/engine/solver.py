"""
Conjugate gradient solver for the assembled SPD systems.

Plain CG by default, optional Jacobi (diagonal) preconditioning. Stops when
||b - A x|| <= target * ||b||.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.sparse import spmatrix

from .assembly import SparseSystem
from .errors import NoConvergence

logger = logging.getLogger(__name__)

PRECONDITIONERS = ("none", "jacobi")


@dataclass(frozen=True)
class CgResult:
    x: np.ndarray
    iterations: int
    residual: float  # relative: ||b - A x|| / ||b||


def solve_cg(
    system: Union[SparseSystem, spmatrix, np.ndarray],
    rhs: Optional[np.ndarray] = None,
    rel_residual_target: float = 1e-10,
    max_iters: Optional[int] = None,
    preconditioner: str = "none",
    x0: Optional[np.ndarray] = None,
) -> CgResult:
    """
    Solve A x = b by (preconditioned) conjugate gradients.

    `system` is either a SparseSystem or a matrix together with `rhs`.
    max_iters defaults to 10 * n.

    Raises:
        NoConvergence: target not reached within max_iters.
    """
    if isinstance(system, SparseSystem):
        A, b = system.matrix, system.rhs
    else:
        if rhs is None:
            raise ValueError("rhs is required when passing a bare matrix")
        A, b = system, np.asarray(rhs, dtype=float)
    if preconditioner not in PRECONDITIONERS:
        raise ValueError(f"unknown preconditioner '{preconditioner}' (valid: {', '.join(PRECONDITIONERS)})")

    n = b.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"matrix shape {A.shape} does not match rhs length {n}")
    if max_iters is None:
        max_iters = max(10 * n, 10)

    b_norm = float(np.linalg.norm(b))
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if b_norm == 0.0:
        return CgResult(np.zeros(n), 0, 0.0)

    if preconditioner == "jacobi":
        diag = np.asarray(A.diagonal(), dtype=float)
        inv_diag = np.where(diag != 0.0, 1.0 / np.where(diag != 0.0, diag, 1.0), 1.0)
    else:
        inv_diag = None

    tol = rel_residual_target * b_norm
    it = 0
    while True:
        r = b - A @ x
        true_res = float(np.linalg.norm(r))
        if true_res <= tol or it >= max_iters:
            break
        # (re)start from the true residual; the recursive one drifts
        z = r * inv_diag if inv_diag is not None else r
        p = z.copy()
        rz = float(r @ z)
        res = true_res
        while res > tol and it < max_iters:
            Ap = A @ p
            alpha = rz / float(p @ Ap)
            x += alpha * p
            r -= alpha * Ap
            res = math.sqrt(float(r @ r))
            it += 1
            if res <= tol:
                break
            z = r * inv_diag if inv_diag is not None else r
            rz_new = float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new

    if true_res > tol:
        raise NoConvergence(it, true_res / b_norm, rel_residual_target)
    logger.info("CG converged in %d iterations (relative residual %.2e)", it, true_res / b_norm)
    return CgResult(x, it, true_res / b_norm)
