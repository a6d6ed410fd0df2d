"""
Reference cells, Lagrange bases and quadrature rules.

Reference tetrahedron T^: vertices s1=(0,0,0), s2=(1,0,0), s3=(0,1,0), s4=(0,0,1)
with barycentric coordinates
    l1 = 1-u-v-w, l2 = u, l3 = v, l4 = w.

Reference hexahedron Q^ = [0,1]^3, vertex numbering (single source of truth for
mesh files, face templates and VTK export):
    q1=(0,0,0) q2=(1,0,0) q3=(1,1,0) q4=(0,1,0)
    q5=(0,0,1) q6=(1,0,1) q7=(1,1,1) q8=(0,1,1)

Bases:
    P1: l_i                                   (4 nodes)
    P2: l_i (2 l_i - 1), 4 l_i l_j           (10 nodes, edge order TET_EDGES)
    Q1: products of (1-x) / x along each axis (8 nodes)

Q1 uses psi_4 = (1-u) v (1-w) and psi_8 = (1-u) v w so that psi_i(q_j) = delta_ij
and the basis sums to one.

All evaluators are vectorised: a single point (3,) gives a (n_nodes,) vector,
a batch (n, 3) gives an (n, n_nodes) array.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import roots_jacobi

from .errors import OutOfCell, UnsupportedDegree

INSIDE_TOL = 1e-12


class CellKind(Enum):
    TET = "tet"
    HEX = "hex"


class BasisOrder(Enum):
    P1 = "P1"
    P2 = "P2"
    Q1 = "Q1"


class FaceKind(Enum):
    TRI = "tri"
    QUAD = "quad"


TET_VERTICES = np.array(
    [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
)
TET_EDGES: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
# face k is opposite to local vertex k
TET_FACES: Tuple[Tuple[int, int, int], ...] = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))

HEX_VERTICES = np.array(
    [
        [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0],
    ]
)
# cyclic order, outward orientation
HEX_FACES: Tuple[Tuple[int, int, int, int], ...] = (
    (0, 3, 2, 1),
    (4, 5, 6, 7),
    (0, 1, 5, 4),
    (1, 2, 6, 5),
    (2, 3, 7, 6),
    (3, 0, 4, 7),
)
HEX_EDGES: Tuple[Tuple[int, int], ...] = (
    (0, 1), (1, 2), (2, 3), (3, 0),
    (4, 5), (5, 6), (6, 7), (7, 4),
    (0, 4), (1, 5), (2, 6), (3, 7),
)

REFERENCE_VOLUME = {CellKind.TET: 1.0 / 6.0, CellKind.HEX: 1.0}

_BARY_GRADS = np.array(
    [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
)


def _p2_nodes() -> np.ndarray:
    mids = [(TET_VERTICES[i] + TET_VERTICES[j]) / 2.0 for i, j in TET_EDGES]
    return np.vstack([TET_VERTICES, np.array(mids)])


@dataclass(frozen=True)
class ReferenceBasis:
    cell_kind: CellKind
    order_tag: BasisOrder
    node_count: int
    node_coords: np.ndarray

    def __post_init__(self) -> None:
        if self.node_coords.shape != (self.node_count, 3):
            raise ValueError(
                f"node_coords must have shape ({self.node_count}, 3), got {self.node_coords.shape}"
            )
        self.node_coords.setflags(write=False)

    def __repr__(self) -> str:
        return f"ReferenceBasis({self.order_tag.value} on {self.cell_kind.value})"


P1_BASIS = ReferenceBasis(CellKind.TET, BasisOrder.P1, 4, TET_VERTICES.copy())
P2_BASIS = ReferenceBasis(CellKind.TET, BasisOrder.P2, 10, _p2_nodes())
Q1_BASIS = ReferenceBasis(CellKind.HEX, BasisOrder.Q1, 8, HEX_VERTICES.copy())


def _as_batch(p) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(p, dtype=float)
    if arr.shape == (3,):
        return arr[None, :], True
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"reference points must have shape (3,) or (n, 3), got {arr.shape}")
    return arr, False


def barycentric(pts: np.ndarray) -> np.ndarray:
    """Barycentric coordinates (n, 4) of reference-tet points (n, 3)."""
    lam = np.empty((pts.shape[0], 4))
    lam[:, 0] = 1.0 - pts.sum(axis=1)
    lam[:, 1:] = pts
    return lam


def check_inside(cell_kind: CellKind, pts: np.ndarray, tol: float = INSIDE_TOL) -> None:
    if cell_kind is CellKind.TET:
        worst = barycentric(pts).min()
        if worst < -tol:
            raise OutOfCell(f"point outside reference tetrahedron (min barycentric {worst:.3e})")
    else:
        lo, hi = pts.min(), pts.max()
        if lo < -tol or hi > 1.0 + tol:
            raise OutOfCell(f"point outside reference hexahedron (range [{lo:.3e}, {hi:.3e}])")


def _q1_factors(pts: np.ndarray):
    # f[axis][bit] = 1-x (bit 0) or x (bit 1), shape (n,)
    f = [(1.0 - pts[:, a], pts[:, a]) for a in range(3)]
    bits = HEX_VERTICES.astype(int)
    return f, bits


def _eval_values(basis: ReferenceBasis, pts: np.ndarray) -> np.ndarray:
    if basis.order_tag is BasisOrder.Q1:
        f, bits = _q1_factors(pts)
        out = np.empty((pts.shape[0], 8))
        for k in range(8):
            a, b, c = bits[k]
            out[:, k] = f[0][a] * f[1][b] * f[2][c]
        return out

    lam = barycentric(pts)
    if basis.order_tag is BasisOrder.P1:
        return lam
    out = np.empty((pts.shape[0], 10))
    out[:, :4] = lam * (2.0 * lam - 1.0)
    for e, (i, j) in enumerate(TET_EDGES):
        out[:, 4 + e] = 4.0 * lam[:, i] * lam[:, j]
    return out


def _eval_grads(basis: ReferenceBasis, pts: np.ndarray) -> np.ndarray:
    n = pts.shape[0]
    if basis.order_tag is BasisOrder.Q1:
        f, bits = _q1_factors(pts)
        sign = (-1.0, 1.0)
        out = np.empty((n, 8, 3))
        for k in range(8):
            a, b, c = bits[k]
            out[:, k, 0] = sign[a] * f[1][b] * f[2][c]
            out[:, k, 1] = f[0][a] * sign[b] * f[2][c]
            out[:, k, 2] = f[0][a] * f[1][b] * sign[c]
        return out

    if basis.order_tag is BasisOrder.P1:
        return np.broadcast_to(_BARY_GRADS, (n, 4, 3)).copy()

    lam = barycentric(pts)
    out = np.empty((n, 10, 3))
    for i in range(4):
        out[:, i, :] = (4.0 * lam[:, i] - 1.0)[:, None] * _BARY_GRADS[i]
    for e, (i, j) in enumerate(TET_EDGES):
        out[:, 4 + e, :] = 4.0 * (
            lam[:, j][:, None] * _BARY_GRADS[i] + lam[:, i][:, None] * _BARY_GRADS[j]
        )
    return out


def eval_basis(basis: ReferenceBasis, p) -> np.ndarray:
    """
    Lagrange basis values at reference point(s).

    Raises:
        OutOfCell: if a point lies outside the closed reference cell by more than 1e-12.
    """
    pts, single = _as_batch(p)
    check_inside(basis.cell_kind, pts)
    values = _eval_values(basis, pts)
    return values[0] if single else values


def eval_grad(basis: ReferenceBasis, p) -> np.ndarray:
    """Reference gradients, shape (node_count, 3) or (n, node_count, 3)."""
    pts, single = _as_batch(p)
    check_inside(basis.cell_kind, pts)
    grads = _eval_grads(basis, pts)
    return grads[0] if single else grads


def basis_for(cell_kind: CellKind, order: BasisOrder) -> ReferenceBasis:
    table = {
        (CellKind.TET, BasisOrder.P1): P1_BASIS,
        (CellKind.TET, BasisOrder.P2): P2_BASIS,
        (CellKind.HEX, BasisOrder.Q1): Q1_BASIS,
    }
    try:
        return table[(cell_kind, order)]
    except KeyError:
        raise ValueError(f"no {order.value} basis on {cell_kind.value}") from None


# ==================== Quadrature ====================

MAX_DEGREE = {CellKind.TET: 6, CellKind.HEX: 9}
MAX_FACE_DEGREE = 9
# stiffness defaults: 3x3x3 Gauss on hexes, degree 4 on tets
DEFAULT_DEGREE = {CellKind.TET: 4, CellKind.HEX: 5}
# below these, stiffness integration is rejected (QuadratureTooWeak)
MIN_DEGREE = {CellKind.TET: 2, CellKind.HEX: 3}


@dataclass(frozen=True)
class QuadratureRule:
    cell_kind: CellKind
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self) -> None:
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError("points and weights must have the same length")
        if np.any(self.weights <= 0.0):
            raise ValueError("quadrature weights must be positive")
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class FaceQuadratureRule:
    """Rule on the reference triangle {s,t >= 0, s+t <= 1} or the unit square."""
    face_kind: FaceKind
    points: np.ndarray
    weights: np.ndarray
    degree: int


def _gauss_01(m: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def _gauss_jacobi_01(m: int, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss rule for weight (1-t)^alpha on [0, 1]."""
    x, w = roots_jacobi(m, alpha, 0.0)
    return 0.5 * (x + 1.0), w / 2.0 ** (alpha + 1.0)


def _points_per_axis(degree: int) -> int:
    return max(1, int(math.ceil((degree + 1) / 2.0)))


def _hex_rule(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = _gauss_01(_points_per_axis(degree))
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    WX, WY, WZ = np.meshgrid(w, w, w, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    return pts, (WX * WY * WZ).ravel()


def _tet_conical_rule(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    # Collapsed coordinates: x = t1, y = t2 (1-t1), z = t3 (1-t1)(1-t2)
    m = _points_per_axis(degree)
    t1, w1 = _gauss_jacobi_01(m, 2.0)
    t2, w2 = _gauss_jacobi_01(m, 1.0)
    t3, w3 = _gauss_01(m)
    A, B, C = np.meshgrid(t1, t2, t3, indexing="ij")
    WA, WB, WC = np.meshgrid(w1, w2, w3, indexing="ij")
    x = A
    y = B * (1.0 - A)
    z = C * (1.0 - A) * (1.0 - B)
    pts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    return pts, (WA * WB * WC).ravel()


def _tet_rule(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    if degree <= 1:
        return np.array([[0.25, 0.25, 0.25]]), np.array([1.0 / 6.0])
    if degree == 2:
        a, b = 0.5854101966249685, 0.1381966011250105
        pts = np.array([[b, b, b], [a, b, b], [b, a, b], [b, b, a]])
        return pts, np.full(4, 1.0 / 24.0)
    return _tet_conical_rule(degree)


@lru_cache(maxsize=None)
def quadrature_for(cell_kind: CellKind, min_exact_degree: int) -> QuadratureRule:
    """
    Quadrature rule exact for all monomials of total degree <= min_exact_degree
    (tet) or of degree <= min_exact_degree in each variable (hex).

    Raises:
        UnsupportedDegree: above 6 on tets or 9 on hexes.
    """
    degree = max(0, int(min_exact_degree))
    if degree > MAX_DEGREE[cell_kind]:
        raise UnsupportedDegree(
            f"{cell_kind.value} quadrature supports degree <= {MAX_DEGREE[cell_kind]}, got {degree}"
        )
    if cell_kind is CellKind.HEX:
        pts, w = _hex_rule(degree)
    else:
        pts, w = _tet_rule(degree)
    return QuadratureRule(cell_kind, pts, w, degree)


@lru_cache(maxsize=None)
def face_quadrature_for(face_kind: FaceKind, min_exact_degree: int) -> FaceQuadratureRule:
    degree = max(0, int(min_exact_degree))
    if degree > MAX_FACE_DEGREE:
        raise UnsupportedDegree(f"face quadrature supports degree <= {MAX_FACE_DEGREE}, got {degree}")
    m = _points_per_axis(degree)
    if face_kind is FaceKind.QUAD:
        x, w = _gauss_01(m)
        S, T = np.meshgrid(x, x, indexing="ij")
        WS, WT = np.meshgrid(w, w, indexing="ij")
        pts = np.column_stack([S.ravel(), T.ravel()])
        weights = (WS * WT).ravel()
    else:
        t1, w1 = _gauss_jacobi_01(m, 1.0)
        t2, w2 = _gauss_01(m)
        A, B = np.meshgrid(t1, t2, indexing="ij")
        WA, WB = np.meshgrid(w1, w2, indexing="ij")
        pts = np.column_stack([A.ravel(), (B * (1.0 - A)).ravel()])
        weights = (WA * WB).ravel()
    pts.setflags(write=False)
    weights.setflags(write=False)
    return FaceQuadratureRule(face_kind, pts, weights, degree)
