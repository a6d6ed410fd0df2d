"""
Per-cell geometric mappings.

Hexes use the tri-affine map built from their 8 vertices. Tets always use the
quadratic (P2) map with 4 vertex nodes + 6 edge nodes. An edge node sits at the
true edge midpoint, except on an edge that is the diagonal of a hex quad face:
there it is moved to the face center (a_j + a_k + a_l + a_f) / 4, which makes
the tet face coincide with the bi-affine hex face.

Edge nodes are stored once per global tet edge, so tets sharing an edge share
the same node.

With affine_tets=True every edge node stays at the true midpoint (the
affine-mapping ablation); the tets then no longer follow curved hex faces.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConflictingDiagonal, InvertedElement
from .mesh import (
    EdgeClassification,
    EdgeLabel,
    HybridMesh,
    InterfaceKind,
    InterfaceRecord,
    tet_edge_classification,
)
from .reference_elements import (
    DEFAULT_DEGREE,
    HEX_VERTICES,
    P2_BASIS,
    Q1_BASIS,
    TET_VERTICES,
    CellKind,
    ReferenceBasis,
    _as_batch,
    _eval_grads,
    _eval_values,
    check_inside,
    quadrature_for,
)

logger = logging.getLogger(__name__)


class MappingKind(Enum):
    TRI_AFFINE_HEX = "tri_affine_hex"
    QUADRATIC_TET = "quadratic_tet"


@dataclass(frozen=True, eq=False)
class ElementMapping:
    cell_index: int
    kind: MappingKind
    coefficients: np.ndarray  # (8, 3) hex vertices or (10, 3) tet nodes

    @property
    def basis(self) -> ReferenceBasis:
        return Q1_BASIS if self.kind is MappingKind.TRI_AFFINE_HEX else P2_BASIS

    @property
    def cell_kind(self) -> CellKind:
        return self.basis.cell_kind


@dataclass(frozen=True, eq=False)
class MappingSet:
    """
    All cell mappings of a mesh, indexed by global cell index.

    Behaves as a read-only sequence of ElementMapping; the stacked coefficient
    blocks are what assembly works with.
    """
    mesh: HybridMesh
    tet_coeffs: np.ndarray   # (n_t, 10, 3)
    hex_coeffs: np.ndarray   # (n_h, 8, 3)
    edge_nodes: np.ndarray   # (n_te, 3), one per global tet edge
    classification: EdgeClassification
    affine_tets: bool = False

    @property
    def n_tets(self) -> int:
        return self.mesh.n_tets

    def __len__(self) -> int:
        return self.n_tets + int(self.hex_coeffs.shape[0])

    def __getitem__(self, c: int) -> ElementMapping:
        if not 0 <= c < len(self):
            raise IndexError(f"cell {c} out of range")
        if c < self.n_tets:
            return ElementMapping(c, MappingKind.QUADRATIC_TET, self.tet_coeffs[c])
        return ElementMapping(c, MappingKind.TRI_AFFINE_HEX, self.hex_coeffs[c - self.n_tets])

    def __iter__(self) -> Iterator[ElementMapping]:
        for c in range(len(self)):
            yield self[c]

    def block(self, kind: CellKind) -> np.ndarray:
        return self.tet_coeffs if kind is CellKind.TET else self.hex_coeffs


def _stack_jacobians(coeffs: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """coeffs (e, nb, 3), grads (q, nb, 3) -> J (e, q, 3, 3), J[i, j] = d x_i / d p_j."""
    return np.einsum("ebi,qbj->eqij", coeffs, grads)


def cell_jacobians(mappings: MappingSet, kind: CellKind, pts: np.ndarray) -> np.ndarray:
    basis = P2_BASIS if kind is CellKind.TET else Q1_BASIS
    return _stack_jacobians(mappings.block(kind), _eval_grads(basis, pts))


def _check_orientation(mappings: MappingSet, degrees: Dict[CellKind, int]) -> None:
    for kind, corners in ((CellKind.TET, TET_VERTICES), (CellKind.HEX, HEX_VERTICES)):
        coeffs = mappings.block(kind)
        if coeffs.shape[0] == 0:
            continue
        pts = np.vstack([quadrature_for(kind, degrees[kind]).points, corners])
        det = np.linalg.det(cell_jacobians(mappings, kind, pts))
        worst = det.min(axis=1)
        bad = np.flatnonzero(worst <= 0.0)
        if bad.size:
            offset = 0 if kind is CellKind.TET else mappings.n_tets
            cells = ", ".join(str(int(b) + offset) for b in bad[:5])
            raise InvertedElement(
                f"{bad.size} {kind.value} cell(s) with det J <= 0 (first: {cells}; min det {worst.min():.3e})"
            )


def build_mappings(
    mesh: HybridMesh,
    interfaces: Sequence[InterfaceRecord],
    affine_tets: bool = False,
    check: bool = True,
    degrees: Optional[Dict[CellKind, int]] = None,
) -> MappingSet:
    """
    Build every cell mapping.

    Raises:
        ConflictingDiagonal: a tet edge is a diagonal of two distinct hex
            faces, or both a hex edge and a face diagonal.
        InvertedElement: det J <= 0 at a quadrature point or corner of the
            default rule (skipped when check=False).
    """
    classification = tet_edge_classification(mesh, list(interfaces))
    if classification.conflicts and not affine_tets:
        raise ConflictingDiagonal(
            f"tet edge(s) {list(classification.conflicts)[:5]} lie on more than one hex face"
        )

    verts = mesh.vertices
    edges = mesh.tet_edges
    edge_nodes = 0.5 * (verts[edges[:, 0]] + verts[edges[:, 1]]) if edges.size else np.zeros((0, 3))
    if not affine_tets:
        for e, label in enumerate(classification.labels):
            if label is EdgeLabel.HEX_FACE_DIAGONAL:
                j, k = edges[e]
                l, f = classification.diagonal_others[(int(j), int(k))]
                edge_nodes[e] = 0.25 * (verts[j] + verts[k] + verts[l] + verts[f])

    if mesh.n_tets:
        tet_coeffs = np.concatenate([verts[mesh.tets], edge_nodes[mesh.tet_edge_ids]], axis=1)
    else:
        tet_coeffs = np.zeros((0, 10, 3))
    hex_coeffs = verts[mesh.hexes] if mesh.n_hexes else np.zeros((0, 8, 3))
    for arr in (tet_coeffs, hex_coeffs, edge_nodes):
        arr.setflags(write=False)

    mappings = MappingSet(mesh, tet_coeffs, hex_coeffs, edge_nodes, classification, affine_tets)
    if check:
        _check_orientation(mappings, degrees or DEFAULT_DEGREE)
    logger.debug(
        "built %d mappings (%d diagonal edge nodes, affine_tets=%s)",
        len(mappings),
        classification.count(EdgeLabel.HEX_FACE_DIAGONAL),
        affine_tets,
    )
    return mappings


def map_point(m: ElementMapping, p) -> np.ndarray:
    """Physical image of reference point(s); raises OutOfCell outside the reference cell."""
    pts, single = _as_batch(p)
    check_inside(m.cell_kind, pts)
    x = _eval_values(m.basis, pts) @ m.coefficients
    return x[0] if single else x


def jacobian(m: ElementMapping, p) -> Tuple[np.ndarray, np.ndarray]:
    """J = sum_b coefficient_b (x) grad basis_b, and det J."""
    pts, single = _as_batch(p)
    J = np.einsum("bi,qbj->qij", m.coefficients, _eval_grads(m.basis, pts))
    det = np.linalg.det(J)
    if single:
        return J[0], det[0]
    return J, det


# ==================== Face sampling helpers ====================

def sample_triangle(n: int, rng: np.random.Generator) -> np.ndarray:
    """(n + 7, 3) barycentric weights: corners, edge midpoints, centroid, then n random."""
    fixed = np.array(
        [
            [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5],
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        ]
    )
    r = rng.random((max(n, 0), 2))
    s = np.sqrt(r[:, 0])
    rand = np.column_stack([1.0 - s, s * (1.0 - r[:, 1]), s * r[:, 1]])
    return np.vstack([fixed, rand])


def sample_square(n: int, rng: np.random.Generator) -> np.ndarray:
    """(n + 5, 2) parameters (s, t) in [0, 1]^2: corners, center, then n random."""
    fixed = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]])
    return np.vstack([fixed, rng.random((max(n, 0), 2))])


def bilinear_weights(st: np.ndarray) -> np.ndarray:
    """Corner weights (n, 4) of a cyclic quad at parameters (s, t)."""
    s, t = st[:, 0], st[:, 1]
    return np.column_stack([(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t])


def face_reference_points(mesh: HybridMesh, cell: int, face_vertices: Sequence[int], weights: np.ndarray) -> np.ndarray:
    """
    Reference points of `cell` given as weights over global face vertices.

    weights has one column per entry of face_vertices; the result is
    sum_k weights[:, k] * (reference coordinates of face_vertices[k] in cell).
    """
    cell_verts = mesh.cell_vertices(cell)
    corners = TET_VERTICES if mesh.cell_kind(cell) is CellKind.TET else HEX_VERTICES
    local = [cell_verts.index(int(v)) for v in face_vertices]
    pts = weights @ corners[local]
    return np.clip(pts, 0.0, 1.0)


def project_to_bilinear(corners: np.ndarray, x: np.ndarray, st0: np.ndarray, iters: int = 30) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closest points on the bi-affine patch S(s, t) spanned by cyclic corners (4, 3).

    Gauss-Newton on |S(s, t) - x|^2 from the initial parameters st0 (n, 2).
    Returns (parameters, distances).
    """
    c0, c1, c2, c3 = corners
    st = st0.astype(float).copy()
    for _ in range(iters):
        s, t = st[:, 0:1], st[:, 1:2]
        S = (1 - s) * (1 - t) * c0 + s * (1 - t) * c1 + s * t * c2 + (1 - s) * t * c3
        Ss = (1 - t) * (c1 - c0) + t * (c2 - c3)
        St = (1 - s) * (c3 - c0) + s * (c2 - c1)
        r = S - x
        # normal equations of the 3x2 least-squares step
        a = np.einsum("ni,ni->n", Ss, Ss)
        b = np.einsum("ni,ni->n", Ss, St)
        c = np.einsum("ni,ni->n", St, St)
        gs = np.einsum("ni,ni->n", Ss, r)
        gt = np.einsum("ni,ni->n", St, r)
        det = a * c - b * b
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        ds = (c * gs - b * gt) / det
        dt = (a * gt - b * gs) / det
        st[:, 0] -= ds
        st[:, 1] -= dt
        if max(np.abs(ds).max(initial=0.0), np.abs(dt).max(initial=0.0)) < 1e-15:
            break
    w = bilinear_weights(st)
    dist = np.linalg.norm(w @ corners - x, axis=1)
    return st, dist


# ==================== Continuity checks ====================

@dataclass(frozen=True)
class GeometricContinuityReport:
    """Max gap per interface, aligned with the interface list it was built from."""
    interfaces: Tuple[InterfaceRecord, ...]
    gaps: Tuple[float, ...]

    @property
    def max_gap(self) -> float:
        return max(self.gaps, default=0.0)

    def max_gap_for(self, kind: InterfaceKind) -> float:
        return max((g for r, g in zip(self.interfaces, self.gaps) if r.kind is kind), default=0.0)

    def worst(self) -> Optional[Tuple[InterfaceRecord, float]]:
        if not self.gaps:
            return None
        k = int(np.argmax(self.gaps))
        return self.interfaces[k], self.gaps[k]


# corner (s, t) parameters of a cyclic quad
_QUAD_PARAMS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def _junction_gap(mesh: HybridMesh, mappings: MappingSet, rec: InterfaceRecord, lam: np.ndarray) -> float:
    cyc = list(rec.shared_vertices)
    corners = mesh.vertices[cyc]
    gap = 0.0
    for tet_cell, tri in zip(rec.cells[1:], rec.halves):
        x = map_point(mappings[tet_cell], face_reference_points(mesh, tet_cell, tri, lam))
        st0 = lam @ _QUAD_PARAMS[[cyc.index(v) for v in tri]]
        _, dist = project_to_bilinear(corners, x, st0)
        gap = max(gap, float(dist.max()))
    return gap


def check_geometric_continuity(
    mesh: HybridMesh,
    mappings: MappingSet,
    interfaces: Sequence[InterfaceRecord],
    n_samples: int = 20,
    seed: int = 0,
) -> GeometricContinuityReport:
    """
    Max geometric gap per interface.

    Junctions: distance of each tet's mapped shared face to the hex's bi-affine
    face. Tet-tet / hex-hex: mismatch of the two parameterisations at matched
    points.
    """
    rng = np.random.default_rng(seed)
    lam = sample_triangle(n_samples, rng)
    st = sample_square(n_samples, rng)
    quad_w = bilinear_weights(st)

    gaps: List[float] = []
    for rec in interfaces:
        if rec.kind is InterfaceKind.HYBRID_JUNCTION:
            gaps.append(_junction_gap(mesh, mappings, rec, lam))
            continue
        w = lam if rec.kind is InterfaceKind.TET_TET else quad_w
        a, b = rec.cells
        xa = map_point(mappings[a], face_reference_points(mesh, a, rec.shared_vertices, w))
        xb = map_point(mappings[b], face_reference_points(mesh, b, rec.shared_vertices, w))
        gaps.append(float(np.linalg.norm(xa - xb, axis=1).max()))

    report = GeometricContinuityReport(tuple(interfaces), tuple(gaps))
    logger.debug("geometric continuity: max gap %.3e over %d interfaces", report.max_gap, len(gaps))
    return report
