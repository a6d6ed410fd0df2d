"""
Global function spaces on hybrid meshes.

Raw (unconstrained) DOFs are nodal values: one per mesh vertex (ids 0..n_v-1)
followed, for P2-based spaces, by one per global tet edge (id n_v + edge id).
Every space is described by a sparse prolongation P (n_raw x n_free) mapping
free DOFs to raw nodal values. Its rows encode the continuity constraints:

    vertex row          identity
    diagonal edge row   1/4 at the four quad-face vertices       (hex-tet junction)
    hex-edge edge row   1/2 at the two endpoints                 (hex-tet junction)
    plain edge row      1/2 at the endpoints (Hyb1) or its own free DOF (Hyb12)

DHyb12 keeps P = identity (no constraints). Q1 and P1 are the pure hex and
pure tet spaces used as baselines.

Because a diagonal edge row spreads over all four face vertices, a vertex basis
function can be non-zero on a tet that does not contain the vertex.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix, csc_matrix, csr_matrix, identity

from .errors import NotInSupport, UnsupportedSpace
from .geometry import (
    MappingSet,
    bilinear_weights,
    face_reference_points,
    jacobian,
    sample_square,
    sample_triangle,
)
from .mesh import (
    EdgeLabel,
    HybridMesh,
    InterfaceKind,
    InterfaceRecord,
    boundary_faces,
    edge_key,
)
from .reference_elements import (
    P1_BASIS,
    P2_BASIS,
    Q1_BASIS,
    CellKind,
    FaceKind,
    ReferenceBasis,
    _as_batch,
    _eval_grads,
    _eval_values,
    check_inside,
)

logger = logging.getLogger(__name__)


class SpaceKind(Enum):
    Q1 = "q1"
    P1 = "p1"
    DHYB12 = "dhyb12"
    HYB12 = "hyb12"
    HYB1 = "hyb1"

    @staticmethod
    def parse(name: str) -> "SpaceKind":
        try:
            return SpaceKind(name.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in SpaceKind)
            raise ValueError(f"unknown space '{name}' (valid: {valid})") from None

    @property
    def uses_p2(self) -> bool:
        return self in (SpaceKind.DHYB12, SpaceKind.HYB12, SpaceKind.HYB1)


@dataclass(frozen=True, eq=False)
class DofSystem:
    space_kind: SpaceKind
    n_vertices: int
    n_unconstrained: int
    n_free: int
    tet_dofs: np.ndarray        # (n_t, 4 or 10) raw ids
    hex_dofs: np.ndarray        # (n_h, 8) raw ids
    prolongation: csr_matrix    # (n_unconstrained, n_free)
    dirichlet_mask: np.ndarray  # (n_free,) bool
    free_dof_coords: np.ndarray  # (n_free, 3) node position of each free DOF
    free_dof_raw: np.ndarray    # (n_free,) raw DOF carrying the unit coefficient

    @property
    def n_tets(self) -> int:
        return int(self.tet_dofs.shape[0])

    @property
    def tet_basis(self) -> ReferenceBasis:
        return P1_BASIS if self.space_kind is SpaceKind.P1 else P2_BASIS

    def basis_of(self, cell: int) -> ReferenceBasis:
        return self.tet_basis if cell < self.n_tets else Q1_BASIS

    def block(self, kind: CellKind) -> np.ndarray:
        return self.tet_dofs if kind is CellKind.TET else self.hex_dofs

    def cell_dof_map(self, cell: int) -> Tuple[int, ...]:
        """Raw DOF id of each local node of `cell`."""
        if cell < self.n_tets:
            return tuple(int(d) for d in self.tet_dofs[cell])
        return tuple(int(d) for d in self.hex_dofs[cell - self.n_tets])

    @cached_property
    def prolongation_csc(self) -> csc_matrix:
        return self.prolongation.tocsc()

    def raw_values(self, u_free: np.ndarray) -> np.ndarray:
        """Raw nodal values P u (scalar) or per component for (3 * n_free,) vectors."""
        u = np.asarray(u_free, dtype=float)
        if u.shape[0] == self.n_free:
            return self.prolongation @ u
        comps = u.reshape(3, self.n_free)
        return np.vstack([self.prolongation @ c for c in comps])

    def interpolate(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Nodal interpolant: fn evaluated at every free DOF node."""
        return np.asarray(fn(self.free_dof_coords), dtype=float)

    def prolongation_triplets(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self.prolongation.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]


# ==================== Construction ====================

def _boundary_edge_set(mesh: HybridMesh, interfaces: Sequence[InterfaceRecord]) -> set:
    out = set()
    for bf in boundary_faces(mesh, list(interfaces)):
        if bf.face_kind is FaceKind.TRI:
            a, b, c = bf.vertices
            out.update({edge_key(a, b), edge_key(b, c), edge_key(a, c)})
    return out


def build_space(
    mesh: HybridMesh,
    mappings: MappingSet,
    interfaces: Sequence[InterfaceRecord],
    space_kind: SpaceKind,
) -> DofSystem:
    """
    Build the DOF numbering and prolongation of one space.

    Raises:
        UnsupportedSpace: P1 on a mesh with hexes, or Q1 on a mesh with tets.
    """
    n_v = mesh.n_vertices
    if space_kind is SpaceKind.P1 and mesh.n_hexes:
        raise UnsupportedSpace("P1 space requires an all-tet mesh")
    if space_kind is SpaceKind.Q1 and mesh.n_tets:
        raise UnsupportedSpace("Q1 space requires an all-hex mesh")

    bnd_faces = boundary_faces(mesh, list(interfaces))
    vertex_on_boundary = np.zeros(n_v, dtype=bool)
    for bf in bnd_faces:
        vertex_on_boundary[list(bf.vertices)] = True

    if not space_kind.uses_p2:
        tet_dofs = mesh.tets.copy()
        hex_dofs = mesh.hexes.copy()
        P = identity(n_v, format="csr")
        dofs = DofSystem(
            space_kind, n_v, n_v, n_v, tet_dofs, hex_dofs, P,
            vertex_on_boundary, mesh.vertices.copy(), np.arange(n_v),
        )
        logger.info("space %s: %d free dofs", space_kind.value, n_v)
        return dofs

    edges = mesh.tet_edges
    n_te = int(edges.shape[0])
    n_raw = n_v + n_te
    labels = mappings.classification.labels
    others = mappings.classification.diagonal_others
    boundary_edges = _boundary_edge_set(mesh, interfaces)

    rows: List[int] = list(range(n_v))
    cols: List[int] = list(range(n_v))
    vals: List[float] = [1.0] * n_v
    free_raw: List[int] = list(range(n_v))
    free_coords: List[np.ndarray] = [mesh.vertices]
    free_bnd: List[bool] = list(vertex_on_boundary)
    extra_coords = []

    for e in range(n_te):
        raw = n_v + e
        j, k = int(edges[e, 0]), int(edges[e, 1])
        label = labels[e]
        keep_free = space_kind is SpaceKind.DHYB12 or (
            space_kind is SpaceKind.HYB12 and label is EdgeLabel.PLAIN
        )
        if keep_free:
            col = len(free_raw)
            free_raw.append(raw)
            extra_coords.append(mappings.edge_nodes[e])
            free_bnd.append((j, k) in boundary_edges)
            rows.append(raw)
            cols.append(col)
            vals.append(1.0)
        elif label is EdgeLabel.HEX_FACE_DIAGONAL:
            l, f = others[(j, k)]
            rows.extend([raw] * 4)
            cols.extend([j, k, l, f])
            vals.extend([0.25] * 4)
        else:
            rows.extend([raw, raw])
            cols.extend([j, k])
            vals.extend([0.5, 0.5])

    n_free = len(free_raw)
    P = coo_matrix((vals, (rows, cols)), shape=(n_raw, n_free)).tocsr()
    if extra_coords:
        free_coords.append(np.asarray(extra_coords))
    tet_dofs = (
        np.concatenate([mesh.tets, n_v + mesh.tet_edge_ids], axis=1)
        if mesh.n_tets
        else np.zeros((0, 10), dtype=np.int64)
    )
    dofs = DofSystem(
        space_kind,
        n_v,
        n_raw,
        n_free,
        tet_dofs,
        mesh.hexes.copy(),
        P,
        np.asarray(free_bnd, dtype=bool),
        np.vstack(free_coords),
        np.asarray(free_raw, dtype=np.int64),
    )
    logger.info(
        "space %s: %d raw dofs, %d free (%d boundary)",
        space_kind.value, n_raw, n_free, int(dofs.dirichlet_mask.sum()),
    )
    return dofs


# ==================== Evaluation ====================

def _physical_grads(mappings: MappingSet, cell: int, pts: np.ndarray, ref_grads: np.ndarray) -> np.ndarray:
    J, _ = jacobian(mappings[cell], pts)
    # grad_x phi = J^{-T} grad_p phi
    return np.einsum("qji,qbj->qbi", np.linalg.inv(J), ref_grads)


def eval_global_basis(
    dofs: DofSystem,
    mappings: MappingSet,
    free_dof: int,
    cell: int,
    p,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Value and physical gradient of free basis function `free_dof` on `cell`.

    Raises:
        NotInSupport: no raw node of `cell` carries a coefficient of free_dof.
    """
    local = list(dofs.cell_dof_map(cell))
    coefs = dofs.prolongation_csc[:, free_dof].toarray().ravel()[local]
    if not np.any(coefs):
        raise NotInSupport(f"free dof {free_dof} is zero on cell {cell}")
    basis = dofs.basis_of(cell)
    pts, single = _as_batch(p)
    check_inside(basis.cell_kind, pts)
    value = _eval_values(basis, pts) @ coefs
    grads = _physical_grads(mappings, cell, pts, _eval_grads(basis, pts))
    grad = np.einsum("qbi,b->qi", grads, coefs)
    if single:
        return value[0], grad[0]
    return value, grad


def eval_field(dofs: DofSystem, mappings: MappingSet, raw: np.ndarray, cell: int, p) -> Tuple[np.ndarray, np.ndarray]:
    """Value and physical gradient of the field with raw nodal values `raw` on `cell`."""
    local = list(dofs.cell_dof_map(cell))
    basis = dofs.basis_of(cell)
    pts, single = _as_batch(p)
    check_inside(basis.cell_kind, pts)
    coefs = np.asarray(raw)[local]
    value = _eval_values(basis, pts) @ coefs
    grad = np.einsum("qbi,b->qi", _physical_grads(mappings, cell, pts, _eval_grads(basis, pts)), coefs)
    if single:
        return value[0], grad[0]
    return value, grad


# ==================== Continuity audit ====================

_QUAD_PARAMS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@dataclass(frozen=True)
class ContinuityReport:
    """jumps[k] maps each free DOF supported next to interface k to its max jump."""
    interfaces: Tuple[InterfaceRecord, ...]
    jumps: Tuple[Dict[int, float], ...]

    @property
    def max_jump(self) -> float:
        return max((max(j.values(), default=0.0) for j in self.jumps), default=0.0)

    def max_jump_for(self, kind: InterfaceKind) -> float:
        return max(
            (max(j.values(), default=0.0) for r, j in zip(self.interfaces, self.jumps) if r.kind is kind),
            default=0.0,
        )

    def worst(self) -> Optional[Tuple[InterfaceRecord, int, float]]:
        best = None
        for rec, j in zip(self.interfaces, self.jumps):
            for dof, v in j.items():
                if best is None or v > best[2]:
                    best = (rec, dof, v)
        return best


def _side_values(dofs: DofSystem, cell: int, ref_pts: np.ndarray, cols: np.ndarray) -> np.ndarray:
    local = list(dofs.cell_dof_map(cell))
    sub = dofs.prolongation[local][:, cols].toarray()
    return _eval_values(dofs.basis_of(cell), ref_pts) @ sub


def _pair_jumps(dofs: DofSystem, a: int, pa: np.ndarray, b: int, pb: np.ndarray) -> Dict[int, float]:
    P = dofs.prolongation
    cols = np.union1d(
        P[list(dofs.cell_dof_map(a))].indices, P[list(dofs.cell_dof_map(b))].indices
    )
    if cols.size == 0:
        return {}
    diff = np.abs(_side_values(dofs, a, pa, cols) - _side_values(dofs, b, pb, cols)).max(axis=0)
    return {int(c): float(d) for c, d in zip(cols, diff)}


def continuity_audit(
    dofs: DofSystem,
    mappings: MappingSet,
    interfaces: Sequence[InterfaceRecord],
    n_samples: int = 20,
    seed: int = 0,
) -> ContinuityReport:
    """
    Max jump of every free basis function across every interface.

    Points are matched through the face parameterisation shared by both
    sides; a DOF supported on either side is audited.
    """
    mesh = mappings.mesh
    rng = np.random.default_rng(seed)
    lam = sample_triangle(n_samples, rng)
    quad_w = bilinear_weights(sample_square(n_samples, rng))

    out: List[Dict[int, float]] = []
    for rec in interfaces:
        if rec.kind is InterfaceKind.HYBRID_JUNCTION:
            hex_cell = rec.cells[0]
            cyc = list(rec.shared_vertices)
            merged: Dict[int, float] = {}
            for tet_cell, tri in zip(rec.cells[1:], rec.halves):
                p_tet = face_reference_points(mesh, tet_cell, tri, lam)
                st = lam @ _QUAD_PARAMS[[cyc.index(v) for v in tri]]
                p_hex = face_reference_points(mesh, hex_cell, cyc, bilinear_weights(st))
                for dof, v in _pair_jumps(dofs, hex_cell, p_hex, tet_cell, p_tet).items():
                    merged[dof] = max(merged.get(dof, 0.0), v)
            out.append(merged)
            continue
        w = lam if rec.kind is InterfaceKind.TET_TET else quad_w
        a, b = rec.cells
        pa = face_reference_points(mesh, a, rec.shared_vertices, w)
        pb = face_reference_points(mesh, b, rec.shared_vertices, w)
        out.append(_pair_jumps(dofs, a, pa, b, pb))

    report = ContinuityReport(tuple(interfaces), tuple(out))
    logger.debug("continuity audit (%s): max jump %.3e", dofs.space_kind.value, report.max_jump)
    return report
