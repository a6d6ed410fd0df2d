"""
Galerkin assembly of the Poisson and linear-elasticity weak forms.

Local matrices are computed for blocks of cells of the same kind with
vectorised einsum, scattered into raw (unconstrained) COO triplets and then
reduced through the prolongation: A_f = P^T A P, b_f = P^T b.

Vector problems use a component-blocked layout (all x components, then y,
then z); the vector prolongation is block_diag(P, P, P).

The "direct" strategy reduces each cell matrix through its own rows of P
before scattering (C_c^T K_c C_c); both strategies give the same system.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, FrozenSet, List, Mapping, Optional, Tuple

import numpy as np
from scipy.sparse import block_diag, coo_matrix, csr_matrix, diags

from .errors import InvertedElement, QuadratureTooWeak
from .function_spaces import DofSystem
from .geometry import MappingSet, bilinear_weights
from .mesh import HybridMesh, boundary_faces
from .reference_elements import (
    DEFAULT_DEGREE,
    HEX_VERTICES,
    MAX_DEGREE,
    MAX_FACE_DEGREE,
    MIN_DEGREE,
    P2_BASIS,
    Q1_BASIS,
    TET_VERTICES,
    CellKind,
    FaceKind,
    _eval_grads,
    _eval_values,
    face_quadrature_for,
    quadrature_for,
)

logger = logging.getLogger(__name__)

CHUNK_SIZE = 2048

Field = Callable[[np.ndarray], np.ndarray]
FluxField = Callable[[np.ndarray, np.ndarray], np.ndarray]


class FormKind(Enum):
    POISSON = "poisson"
    ELASTICITY = "elasticity"


def _zero_scalar(x: np.ndarray) -> np.ndarray:
    return np.zeros(x.shape[0])


def _zero_vector(x: np.ndarray) -> np.ndarray:
    return np.zeros((x.shape[0], 3))


@dataclass(frozen=True)
class WeakForm:
    """
    Poisson:     a(u, v) = int grad u . grad v,             l(v) = int f v + int_N g v
    Elasticity:  a(u, v) = int lam div u div v + 2 mu eps(u):eps(v),
                 l(v) = int f . v + int_N g . v

    Fields take physical points (n, 3) and return (n,) or (n, 3). The Neumann
    term receives (points, outward unit normals).
    """
    kind: FormKind
    source: Field
    dirichlet_value: Optional[Field] = None
    lam: float = 1.0
    mu: float = 1.0
    neumann: Optional[FluxField] = None
    neumann_tags: Optional[FrozenSet[int]] = None

    def __post_init__(self) -> None:
        if self.kind is FormKind.ELASTICITY and (self.lam <= 0.0 or self.mu <= 0.0):
            raise ValueError(f"Lame coefficients must be positive (lam={self.lam}, mu={self.mu})")
        if self.dirichlet_value is None:
            zero = _zero_vector if self.kind is FormKind.ELASTICITY else _zero_scalar
            object.__setattr__(self, "dirichlet_value", zero)

    @property
    def n_components(self) -> int:
        return 3 if self.kind is FormKind.ELASTICITY else 1


@dataclass(frozen=True, eq=False)
class SparseSystem:
    matrix: csr_matrix
    rhs: np.ndarray
    n_components: int = 1
    bc_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    bc_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def size(self) -> int:
        return int(self.rhs.shape[0])

    def energy(self, u: np.ndarray) -> float:
        return float(u @ (self.matrix @ u))

    def asymmetry(self) -> float:
        diff = abs(self.matrix - self.matrix.T).max()
        scale = max(abs(self.matrix).max(), 1e-300)
        return float(diff / scale)

    def triplets(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]


# ==================== Quadrature degrees ====================

def resolve_degrees(quad_degree: Optional[Mapping[CellKind, int]]) -> dict:
    degrees = dict(DEFAULT_DEGREE)
    if quad_degree:
        degrees.update(quad_degree)
    for kind, deg in degrees.items():
        if deg < MIN_DEGREE[kind]:
            raise QuadratureTooWeak(
                f"{kind.value} quadrature degree {deg} below minimum {MIN_DEGREE[kind]}"
            )
    return degrees


def _source_degree(kind: CellKind, degree: int, extra: int) -> int:
    return min(degree + extra, MAX_DEGREE[kind])


# ==================== Cell kernels ====================

@dataclass(frozen=True)
class _Block:
    kind: CellKind
    coeffs: np.ndarray  # (e, nm, 3) mapping nodes
    dofs: np.ndarray    # (e, nb) raw dof ids
    offset: int         # global index of the first cell


def _blocks(mappings: MappingSet, dofs: DofSystem) -> List[_Block]:
    out = []
    for kind, offset in ((CellKind.TET, 0), (CellKind.HEX, mappings.n_tets)):
        coeffs = mappings.block(kind)
        if coeffs.shape[0] == 0:
            continue
        cell_dofs = dofs.block(kind)
        for start in range(0, coeffs.shape[0], CHUNK_SIZE):
            stop = start + CHUNK_SIZE
            out.append(_Block(kind, coeffs[start:stop], cell_dofs[start:stop], offset + start))
    return out


def _geometry(block: _Block, pts: np.ndarray, weights: np.ndarray):
    map_basis = P2_BASIS if block.kind is CellKind.TET else Q1_BASIS
    J = np.einsum("ebi,qbj->eqij", block.coeffs, _eval_grads(map_basis, pts))
    det = np.linalg.det(J)
    if np.any(det <= 0.0):
        e = int(np.argwhere(det <= 0.0)[0, 0])
        raise InvertedElement(f"det J <= 0 on cell {block.offset + e}")
    X = np.einsum("qb,ebi->eqi", _eval_values(map_basis, pts), block.coeffs)
    return J, det * weights[None, :], X


def _phys_grads(J: np.ndarray, ref_grads: np.ndarray) -> np.ndarray:
    # (e, q, nb, 3): J^{-T} applied to each reference gradient
    return np.einsum("eqji,qbj->eqbi", np.linalg.inv(J), ref_grads)


def _local_matrices(block: _Block, fe_basis, form: WeakForm, degree: int) -> np.ndarray:
    rule = quadrature_for(block.kind, degree)
    J, w, _ = _geometry(block, rule.points, rule.weights)
    G = _phys_grads(J, _eval_grads(fe_basis, rule.points))
    lap = np.einsum("eqbi,eqdi,eq->ebd", G, G, w)
    if form.kind is FormKind.POISSON:
        return lap
    e, nb = lap.shape[0], lap.shape[1]
    div = np.einsum("eqba,eqdc,eq->eabcd", G, G, w)
    K = form.lam * div + form.mu * div.transpose(0, 1, 4, 3, 2)
    K += form.mu * np.einsum("ac,ebd->eabcd", np.eye(3), lap)
    return K.reshape(e, 3 * nb, 3 * nb)


def _local_loads(block: _Block, fe_basis, form: WeakForm, degree: int) -> np.ndarray:
    rule = quadrature_for(block.kind, degree)
    _, w, X = _geometry(block, rule.points, rule.weights)
    phi = _eval_values(fe_basis, rule.points)  # (q, nb)
    e, q = w.shape
    f = np.asarray(form.source(X.reshape(-1, 3)), dtype=float)
    if form.kind is FormKind.POISSON:
        return np.einsum("eq,qb,eq->eb", f.reshape(e, q), phi, w)
    F = np.einsum("eqa,qb,eq->eab", f.reshape(e, q, 3), phi, w)
    return F.reshape(e, -1)


def _global_index(cell_dofs: np.ndarray, n_comp: int, n_raw: int) -> np.ndarray:
    if n_comp == 1:
        return cell_dofs
    comps = np.arange(n_comp)[None, :, None] * n_raw
    return (comps + cell_dofs[:, None, :]).reshape(cell_dofs.shape[0], -1)


# ==================== Neumann term ====================

def _face_param(face_kind: FaceKind, corners: np.ndarray, st: np.ndarray):
    """Reference points and tangent vectors of a face given reference corners."""
    if face_kind is FaceKind.TRI:
        r0, r1, r2 = corners
        s, t = st[:, 0:1], st[:, 1:2]
        pts = (1 - s - t) * r0 + s * r1 + t * r2
        ds = np.broadcast_to(r1 - r0, pts.shape)
        dt = np.broadcast_to(r2 - r0, pts.shape)
        return pts, ds, dt
    r0, r1, r2, r3 = corners
    pts = bilinear_weights(st) @ corners
    s, t = st[:, 0:1], st[:, 1:2]
    ds = (1 - t) * (r1 - r0) + t * (r2 - r3)
    dt = (1 - s) * (r3 - r0) + s * (r2 - r1)
    return pts, ds, dt


def _neumann_loads(
    mesh: HybridMesh, mappings: MappingSet, dofs: DofSystem, form: WeakForm, degree: int, n_raw: int
) -> np.ndarray:
    n_comp = form.n_components
    b = np.zeros(n_comp * n_raw)
    for bf in boundary_faces(mesh):
        if form.neumann_tags is not None and bf.tag not in form.neumann_tags:
            continue
        cell = bf.cell
        m = mappings[cell]
        cell_verts = mesh.cell_vertices(cell)
        ref_corners = TET_VERTICES if bf.face_kind is FaceKind.TRI else HEX_VERTICES
        corners = ref_corners[[cell_verts.index(v) for v in bf.vertices]]
        rule = face_quadrature_for(bf.face_kind, min(degree, MAX_FACE_DEGREE))
        pts, ds, dt = _face_param(bf.face_kind, corners, rule.points)

        J = np.einsum("bi,qbj->qij", m.coefficients, _eval_grads(m.basis, pts))
        X = _eval_values(m.basis, pts) @ m.coefficients
        normal = np.cross(np.einsum("qij,qj->qi", J, ds), np.einsum("qij,qj->qi", J, dt))
        area = np.linalg.norm(normal, axis=1)
        normal /= area[:, None]
        center = m.coefficients.mean(axis=0)
        flip = np.einsum("qi,qi->q", normal, X - center) < 0.0
        normal[flip] *= -1.0

        g = np.asarray(form.neumann(X, normal), dtype=float)
        phi = _eval_values(dofs.basis_of(cell), pts)
        w = rule.weights * area
        local = np.asarray(dofs.cell_dof_map(cell))
        if n_comp == 1:
            np.add.at(b, local, phi.T @ (w * g))
        else:
            for a in range(3):
                np.add.at(b, a * n_raw + local, phi.T @ (w * g[:, a]))
    return b


# ==================== Assembly ====================

def _vector_prolongation(dofs: DofSystem, n_comp: int) -> csr_matrix:
    if n_comp == 1:
        return dofs.prolongation
    return block_diag([dofs.prolongation] * n_comp, format="csr")


def _direct_reduce(K: np.ndarray, idx: np.ndarray, Pv: csr_matrix):
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    vals: List[np.ndarray] = []
    for Kc, ic in zip(K, idx):
        C = Pv[ic]
        free = np.unique(C.indices)
        Cd = C[:, free].toarray()
        Kr = Cd.T @ Kc @ Cd
        rows.append(np.repeat(free, free.size))
        cols.append(np.tile(free, free.size))
        vals.append(Kr.ravel())
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def assemble(
    mesh: HybridMesh,
    mappings: MappingSet,
    dofs: DofSystem,
    form: WeakForm,
    quad_degree: Optional[Mapping[CellKind, int]] = None,
    strategy: str = "reduce",
    threads: int = 1,
    source_extra: int = 1,
) -> SparseSystem:
    """
    Assemble the reduced system on the free DOFs of `dofs`.

    Raises:
        QuadratureTooWeak: a requested degree is below the documented minimum.
        InvertedElement: det J <= 0 at a quadrature point.
    """
    if strategy not in ("reduce", "direct"):
        raise ValueError(f"unknown assembly strategy '{strategy}' (valid: reduce, direct)")
    degrees = resolve_degrees(quad_degree)
    n_comp = form.n_components
    n_raw = dofs.n_unconstrained
    Pv = _vector_prolongation(dofs, n_comp)

    def work(block: _Block):
        fe_basis = dofs.tet_basis if block.kind is CellKind.TET else Q1_BASIS
        deg = degrees[block.kind]
        K = _local_matrices(block, fe_basis, form, deg)
        F = _local_loads(block, fe_basis, form, _source_degree(block.kind, deg, source_extra))
        idx = _global_index(block.dofs, n_comp, n_raw)
        if strategy == "direct":
            r, c, v = _direct_reduce(K, idx, Pv)
        else:
            nl = idx.shape[1]
            r = np.repeat(idx, nl, axis=1).ravel()
            c = np.tile(idx, (1, nl)).ravel()
            v = K.ravel()
        return r, c, v, idx.ravel(), F.ravel()

    blocks = _blocks(mappings, dofs)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(b) for b in blocks]

    n_total = n_comp * (dofs.n_free if strategy == "direct" else n_raw)
    if results:
        rows = np.concatenate([r[0] for r in results])
        cols = np.concatenate([r[1] for r in results])
        vals = np.concatenate([r[2] for r in results])
        b_raw = np.bincount(
            np.concatenate([r[3] for r in results]),
            weights=np.concatenate([r[4] for r in results]),
            minlength=n_comp * n_raw,
        )
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
        b_raw = np.zeros(n_comp * n_raw)

    if form.neumann is not None:
        b_raw = b_raw + _neumann_loads(
            mesh, mappings, dofs, form, max(degrees.values()) + source_extra, n_raw
        )

    A = coo_matrix((vals, (rows, cols)), shape=(n_total, n_total)).tocsr()
    if strategy == "reduce":
        A = (Pv.T @ A @ Pv).tocsr()
    b = Pv.T @ b_raw
    A.sum_duplicates()
    logger.info(
        "assembled %s on %s: %d dofs, %d nonzeros (%s, %d thread(s))",
        form.kind.value, dofs.space_kind.value, A.shape[0], A.nnz, strategy, threads,
    )
    return SparseSystem(A, np.asarray(b, dtype=float), n_comp)


def assemble_raw(
    mappings: MappingSet, dofs: DofSystem, form: WeakForm, quad_degree: Optional[Mapping[CellKind, int]] = None
) -> csr_matrix:
    """Unreduced raw stiffness matrix (before applying P)."""
    degrees = resolve_degrees(quad_degree)
    n_comp, n_raw = form.n_components, dofs.n_unconstrained
    parts = []
    for block in _blocks(mappings, dofs):
        fe_basis = dofs.tet_basis if block.kind is CellKind.TET else Q1_BASIS
        K = _local_matrices(block, fe_basis, form, degrees[block.kind])
        idx = _global_index(block.dofs, n_comp, n_raw)
        nl = idx.shape[1]
        parts.append((np.repeat(idx, nl, axis=1).ravel(), np.tile(idx, (1, nl)).ravel(), K.ravel()))
    n = n_comp * n_raw
    if not parts:
        return csr_matrix((n, n))
    rows, cols, vals = (np.concatenate(p) for p in zip(*parts))
    return coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def local_stiffness(mappings: MappingSet, dofs: DofSystem, form: WeakForm, cell: int, degree: Optional[int] = None) -> np.ndarray:
    """Raw local matrix of one cell."""
    m = mappings[cell]
    kind = m.cell_kind
    block = _Block(kind, m.coefficients[None], np.asarray(dofs.cell_dof_map(cell))[None], cell)
    deg = DEFAULT_DEGREE[kind] if degree is None else degree
    fe_basis = dofs.basis_of(cell)
    return _local_matrices(block, fe_basis, form, deg)[0]


# ==================== Dirichlet conditions ====================

def dirichlet_vector(dofs: DofSystem, n_comp: int, boundary_value_fn: Field) -> Tuple[np.ndarray, np.ndarray]:
    """(boolean mask, lifting values) over the component-blocked free vector."""
    mask = np.tile(dofs.dirichlet_mask, n_comp)
    g = np.zeros(n_comp * dofs.n_free)
    idx = np.flatnonzero(dofs.dirichlet_mask)
    if idx.size:
        vals = np.asarray(boundary_value_fn(dofs.free_dof_coords[idx]), dtype=float)
        if n_comp == 1:
            g[idx] = vals.reshape(-1)
        else:
            vals = vals.reshape(idx.size, n_comp)
            for a in range(n_comp):
                g[a * dofs.n_free + idx] = vals[:, a]
    return mask, g


def apply_dirichlet(system: SparseSystem, dofs: DofSystem, boundary_value_fn: Field) -> SparseSystem:
    """
    Symmetric elimination of the boundary DOFs.

    A' = D A D + I_B, b' = D (b - A g) + g_B with D the interior projector and
    g the lifting of the boundary values.
    """
    mask, g = dirichlet_vector(dofs, system.n_components, boundary_value_fn)
    keep = diags((~mask).astype(float))
    A = system.matrix
    A_bc = (keep @ A @ keep + diags(mask.astype(float))).tocsr()
    rhs = keep @ (system.rhs - A @ g) + g * mask
    bc = np.flatnonzero(mask)
    logger.debug("dirichlet: %d constrained dofs", bc.size)
    return SparseSystem(A_bc, rhs, system.n_components, bc, g[bc])
