"""
Combinatorial hybrid hexahedral-tetrahedral mesh.

Responsibilities:
1. Store vertices + tet / hex connectivity (immutable after construction)
2. Validate the supported connectivity cases (validate_spec)
3. Match faces into interfaces: tet-tet, hex-hex and hybrid junctions where one
   hex quad face is covered by two tet faces split along a diagonal
4. Classify every tet edge as a hex edge, a hex face diagonal or plain

Supported connectivity (anything else is reported as a violation):
- two tets share 0, 1, 2 or 3 vertices
- two hexes share 0, 1, 2 (common edge) or 4 (common face) vertices
- a hex and a tet share 0, 1, 2 or 3 vertices; with 3, another tet covers the
  other half of the same hex face along the same diagonal

Cell numbering: tets are cells 0..n_t-1, hexes are cells n_t..n_t+n_h-1.
Faces are identified by their sorted vertex tuple; quad faces keep the cyclic
order from their owning hex so the diagonal can be recovered.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix, triu

from .errors import AmbiguousJunction
from .reference_elements import (
    CellKind,
    FaceKind,
    HEX_EDGES,
    HEX_FACES,
    TET_EDGES,
    TET_FACES,
)

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
FaceKey = Tuple[int, ...]

DEFAULT_BOUNDARY_TAG = 1


def edge_key(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


def face_key(verts) -> FaceKey:
    return tuple(sorted(int(v) for v in verts))


def _readonly_int(a, width: int, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, width)
    if arr.ndim != 2 or arr.shape[1] != width:
        raise ValueError(f"{name} must have shape (n, {width}), got {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class _FaceTables:
    # sorted tri key -> [(tet, local face)]
    tris: Dict[FaceKey, List[Tuple[int, int]]]
    # sorted quad key -> [(hex, local face, cyclic global order)]
    quads: Dict[FaceKey, List[Tuple[int, int, Tuple[int, int, int, int]]]]


@dataclass(frozen=True, eq=False)
class HybridMesh:
    """
    Immutable hybrid mesh.

    Fields:
        vertices: (n_v, 3) coordinates
        tets: (n_t, 4) vertex indices
        hexes: (n_h, 8) vertex indices in the reference hexahedron ordering;
            the 6 faces come from HEX_FACES
        boundary_tags: sorted boundary-face key -> integer tag (default 1)
    """
    vertices: np.ndarray
    tets: np.ndarray
    hexes: np.ndarray
    boundary_tags: Mapping[FaceKey, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        verts = np.asarray(self.vertices, dtype=float)
        if verts.size == 0:
            verts = verts.reshape(0, 3)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValueError(f"vertices must have shape (n, 3), got {verts.shape}")
        verts = verts.copy()
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "tets", _readonly_int(self.tets, 4, "tets"))
        object.__setattr__(self, "hexes", _readonly_int(self.hexes, 8, "hexes"))
        object.__setattr__(self, "boundary_tags", dict(self.boundary_tags))

        n_v = verts.shape[0]
        for name, cells in (("tets", self.tets), ("hexes", self.hexes)):
            if cells.size and (cells.min() < 0 or cells.max() >= n_v):
                raise ValueError(f"{name} reference vertex indices outside [0, {n_v})")

    def __repr__(self) -> str:
        return f"HybridMesh(n_v={self.n_vertices}, n_tets={self.n_tets}, n_hexes={self.n_hexes})"

    # ==================== Sizes & cell access ====================

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_tets(self) -> int:
        return int(self.tets.shape[0])

    @property
    def n_hexes(self) -> int:
        return int(self.hexes.shape[0])

    @property
    def n_cells(self) -> int:
        return self.n_tets + self.n_hexes

    def cell_kind(self, c: int) -> CellKind:
        if not 0 <= c < self.n_cells:
            raise IndexError(f"cell {c} out of range")
        return CellKind.TET if c < self.n_tets else CellKind.HEX

    def cell_vertices(self, c: int) -> Tuple[int, ...]:
        if self.cell_kind(c) is CellKind.TET:
            return tuple(int(v) for v in self.tets[c])
        return tuple(int(v) for v in self.hexes[c - self.n_tets])

    def hex_cell(self, h: int) -> int:
        return self.n_tets + h

    def hex_faces(self, h: int) -> List[Tuple[int, int, int, int]]:
        hv = self.hexes[h]
        return [tuple(int(hv[i]) for i in f) for f in HEX_FACES]

    # ==================== Derived connectivity ====================

    @cached_property
    def tet_edges(self) -> np.ndarray:
        """Unique tet edges (n_te, 2), sorted pairs, lexicographic order."""
        if self.n_tets == 0:
            return np.zeros((0, 2), dtype=np.int64)
        pairs = np.concatenate([self.tets[:, [i, j]] for i, j in TET_EDGES])
        pairs.sort(axis=1)
        uniq = np.unique(pairs, axis=0)
        uniq.setflags(write=False)
        return uniq

    @cached_property
    def tet_edge_ids(self) -> np.ndarray:
        """(n_t, 6) global edge id of each local edge, local order TET_EDGES."""
        ids = np.zeros((self.n_tets, 6), dtype=np.int64)
        if self.n_tets:
            lookup = self.edge_index
            for e, (i, j) in enumerate(TET_EDGES):
                a = self.tets[:, i]
                b = self.tets[:, j]
                ids[:, e] = [lookup[edge_key(int(x), int(y))] for x, y in zip(a, b)]
        ids.setflags(write=False)
        return ids

    @cached_property
    def edge_index(self) -> Dict[Edge, int]:
        return {(int(a), int(b)): k for k, (a, b) in enumerate(self.tet_edges)}

    @cached_property
    def incidence(self) -> csr_matrix:
        """Sparse cell-vertex incidence (n_cells, n_v)."""
        rows = np.concatenate(
            [np.repeat(np.arange(self.n_tets), 4), np.repeat(np.arange(self.n_hexes) + self.n_tets, 8)]
        )
        cols = np.concatenate([self.tets.ravel(), self.hexes.ravel()])
        data = np.ones(rows.shape[0])
        return csr_matrix((data, (rows, cols)), shape=(self.n_cells, self.n_vertices))

    @cached_property
    def face_tables(self) -> _FaceTables:
        tris: Dict[FaceKey, List[Tuple[int, int]]] = defaultdict(list)
        for t, tv in enumerate(self.tets):
            for k, f in enumerate(TET_FACES):
                tris[face_key(tv[list(f)])].append((t, k))
        quads: Dict[FaceKey, List[Tuple[int, int, Tuple[int, int, int, int]]]] = defaultdict(list)
        for h in range(self.n_hexes):
            for k, cyc in enumerate(self.hex_faces(h)):
                quads[face_key(cyc)].append((h, k, cyc))
        return _FaceTables(dict(tris), dict(quads))


# ==================== Validation ====================

class ViolationKind(Enum):
    DEGENERATE_CELL = "degenerate_cell"
    TET_TET_SHARE = "tet_tet_share"
    HEX_HEX_SHARE = "hex_hex_share"
    HEX_HEX_NOT_EDGE = "hex_hex_not_edge"
    HEX_HEX_NOT_FACE = "hex_hex_not_face"
    HEX_TET_SHARE = "hex_tet_share"
    HEX_TET_NOT_ON_FACE = "hex_tet_not_on_face"
    HEX_TET_NOT_EDGE_OR_DIAGONAL = "hex_tet_not_edge_or_diagonal"
    MISSING_PARTNER = "missing_partner"
    FACE_OVERUSED = "face_overused"
    AMBIGUOUS_SPLIT = "ambiguous_split"
    DIAGONAL_ONLY_CONTACT = "diagonal_only_contact"


# violations that compare exactly two cells by their shared vertex set
PAIRWISE_KINDS = frozenset(
    {
        ViolationKind.TET_TET_SHARE,
        ViolationKind.HEX_HEX_SHARE,
        ViolationKind.HEX_HEX_NOT_EDGE,
        ViolationKind.HEX_HEX_NOT_FACE,
        ViolationKind.HEX_TET_SHARE,
        ViolationKind.HEX_TET_NOT_ON_FACE,
        ViolationKind.HEX_TET_NOT_EDGE_OR_DIAGONAL,
    }
)


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    cells: Tuple[int, ...]
    message: str
    severity: str = "error"  # 'error' | 'info'

    def __str__(self) -> str:
        return f"[{self.severity}] {self.message} (cells {', '.join(map(str, self.cells))})"


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def errors(self) -> List[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    @property
    def infos(self) -> List[Violation]:
        return [v for v in self.violations if v.severity != "error"]

    @property
    def is_valid(self) -> bool:
        return not self.errors

    def of_kind(self, kind: ViolationKind) -> List[Violation]:
        return [v for v in self.violations if v.kind is kind]

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


_HEX_EDGE_PAIRS = frozenset(edge_key(a, b) for a, b in HEX_EDGES)


def _hex_local(mesh: HybridMesh, h: int) -> Dict[int, int]:
    return {int(v): k for k, v in enumerate(mesh.hexes[h])}


def _hex_shares_edge(mesh: HybridMesh, h: int, pair) -> bool:
    loc = _hex_local(mesh, h)
    a, b = (loc[v] for v in pair)
    return edge_key(a, b) in _HEX_EDGE_PAIRS


def _hex_face_containing(mesh: HybridMesh, h: int, verts) -> Optional[Tuple[int, int, int, int]]:
    s = set(verts)
    for cyc in mesh.hex_faces(h):
        if s <= set(cyc):
            return cyc
    return None


def _is_face_diagonal(mesh: HybridMesh, h: int, pair) -> bool:
    a, b = pair
    for cyc in mesh.hex_faces(h):
        if {a, b} in ({cyc[0], cyc[2]}, {cyc[1], cyc[3]}):
            return True
    return False


def _diagonal_halves(cyc) -> Tuple[Tuple[FaceKey, FaceKey], Tuple[FaceKey, FaceKey]]:
    c0, c1, c2, c3 = cyc
    split_02 = (face_key((c0, c1, c2)), face_key((c0, c2, c3)))
    split_13 = (face_key((c1, c2, c3)), face_key((c1, c3, c0)))
    return split_02, split_13


def validate_spec(mesh: HybridMesh) -> ValidationReport:
    """
    Report every connectivity violation (empty report = valid mesh).

    Violations are data: nothing is raised for an invalid mesh.
    """
    out: List[Violation] = []
    n_t = mesh.n_tets

    for c in range(mesh.n_cells):
        verts = mesh.cell_vertices(c)
        if len(set(verts)) != len(verts):
            out.append(Violation(ViolationKind.DEGENERATE_CELL, (c,), f"cell {c} repeats a vertex"))

    tables = mesh.face_tables

    # ---- pairwise sharing rules ----
    if mesh.n_cells > 1:
        shared = triu(mesh.incidence @ mesh.incidence.T, k=1).tocoo()
        for c1, c2, cnt in zip(shared.row, shared.col, shared.data):
            c1, c2, cnt = int(c1), int(c2), int(round(cnt))
            k1, k2 = mesh.cell_kind(c1), mesh.cell_kind(c2)
            common = sorted(set(mesh.cell_vertices(c1)) & set(mesh.cell_vertices(c2)))
            if k1 is CellKind.TET and k2 is CellKind.TET:
                if cnt > 3:
                    out.append(Violation(ViolationKind.TET_TET_SHARE, (c1, c2), f"two tetrahedra share {cnt} vertices"))
            elif k1 is CellKind.HEX and k2 is CellKind.HEX:
                h1, h2 = c1 - n_t, c2 - n_t
                if cnt == 3 or cnt > 4:
                    out.append(Violation(ViolationKind.HEX_HEX_SHARE, (c1, c2), f"two hexahedra share {cnt} vertices"))
                elif cnt == 2 and not (_hex_shares_edge(mesh, h1, common) and _hex_shares_edge(mesh, h2, common)):
                    out.append(Violation(ViolationKind.HEX_HEX_NOT_EDGE, (c1, c2), "two hexahedra share 2 vertices that are not a common edge"))
                elif cnt == 4 and not (
                    _hex_face_containing(mesh, h1, common) and _hex_face_containing(mesh, h2, common)
                ):
                    out.append(Violation(ViolationKind.HEX_HEX_NOT_FACE, (c1, c2), "two hexahedra share 4 vertices that are not a common face"))
            else:
                tet_c, hex_c = (c1, c2) if k1 is CellKind.TET else (c2, c1)
                h = hex_c - n_t
                if cnt > 3:
                    out.append(Violation(ViolationKind.HEX_TET_SHARE, (hex_c, tet_c), f"hexahedron and tetrahedron share {cnt} vertices"))
                elif cnt == 3:
                    cyc = _hex_face_containing(mesh, h, common)
                    if cyc is None:
                        out.append(Violation(ViolationKind.HEX_TET_NOT_ON_FACE, (hex_c, tet_c), "hex-tet 3 shared vertices not on one hexahedron face"))
                        continue
                    tri = face_key(common)
                    for halves in _diagonal_halves(cyc):
                        if tri in halves:
                            other = halves[1] if halves[0] == tri else halves[0]
                            if other not in tables.tris:
                                out.append(
                                    Violation(
                                        ViolationKind.MISSING_PARTNER,
                                        (hex_c, tet_c),
                                        "hex-tet 3-shared-vertices without partner tetrahedron",
                                    )
                                )
                elif cnt == 2:
                    if _hex_shares_edge(mesh, h, common):
                        continue
                    if _is_face_diagonal(mesh, h, common):
                        out.append(
                            Violation(
                                ViolationKind.DIAGONAL_ONLY_CONTACT,
                                (hex_c, tet_c),
                                "tetrahedron touches a hexahedron only along a face diagonal",
                                severity="info",
                            )
                        )
                    else:
                        out.append(Violation(ViolationKind.HEX_TET_NOT_EDGE_OR_DIAGONAL, (hex_c, tet_c), "hex-tet 2 shared vertices neither an edge nor a face diagonal"))

    # ---- face usage ----
    for key, owners in tables.tris.items():
        if len(owners) > 2:
            out.append(Violation(ViolationKind.FACE_OVERUSED, tuple(sorted(t for t, _ in owners)), f"triangle {key} shared by {len(owners)} tetrahedra"))
    for key, owners in tables.quads.items():
        hex_cells = tuple(sorted(mesh.hex_cell(h) for h, _, _ in owners))
        if len(owners) > 2:
            out.append(Violation(ViolationKind.FACE_OVERUSED, hex_cells, f"quad {key} shared by {len(owners)} hexahedra"))
            continue
        split_02, split_13 = _diagonal_halves(owners[0][2])
        present_02 = [t for t in split_02 if t in tables.tris]
        present_13 = [t for t in split_13 if t in tables.tris]
        tet_cells = tuple(
            sorted({tc for t in present_02 + present_13 for tc, _ in tables.tris[t]})
        )
        if not tet_cells:
            continue
        if len(owners) == 2:
            out.append(Violation(ViolationKind.FACE_OVERUSED, hex_cells + tet_cells, f"tet face over-covering hexahedron face {key} shared by two hexahedra"))
        elif present_02 and present_13:
            out.append(Violation(ViolationKind.AMBIGUOUS_SPLIT, hex_cells + tet_cells, f"hexahedron face {key} split along both diagonals"))
        else:
            for t in present_02 + present_13:
                if len(tables.tris[t]) > 1:
                    out.append(Violation(ViolationKind.FACE_OVERUSED, hex_cells + tet_cells, f"triangle {t} of hexahedron face {key} also shared between two tetrahedra"))

    out.sort(key=lambda v: (v.severity != "error", v.kind.value, v.cells))
    return ValidationReport(tuple(out))


# ==================== Interfaces ====================

class InterfaceKind(Enum):
    TET_TET = "tet_tet"
    HEX_HEX = "hex_hex"
    HYBRID_JUNCTION = "hybrid_junction"


_KIND_ORDER = {InterfaceKind.TET_TET: 0, InterfaceKind.HEX_HEX: 1, InterfaceKind.HYBRID_JUNCTION: 2}


@dataclass(frozen=True)
class InterfaceRecord:
    """
    One interior face.

    - TET_TET / HEX_HEX: cells = the 2 cells, shared_vertices = sorted
      triangle or hex-cyclic quad.
    - HYBRID_JUNCTION: cells = (hex, tet_a, tet_b); shared_vertices = the quad in
      cyclic order; diagonal = sorted diagonal pair; others = the remaining two
      quad vertices; halves = the two triangles, matching cells[1], cells[2].
    """
    kind: InterfaceKind
    cells: Tuple[int, ...]
    shared_vertices: Tuple[int, ...]
    diagonal: Optional[Edge] = None
    others: Optional[Edge] = None
    halves: Optional[Tuple[FaceKey, FaceKey]] = None

    def __post_init__(self) -> None:
        expected = 3 if self.kind is InterfaceKind.HYBRID_JUNCTION else 2
        if len(self.cells) != expected:
            raise ValueError(f"{self.kind.value} interface needs {expected} cells, got {len(self.cells)}")
        if self.kind is InterfaceKind.HYBRID_JUNCTION:
            if self.diagonal is None or self.others is None or self.halves is None:
                raise ValueError("hybrid junction requires diagonal, others and halves")
            union = set(self.halves[0]) | set(self.halves[1])
            if union != set(self.shared_vertices):
                raise ValueError("junction halves must cover the quad face")
            if not set(self.diagonal) <= set(self.halves[0]) & set(self.halves[1]):
                raise ValueError("junction diagonal must be shared by both halves")

    @property
    def face(self) -> FaceKey:
        return face_key(self.shared_vertices)


@dataclass(frozen=True)
class BoundaryFace:
    vertices: Tuple[int, ...]  # tet: local face order; quad: hex cyclic order
    cell: int
    face_kind: FaceKind
    local_face: int
    tag: int = DEFAULT_BOUNDARY_TAG


def _junction_record(mesh: HybridMesh, h: int, cyc, split, diag, others) -> InterfaceRecord:
    tables = mesh.face_tables
    tets = []
    for tri in split:
        owners = tables.tris[tri]
        if len(owners) != 1:
            raise AmbiguousJunction(f"junction triangle {tri} is shared by {len(owners)} tetrahedra")
        tets.append(owners[0][0])
    return InterfaceRecord(
        kind=InterfaceKind.HYBRID_JUNCTION,
        cells=(mesh.hex_cell(h), tets[0], tets[1]),
        shared_vertices=tuple(cyc),
        diagonal=edge_key(*diag),
        others=edge_key(*others),
        halves=(split[0], split[1]),
    )


def build_interfaces(mesh: HybridMesh) -> List[InterfaceRecord]:
    """
    Classify every interior face.

    Raises:
        AmbiguousJunction: a hex quad face is touched by tet faces in a way
            that is not exactly one diagonal split, or is shared by two hexes
            and tets at the same time, or a triangle is shared by more than
            two tets.
    """
    tables = mesh.face_tables
    records: List[InterfaceRecord] = []
    junction_tris = set()

    for key, owners in tables.quads.items():
        if len(owners) > 2:
            raise AmbiguousJunction(f"quad face {key} is shared by {len(owners)} hexahedra")
        h, _, cyc = owners[0]
        split_02, split_13 = _diagonal_halves(cyc)
        has_02 = [t in tables.tris for t in split_02]
        has_13 = [t in tables.tris for t in split_13]
        touched = any(has_02) or any(has_13)
        if len(owners) == 2:
            if touched:
                raise AmbiguousJunction(f"quad face {key} is shared by two hexahedra and tetrahedra")
            h2 = owners[1][0]
            records.append(
                InterfaceRecord(
                    InterfaceKind.HEX_HEX,
                    tuple(sorted((mesh.hex_cell(h), mesh.hex_cell(h2)))),
                    tuple(cyc),
                )
            )
            continue
        if not touched:
            continue
        if all(has_02) and not any(has_13):
            rec = _junction_record(mesh, h, cyc, split_02, (cyc[0], cyc[2]), (cyc[1], cyc[3]))
        elif all(has_13) and not any(has_02):
            rec = _junction_record(mesh, h, cyc, split_13, (cyc[1], cyc[3]), (cyc[0], cyc[2]))
        else:
            raise AmbiguousJunction(f"quad face {key} is not covered by exactly one diagonal split")
        junction_tris.update(rec.halves)
        records.append(rec)

    for key, owners in tables.tris.items():
        if key in junction_tris:
            continue
        if len(owners) > 2:
            raise AmbiguousJunction(f"triangle {key} is shared by {len(owners)} tetrahedra")
        if len(owners) == 2:
            records.append(InterfaceRecord(InterfaceKind.TET_TET, tuple(sorted(t for t, _ in owners)), key))

    records.sort(key=lambda r: (_KIND_ORDER[r.kind], r.face))
    logger.debug(
        "interfaces: %d tet-tet, %d hex-hex, %d junctions",
        sum(r.kind is InterfaceKind.TET_TET for r in records),
        sum(r.kind is InterfaceKind.HEX_HEX for r in records),
        sum(r.kind is InterfaceKind.HYBRID_JUNCTION for r in records),
    )
    return records


def boundary_faces(mesh: HybridMesh, interfaces: Optional[List[InterfaceRecord]] = None) -> List[BoundaryFace]:
    """Faces with exactly one incident cell (companion query to build_interfaces)."""
    if interfaces is None:
        interfaces = build_interfaces(mesh)
    junction_tris = set()
    for rec in interfaces:
        if rec.kind is InterfaceKind.HYBRID_JUNCTION:
            junction_tris.update(rec.halves)
    tables = mesh.face_tables
    tags = mesh.boundary_tags
    out: List[BoundaryFace] = []
    for key, owners in tables.tris.items():
        if len(owners) == 1 and key not in junction_tris:
            t, k = owners[0]
            verts = tuple(int(mesh.tets[t][i]) for i in TET_FACES[k])
            out.append(BoundaryFace(verts, t, FaceKind.TRI, k, tags.get(key, DEFAULT_BOUNDARY_TAG)))
    for key, owners in tables.quads.items():
        if len(owners) != 1:
            continue
        h, k, cyc = owners[0]
        split_02, split_13 = _diagonal_halves(cyc)
        if any(t in tables.tris for t in split_02 + split_13):
            continue
        out.append(BoundaryFace(tuple(cyc), mesh.hex_cell(h), FaceKind.QUAD, k, tags.get(key, DEFAULT_BOUNDARY_TAG)))
    out.sort(key=lambda b: (b.face_kind.value, b.cell, b.local_face))
    return out


def boundary_vertex_mask(mesh: HybridMesh, interfaces: Optional[List[InterfaceRecord]] = None) -> np.ndarray:
    mask = np.zeros(mesh.n_vertices, dtype=bool)
    for bf in boundary_faces(mesh, interfaces):
        mask[list(bf.vertices)] = True
    return mask


# ==================== Tet edge classification ====================

class EdgeLabel(Enum):
    HEX_EDGE = "hex_edge"
    HEX_FACE_DIAGONAL = "hex_face_diagonal"
    PLAIN = "plain"


@dataclass(frozen=True)
class EdgeClassification:
    """
    Label of every global tet edge (index order = mesh.tet_edges).

    diagonal_others maps a HEX_FACE_DIAGONAL edge to the two remaining quad
    vertices; conflicts lists edges that are diagonals of two distinct hex
    faces or both a hex edge and a face diagonal.
    """
    labels: Tuple[EdgeLabel, ...]
    diagonal_others: Dict[Edge, Edge]
    conflicts: Tuple[Edge, ...]
    edges: np.ndarray

    def label_of(self, a: int, b: int, mesh: HybridMesh) -> EdgeLabel:
        return self.labels[mesh.edge_index[edge_key(a, b)]]

    def per_tet(self, mesh: HybridMesh) -> List[Tuple[EdgeLabel, ...]]:
        return [tuple(self.labels[e] for e in row) for row in mesh.tet_edge_ids]

    def count(self, label: EdgeLabel) -> int:
        return sum(1 for lb in self.labels if lb is label)


def tet_edge_classification(mesh: HybridMesh, interfaces: List[InterfaceRecord]) -> EdgeClassification:
    hex_edges = set()
    diag_faces: Dict[Edge, Dict[FaceKey, Edge]] = defaultdict(dict)
    for h in range(mesh.n_hexes):
        hv = mesh.hexes[h]
        for a, b in HEX_EDGES:
            hex_edges.add(edge_key(int(hv[a]), int(hv[b])))
        for cyc in mesh.hex_faces(h):
            key = face_key(cyc)
            diag_faces[edge_key(cyc[0], cyc[2])][key] = edge_key(cyc[1], cyc[3])
            diag_faces[edge_key(cyc[1], cyc[3])][key] = edge_key(cyc[0], cyc[2])

    labels: List[EdgeLabel] = []
    others: Dict[Edge, Edge] = {}
    conflicts: List[Edge] = []
    for a, b in mesh.tet_edges:
        e = (int(a), int(b))
        faces = diag_faces.get(e, {})
        if e in hex_edges:
            labels.append(EdgeLabel.HEX_EDGE)
            if faces:
                conflicts.append(e)
        elif faces:
            labels.append(EdgeLabel.HEX_FACE_DIAGONAL)
            if len(faces) > 1:
                conflicts.append(e)
            others[e] = next(iter(faces.values()))
        else:
            labels.append(EdgeLabel.PLAIN)

    for rec in interfaces:
        if rec.kind is InterfaceKind.HYBRID_JUNCTION and others.get(rec.diagonal) != rec.others:
            if rec.diagonal not in conflicts:
                conflicts.append(rec.diagonal)

    return EdgeClassification(tuple(labels), others, tuple(conflicts), mesh.tet_edges)
