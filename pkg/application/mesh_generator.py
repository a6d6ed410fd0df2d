"""
Perturbed unit-cube mesh generator.

Procedure:
1. Divide the unit cube regularly into n^3 hexahedra.
2. Displace every interior vertex by a uniform random vector with components
   in [-d/n, d/n]; boundary vertices stay put, so boundary faces are planar.
3. Split a random tet_fraction of the hexahedra into 6 tetrahedra each.

The split is the corner-based (Kuhn) decomposition around the diagonal from
the lowest-index corner to the highest-index corner. On every cube face it
cuts along the diagonal through the face's lowest-index vertex, so split
neighbours agree and a split cube next to a hex gives a two-tet face cover.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

import numpy as np

from engine.errors import GenerationFailed, HybridFemError
from engine.geometry import build_mappings
from engine.mesh import HybridMesh, build_interfaces, boundary_faces, face_key, validate_spec

logger = logging.getLogger(__name__)

DIHEDRAL_ADVICE_DEG = 5.0


class MeshMode(Enum):
    ALL_HEX = "all-hex"
    ALL_TET = "all-tet"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class MeshGenSpec:
    n: int
    d: float = 0.10
    tet_fraction: float = 0.20
    seed: int = 0
    mode: MeshMode = MeshMode.HYBRID
    max_retries: int = 10

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not 0.0 <= self.d <= 0.3:
            raise ValueError(f"d must be in [0, 0.3], got {self.d}")
        if not 0.0 <= self.tet_fraction <= 1.0:
            raise ValueError(f"tet_fraction must be in [0, 1], got {self.tet_fraction}")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")

    @property
    def effective_tet_fraction(self) -> float:
        if self.mode is MeshMode.ALL_HEX:
            return 0.0
        if self.mode is MeshMode.ALL_TET:
            return 1.0
        return self.tet_fraction


# corners of the unit cube in reference hexahedron order
_CUBE = np.array(
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]
)


def _kuhn_template() -> List[Tuple[int, int, int, int]]:
    """Local (hex-numbered) vertex quadruples of the 6 positively oriented tets."""
    lookup = {tuple(c): k for k, c in enumerate(_CUBE)}
    tets = []
    for perm in itertools.permutations(range(3)):
        path = [np.zeros(3, dtype=int)]
        for axis in perm:
            step = path[-1].copy()
            step[axis] = 1
            path.append(step)
        quad = [lookup[tuple(p)] for p in path]
        # odd permutations give negative volume
        inversions = sum(1 for i in range(3) for j in range(i + 1, 3) if perm[i] > perm[j])
        if inversions % 2:
            quad[2], quad[3] = quad[3], quad[2]
        tets.append(tuple(quad))
    return tets


KUHN_TETS = _kuhn_template()


def grid_vertices(n: int) -> np.ndarray:
    """(n+1)^3 grid points, index i + (n+1) (j + (n+1) k)."""
    r = np.arange(n + 1) / n
    K, J, I = np.meshgrid(r, r, r, indexing="ij")
    return np.column_stack([I.ravel(), J.ravel(), K.ravel()])


def grid_hexes(n: int) -> np.ndarray:
    """(n^3, 8) hex connectivity, hex index i + n (j + n k)."""
    m = n + 1
    k, j, i = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    base = (i + m * (j + m * k)).ravel()
    offsets = _CUBE[:, 0] + m * (_CUBE[:, 1] + m * _CUBE[:, 2])
    return base[:, None] + offsets[None, :]


def _displace(n: int, d: float, rng: np.random.Generator) -> np.ndarray:
    verts = grid_vertices(n)
    shift = rng.uniform(-d / n, d / n, size=verts.shape)
    ijk = np.rint(verts * n).astype(int)
    interior = np.all((ijk > 0) & (ijk < n), axis=1)
    verts[interior] += shift[interior]
    return verts


def _assemble(n: int, verts: np.ndarray, split: np.ndarray) -> HybridMesh:
    hexes = grid_hexes(n)
    template = np.asarray(KUHN_TETS)
    tets = hexes[split][:, template].reshape(-1, 4)
    return HybridMesh(verts, tets, hexes[~split])


def _attempt(spec: MeshGenSpec, rng: np.random.Generator) -> HybridMesh:
    n = spec.n
    verts = _displace(n, spec.d, rng)
    n_cells = n ** 3
    n_split = int(round(spec.effective_tet_fraction * n_cells))
    split = np.zeros(n_cells, dtype=bool)
    if n_split:
        split[rng.choice(n_cells, size=n_split, replace=False)] = True
    return _assemble(n, verts, split)


def generate_mesh(spec: MeshGenSpec) -> HybridMesh:
    """
    Deterministic for a fixed spec (seed included).

    Raises:
        GenerationFailed: no attempt within max_retries produced a valid mesh
            with positive Jacobians.
    """
    last_problem = ""
    for attempt in range(spec.max_retries):
        rng = np.random.default_rng(spec.seed if attempt == 0 else [spec.seed, attempt])
        mesh = _attempt(spec, rng)
        report = validate_spec(mesh)
        if not report.is_valid:
            last_problem = str(report.errors[0])
            logger.warning("generation attempt %d rejected: %s", attempt + 1, last_problem)
            continue
        try:
            build_mappings(mesh, build_interfaces(mesh))
        except HybridFemError as exc:
            last_problem = str(exc)
            logger.warning("generation attempt %d rejected: %s", attempt + 1, last_problem)
            continue
        logger.info(
            "generated %r (n=%d, d=%.3f, tet_fraction=%.2f, seed=%d, attempt %d)",
            mesh, spec.n, spec.d, spec.effective_tet_fraction, spec.seed, attempt + 1,
        )
        return mesh
    raise GenerationFailed(f"no valid mesh after {spec.max_retries} attempts: {last_problem}")


# ==================== Statistics ====================

@dataclass(frozen=True)
class FaceStatistics:
    n_tets: int
    n_hexes: int
    n_quad_faces: int
    mean_dihedral_deg: float
    max_dihedral_deg: float
    n_above_advice: int

    @property
    def n_cells(self) -> int:
        return self.n_tets + self.n_hexes

    @property
    def tet_share(self) -> float:
        return self.n_tets / self.n_cells if self.n_cells else 0.0

    def summary(self) -> str:
        return (
            f"cells={self.n_cells} tets={self.n_tets} hexes={self.n_hexes} "
            f"tet_share={100.0 * self.tet_share:.1f}% "
            f"dihedral_mean={self.mean_dihedral_deg:.2f}deg dihedral_max={self.max_dihedral_deg:.2f}deg "
            f"faces_over_{DIHEDRAL_ADVICE_DEG:g}deg={self.n_above_advice}/{self.n_quad_faces}"
        )


def quad_dihedral_deg(corners: np.ndarray) -> np.ndarray:
    """
    Angle between the two triangles of each quad split along (c0, c2).

    corners: (m, 4, 3) in cyclic order. Planar quads give 0.
    """
    c0, c1, c2, c3 = (corners[:, k] for k in range(4))
    n1 = np.cross(c1 - c0, c2 - c0)
    n2 = np.cross(c2 - c0, c3 - c0)
    cos = np.einsum("mi,mi->m", n1, n2) / (np.linalg.norm(n1, axis=1) * np.linalg.norm(n2, axis=1))
    return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))


def face_statistics(mesh: HybridMesh) -> FaceStatistics:
    """Element counts and non-planarity of the interior hex quad faces."""
    boundary = {face_key(bf.vertices) for bf in boundary_faces(mesh)}
    quads = [
        owners[0][2] for key, owners in mesh.face_tables.quads.items() if key not in boundary
    ]
    if quads:
        angles = quad_dihedral_deg(mesh.vertices[np.asarray(quads)])
        mean, worst = float(angles.mean()), float(angles.max())
        above = int((angles > DIHEDRAL_ADVICE_DEG).sum())
    else:
        mean = worst = 0.0
        above = 0
    return FaceStatistics(mesh.n_tets, mesh.n_hexes, len(quads), mean, worst, above)
