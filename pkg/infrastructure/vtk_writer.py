"""
VTK legacy ASCII unstructured-grid export of the mapped geometry.

Tets are written as 10-node quadratic tetrahedra (their edge nodes are the
mapping's edge nodes, so curved junction faces show up), hexes as 8-node
hexahedra. Points are the mesh vertices followed by one node per tet edge.
"""
from __future__ import annotations

import logging
from typing import Dict, List, Optional

import numpy as np

from engine.geometry import MappingSet
from engine.mesh import HybridMesh
from .persistence import atomic_write_text

logger = logging.getLogger(__name__)

VTK_HEX = 12
VTK_QUADRATIC_TETRA = 24

# our tet edge order (0,1),(0,2),(0,3),(1,2),(1,3),(2,3)
# VTK expects (0,1),(1,2),(0,2),(0,3),(1,3),(2,3)
_VTK_TET_EDGE_ORDER = (0, 3, 1, 2, 4, 5)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def format_vtk(
    mesh: HybridMesh,
    mappings: MappingSet,
    point_data: Optional[Dict[str, np.ndarray]] = None,
    title: str = "hybridfem",
) -> str:
    """
    point_data arrays have one row per point (n_v + n_tet_edges); 1-D arrays
    are written as SCALARS, (n, 3) arrays as VECTORS.
    """
    n_v = mesh.n_vertices
    points = np.vstack([mesh.vertices, mappings.edge_nodes])
    n_pts = points.shape[0]

    cells: List[List[int]] = []
    types: List[int] = []
    for t in range(mesh.n_tets):
        edge_ids = n_v + mesh.tet_edge_ids[t]
        cells.append([int(v) for v in mesh.tets[t]] + [int(edge_ids[k]) for k in _VTK_TET_EDGE_ORDER])
        types.append(VTK_QUADRATIC_TETRA)
    for h in range(mesh.n_hexes):
        cells.append([int(v) for v in mesh.hexes[h]])
        types.append(VTK_HEX)

    out = [
        "# vtk DataFile Version 3.0",
        title[:255],
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n_pts} double",
    ]
    out.extend(" ".join(_fmt(c) for c in p) for p in points)
    size = sum(len(c) + 1 for c in cells)
    out.append(f"CELLS {len(cells)} {size}")
    out.extend(f"{len(c)} " + " ".join(map(str, c)) for c in cells)
    out.append(f"CELL_TYPES {len(cells)}")
    out.extend(str(t) for t in types)

    if point_data:
        out.append(f"POINT_DATA {n_pts}")
        for name, values in point_data.items():
            arr = np.asarray(values, dtype=float)
            if arr.shape[0] != n_pts:
                raise ValueError(f"point data '{name}' has {arr.shape[0]} rows, expected {n_pts}")
            if arr.ndim == 1:
                out.append(f"SCALARS {name} double 1")
                out.append("LOOKUP_TABLE default")
                out.extend(_fmt(v) for v in arr)
            else:
                out.append(f"VECTORS {name} double")
                out.extend(" ".join(_fmt(c) for c in row) for row in arr)
    return "\n".join(out) + "\n"


def write_vtk(
    path: str,
    mesh: HybridMesh,
    mappings: MappingSet,
    point_data: Optional[Dict[str, np.ndarray]] = None,
    title: str = "hybridfem",
) -> None:
    atomic_write_text(path, format_vtk(mesh, mappings, point_data, title))
    logger.info("wrote VTK (%d cells) to %s", mesh.n_cells, path)
