"""
Plain-text mesh format.

    nv nt nh
    x y z            (nv lines)
    i0 i1 i2 i3      (nt lines, zero-based)
    i0 ... i7        (nh lines, reference hexahedron vertex ordering)

Blank lines and lines starting with '#' are ignored. Coordinates are written
with %.17g so a write/read cycle is lossless and the output is deterministic.
"""
from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np

from engine.errors import MeshFormatError
from engine.mesh import HybridMesh
from .persistence import atomic_write_text

logger = logging.getLogger(__name__)


def format_mesh(mesh: HybridMesh) -> str:
    lines = [f"{mesh.n_vertices} {mesh.n_tets} {mesh.n_hexes}"]
    lines.extend(" ".join(f"{c:.17g}" for c in v) for v in mesh.vertices)
    lines.extend(" ".join(str(int(i)) for i in t) for t in mesh.tets)
    lines.extend(" ".join(str(int(i)) for i in h) for h in mesh.hexes)
    return "\n".join(lines) + "\n"


def write_mesh(path: str, mesh: HybridMesh) -> None:
    atomic_write_text(path, format_mesh(mesh))
    logger.info("wrote %r to %s", mesh, path)


def _content_lines(text: str) -> List[Tuple[int, List[str]]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if s and not s.startswith("#"):
            out.append((lineno, s.split()))
    return out


def _ints(tokens: List[str], width: int, lineno: int, what: str) -> List[int]:
    if len(tokens) != width:
        raise MeshFormatError(f"{what} needs {width} values, got {len(tokens)}", lineno)
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise MeshFormatError(f"{what} has a non-integer entry", lineno) from None


def parse_mesh(text: str) -> HybridMesh:
    """
    Raises:
        MeshFormatError: with the 1-based line number of the first bad line.
    """
    lines = _content_lines(text)
    if not lines:
        raise MeshFormatError("empty mesh file", 1)
    lineno, header = lines[0]
    nv, nt, nh = _ints(header, 3, lineno, "header")
    if min(nv, nt, nh) < 0:
        raise MeshFormatError("negative count in header", lineno)
    expected = 1 + nv + nt + nh
    if len(lines) < expected:
        last = lines[-1][0]
        raise MeshFormatError(f"expected {expected} content lines, found {len(lines)}", last + 1)
    if len(lines) > expected:
        raise MeshFormatError("trailing content after the last cell", lines[expected][0])

    verts = np.empty((nv, 3))
    for k in range(nv):
        lineno, tokens = lines[1 + k]
        if len(tokens) != 3:
            raise MeshFormatError(f"vertex needs 3 coordinates, got {len(tokens)}", lineno)
        try:
            verts[k] = [float(t) for t in tokens]
        except ValueError:
            raise MeshFormatError("vertex has a non-numeric coordinate", lineno) from None
        if not np.all(np.isfinite(verts[k])):
            raise MeshFormatError("vertex coordinate is not finite", lineno)

    def cells(start: int, count: int, width: int, what: str) -> np.ndarray:
        arr = np.empty((count, width), dtype=np.int64)
        for k in range(count):
            lineno, tokens = lines[start + k]
            row = _ints(tokens, width, lineno, what)
            if min(row) < 0 or max(row) >= nv:
                raise MeshFormatError(f"{what} references a vertex outside [0, {nv})", lineno)
            arr[k] = row
        return arr

    tets = cells(1 + nv, nt, 4, "tetrahedron")
    hexes = cells(1 + nv + nt, nh, 8, "hexahedron")
    return HybridMesh(verts, tets, hexes)


def read_mesh(path: str) -> HybridMesh:
    with open(path, "r", encoding="utf-8") as f:
        mesh = parse_mesh(f.read())
    logger.info("read %r from %s", mesh, path)
    return mesh
