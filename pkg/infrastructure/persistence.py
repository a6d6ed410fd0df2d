# infrastructure/persistence.py

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, is_dataclass
from enum import Enum
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np


def _ensure_parent_dir(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def _atomic_write_bytes(path: str, data: bytes) -> None:
    """
    Write to a temp file in the same directory and replace.
    Readers never observe a half-written artifact.
    """
    _ensure_parent_dir(path)
    target_dir = os.path.dirname(os.path.abspath(path)) or "."

    fd = None
    tmp_path = None
    try:
        fd, tmp_path = tempfile.mkstemp(prefix=".tmp_", dir=target_dir)
        with os.fdopen(fd, "wb") as f:
            fd = None
            f.write(data)
            f.flush()
            os.fsync(f.fileno())

        os.replace(tmp_path, path)
        tmp_path = None
    finally:
        if fd is not None:
            try:
                os.close(fd)
            except OSError:
                pass
        if tmp_path is not None:
            try:
                os.unlink(tmp_path)
            except OSError:
                pass


def atomic_write_text(path: str, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def to_jsonable(x: Any) -> Any:
    """
    Convert configs, enums, numpy scalars/arrays and records into
    JSON-serialisable primitives.
    """
    if x is None or isinstance(x, (str, bool, int, float)):
        return x
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Enum):
        return x.value
    if is_dataclass(x) and not isinstance(x, type):
        return to_jsonable(asdict(x))
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    return str(x)


def atomic_write_json(path: str, obj: Dict[str, Any]) -> None:
    safe_obj = to_jsonable(obj)
    payload = json.dumps(safe_obj, ensure_ascii=False, indent=2, sort_keys=True).encode("utf-8")
    _atomic_write_bytes(path, payload)


def read_json(path: str) -> Dict[str, Any]:
    with open(path, "rb") as f:
        return json.loads(f.read().decode("utf-8"))


def atomic_write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([to_jsonable(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def read_csv(path: str) -> List[Dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def atomic_write_triplets(path: str, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray) -> None:
    """Sparse matrix dump, one `row col value` line per stored entry."""
    lines = [f"{int(r)} {int(c)} {float(v):.17g}" for r, c, v in zip(rows, cols, vals)]
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_triplets(path: str):
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    with open(path, "r", encoding="utf-8") as f:
        for raw in f:
            s = raw.strip()
            if not s:
                continue
            r, c, v = s.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(float(v))
    return np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64), np.asarray(vals)
