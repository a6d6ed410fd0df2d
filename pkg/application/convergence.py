"""
Refinement studies.

run_convergence produces one ConvergenceRecord per (space, n). P1 always runs
on all-tet meshes and Q1 on all-hex meshes; the hybrid spaces use the mesh
template's mode. ConvergenceStudy wraps a run with its artifacts: the CSV is
rewritten after every record so a failing run leaves the finished rows on
disk, plus a JSON sidecar with the study config and an optional gnuplot script.
"""
from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from engine.errors import HybridFemError
from engine.function_spaces import SpaceKind
from engine.mesh import HybridMesh
from infrastructure.config import QuadratureConfig, SolverConfig, StudyConfig
from infrastructure.persistence import atomic_write_csv, atomic_write_json, atomic_write_text

from .analytics_engine import AnalyticsEngine
from .mesh_generator import MeshGenSpec, MeshMode, generate_mesh
from .pipeline import MappingMode, solve_on_mesh
from .problems import ManufacturedProblem, ProblemKind, manufactured_problem

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "problem", "space", "n", "dofs", "l2_rel_error", "assembly_s", "solve_s", "mapping_mode", "seed",
)


@dataclass(frozen=True)
class ConvergenceRecord:
    problem: str
    space: str
    n: int
    dofs: int
    l2_rel_error: float
    assembly_s: float
    solve_s: float
    mapping_mode: str
    seed: int

    def __post_init__(self) -> None:
        if self.l2_rel_error <= 0.0:
            raise ValueError(f"l2_rel_error must be positive, got {self.l2_rel_error}")
        if self.dofs <= 0:
            raise ValueError("dofs must be positive")

    def as_row(self) -> Tuple:
        return (
            self.problem, self.space, self.n, self.dofs, f"{self.l2_rel_error:.10e}",
            f"{self.assembly_s:.6f}", f"{self.solve_s:.6f}", self.mapping_mode, self.seed,
        )


def mesh_mode_for(space: SpaceKind, template_mode: MeshMode) -> MeshMode:
    if space is SpaceKind.P1:
        return MeshMode.ALL_TET
    if space is SpaceKind.Q1:
        return MeshMode.ALL_HEX
    return template_mode


def run_convergence(
    problem: ManufacturedProblem,
    spaces: Sequence[SpaceKind],
    n_values: Sequence[int],
    template: MeshGenSpec,
    mapping_mode: MappingMode = MappingMode.QUADRATIC,
    quadrature: Optional[QuadratureConfig] = None,
    solver: Optional[SolverConfig] = None,
    threads: int = 1,
    on_record: Optional[Callable[[ConvergenceRecord], None]] = None,
    mesh_cache: Optional[Dict[Tuple[int, MeshMode], HybridMesh]] = None,
) -> List[ConvergenceRecord]:
    """
    One record per (space, n), spaces outer, n inner.

    Errors from a solve propagate; records finished before the failure have
    already been passed to on_record.
    """
    meshes = {} if mesh_cache is None else mesh_cache
    records: List[ConvergenceRecord] = []
    for space in spaces:
        for n in n_values:
            mode = mesh_mode_for(space, template.mode)
            key = (n, mode)
            if key not in meshes:
                meshes[key] = generate_mesh(replace(template, n=n, mode=mode))
            result = solve_on_mesh(
                meshes[key], problem.form, space, exact=problem.exact,
                mapping_mode=mapping_mode, quadrature=quadrature, solver=solver, threads=threads,
            )
            rec = ConvergenceRecord(
                problem=problem.kind.value,
                space=space.value,
                n=n,
                dofs=result.dof_count,
                l2_rel_error=float(result.l2_rel_error),
                assembly_s=result.assembly_s,
                solve_s=result.solve_s,
                mapping_mode=mapping_mode.value,
                seed=template.seed,
            )
            logger.info(
                "convergence %s %s n=%d: dofs=%d error=%.4e",
                rec.problem, rec.space, n, rec.dofs, rec.l2_rel_error,
            )
            records.append(rec)
            if on_record is not None:
                on_record(rec)
    return records


def rate_table(records: Sequence[ConvergenceRecord], last: int = 3) -> Dict[str, Optional[float]]:
    """Fitted rate per space (None with a single refinement)."""
    out: Dict[str, Optional[float]] = {}
    for space in dict.fromkeys(r.space for r in records):
        rows = sorted((r for r in records if r.space == space), key=lambda r: r.dofs)
        out[space] = AnalyticsEngine.fit_rate([r.dofs for r in rows], [r.l2_rel_error for r in rows], last)
    return out


def gnuplot_script(csv_name: str, spaces: Sequence[str], title: str) -> str:
    plots = ", \\\n     ".join(
        f"'< grep \",{s},\" {csv_name}' using ($4**(1./3)):5 with linespoints title '{s}'"
        for s in spaces
    )
    return "\n".join(
        [
            "set datafile separator ','",
            "set logscale xy",
            "set xlabel '(#dofs)^{1/3}'",
            "set ylabel 'relative L2 error'",
            f"set title '{title}'",
            "set key bottom left",
            f"plot {plots}",
            "",
        ]
    )


@dataclass
class StudyFailure:
    space: str
    n: int
    message: str
    exception: HybridFemError = field(repr=False)


class ConvergenceStudy:
    """
    Owns one study run and its artifacts.
    - CSV rewritten after every record (partial results survive failures)
    - JSON sidecar with the config and seed
    - optional gnuplot script next to the CSV
    """

    def __init__(
        self,
        config: StudyConfig,
        csv_path: str,
        *,
        write_sidecar: bool = True,
        write_gnuplot: bool = False,
        threads: int = 1,
    ):
        self.config = config
        self.csv_path = csv_path
        self.write_sidecar = write_sidecar
        self.write_gnuplot = write_gnuplot
        self.threads = threads
        self.records: List[ConvergenceRecord] = []
        self.failures: List[StudyFailure] = []
        self._meshes: Dict[Tuple[int, MeshMode], HybridMesh] = {}

    @property
    def sidecar_path(self) -> str:
        return os.path.splitext(self.csv_path)[0] + ".json"

    @property
    def gnuplot_path(self) -> str:
        return os.path.splitext(self.csv_path)[0] + ".gp"

    def _flush(self) -> None:
        atomic_write_csv(self.csv_path, CSV_HEADER, (r.as_row() for r in self.records))

    def _append(self, rec: ConvergenceRecord) -> None:
        self.records.append(rec)
        self._flush()

    def run(self) -> List[ConvergenceRecord]:
        cfg = self.config
        problem = manufactured_problem(
            ProblemKind.parse(cfg.problem), lam=cfg.elasticity.lam, mu=cfg.elasticity.mu
        )
        spaces = [SpaceKind.parse(s) for s in cfg.spaces]
        template = MeshGenSpec(
            n=min(cfg.n_values), d=cfg.distortion, tet_fraction=cfg.tet_fraction, seed=cfg.seed,
            mode=MeshMode(cfg.mesh_mode),
        )
        mapping_mode = MappingMode.parse(cfg.mapping_mode)

        started = time.time()
        self._flush()
        if self.write_sidecar:
            atomic_write_json(self.sidecar_path, {"config": cfg, "seed": cfg.seed, "started_at": started})

        # one space at a time so a failure only loses that space's remaining rows
        for space in spaces:
            for n in cfg.n_values:
                try:
                    run_convergence(
                        problem, [space], [n], template, mapping_mode,
                        quadrature=cfg.quadrature, solver=cfg.solver,
                        threads=self.threads, on_record=self._append, mesh_cache=self._meshes,
                    )
                except HybridFemError as exc:
                    logger.error("run %s n=%d failed: %s", space.value, n, exc)
                    self.failures.append(StudyFailure(space.value, n, str(exc), exc))
                    break

        if self.write_gnuplot:
            atomic_write_text(
                self.gnuplot_path,
                gnuplot_script(os.path.basename(self.csv_path), [s.value for s in spaces], f"{cfg.problem} ({mapping_mode.value})"),
            )
        if self.write_sidecar:
            atomic_write_json(
                self.sidecar_path,
                {
                    "config": cfg,
                    "seed": cfg.seed,
                    "started_at": started,
                    "finished_at": time.time(),
                    "rates": rate_table(self.records),
                    "failures": [{"space": f.space, "n": f.n, "message": f.message} for f in self.failures],
                },
            )
        return list(self.records)
