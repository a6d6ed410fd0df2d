# ui/cli.py
"""
hybridfem command line.

    hybridfem gen --n 8 --d 0.10 --tet-fraction 0.20 --seed 7 -o cube.mesh
    hybridfem validate cube.mesh [--force-affine-tets]
    hybridfem solve --mesh cube.mesh --problem poisson-sin --space hyb1 --vtk u.vtk
    hybridfem convergence --problem poisson-sin --spaces q1,hyb1,hyb12,p1 --n 4,8,12,16 -o study.csv

Exit codes: 0 success, 1 validation failure, 2 I/O or parse error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Optional, Sequence, Tuple

import numpy as np

from application.analytics_engine import AnalyticsEngine
from application.convergence import ConvergenceStudy, rate_table
from application.mesh_generator import MeshGenSpec, MeshMode, face_statistics, generate_mesh
from application.pipeline import MappingMode, SolveResult, solve_on_mesh
from application.problems import ProblemKind, manufactured_problem
from engine.errors import HybridFemError, MeshFormatError, NoConvergence
from engine.function_spaces import SpaceKind
from engine.geometry import build_mappings, check_geometric_continuity
from engine.mesh import HybridMesh, build_interfaces, validate_spec
from infrastructure.config import (
    ElasticityConfig,
    QuadratureConfig,
    SolverConfig,
    StudyConfig,
    assembly_threads,
)
from infrastructure.logger import LEVELS, LoggingConfig, configure_logging
from infrastructure.mesh_io import read_mesh, write_mesh
from infrastructure.persistence import atomic_write_triplets
from infrastructure.vtk_writer import write_vtk

logger = logging.getLogger(__name__)

GAP_TOLERANCE = 1e-9
SUBCOMMANDS = ("gen", "validate", "solve", "convergence")


class ExitCode(IntEnum):
    OK = 0
    VALIDATION = 1
    IO = 2
    SOLVER = 3


class CliError(Exception):
    def __init__(self, message: str, code: ExitCode):
        super().__init__(message)
        self.code = code


def _int_list(text: str) -> Tuple[int, ...]:
    try:
        values = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _name_list(text: str) -> Tuple[str, ...]:
    return tuple(t.strip().lower() for t in text.split(",") if t.strip())


@dataclass(frozen=True)
class CliConfig:
    """
    Parsed and validated flags of one invocation.

    Space, problem and mapping names are checked against their enums here so
    a bad flag fails before any mesh is generated or read.
    """
    subcommand: str
    mesh_path: Optional[str] = None
    output: Optional[str] = None
    n: int = 4
    n_values: Tuple[int, ...] = (4, 8, 12, 16)
    d: float = 0.10
    tet_fraction: float = 0.20
    seed: int = 0
    mode: str = "hybrid"
    space: str = "hyb1"
    spaces: Tuple[str, ...] = ("q1", "hyb1", "hyb12", "p1")
    problem: str = "poisson-sin"
    mapping_mode: str = "quadratic"
    hex_degree: int = 5
    tet_degree: int = 4
    lam: float = 1.0
    mu: float = 1.0
    rtol: float = 1e-10
    max_iters: Optional[int] = None
    preconditioner: str = "none"
    strategy: str = "reduce"
    vtk: Optional[str] = None
    gnuplot: bool = False
    force_affine_tets: bool = False
    zero_source: bool = False
    dump_matrix: Optional[str] = None
    dump_prolongation: Optional[str] = None

    def __post_init__(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand '{self.subcommand}' (valid: {', '.join(SUBCOMMANDS)})")
        SpaceKind.parse(self.space)
        for s in self.spaces:
            SpaceKind.parse(s)
        ProblemKind.parse(self.problem)
        MappingMode.parse(self.mapping_mode)
        if self.mode not in {m.value for m in MeshMode}:
            raise ValueError(f"unknown mesh mode '{self.mode}' (valid: {', '.join(m.value for m in MeshMode)})")
        if self.strategy not in ("reduce", "direct"):
            raise ValueError(f"unknown assembly strategy '{self.strategy}' (valid: reduce, direct)")
        if self.subcommand == "gen" and not self.output:
            raise ValueError("gen requires -o/--output")
        if self.subcommand == "validate" and not self.mesh_path:
            raise ValueError("validate requires a mesh path")
        if self.subcommand == "convergence" and not self.output:
            raise ValueError("convergence requires -o/--output (CSV path)")
        # constructs and validates the nested configs
        self.mesh_spec(self.n)
        self.quadrature()
        self.solver()
        self.elasticity()
        if self.subcommand == "convergence":
            self.study()

    # ---- derived configs ----

    def mesh_spec(self, n: int) -> MeshGenSpec:
        return MeshGenSpec(n=n, d=self.d, tet_fraction=self.tet_fraction, seed=self.seed, mode=MeshMode(self.mode))

    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(hex_degree=self.hex_degree, tet_degree=self.tet_degree)

    def solver(self) -> SolverConfig:
        return SolverConfig(rel_residual_target=self.rtol, max_iters=self.max_iters, preconditioner=self.preconditioner)

    def elasticity(self) -> ElasticityConfig:
        return ElasticityConfig(lam=self.lam, mu=self.mu)

    def study(self) -> StudyConfig:
        return StudyConfig(
            name="CLI",
            problem=self.problem,
            spaces=self.spaces,
            n_values=self.n_values,
            distortion=self.d,
            tet_fraction=self.tet_fraction,
            seed=self.seed,
            mapping_mode=self.mapping_mode,
            mesh_mode=self.mode,
            quadrature=self.quadrature(),
            solver=self.solver(),
            elasticity=self.elasticity(),
        )

    @staticmethod
    def from_args(ns: argparse.Namespace) -> "CliConfig":
        fields = {k: v for k, v in vars(ns).items() if k in CliConfig.__dataclass_fields__ and v is not None}
        return CliConfig(**fields)


# ==================== Parser ====================

def _add_mesh_gen_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=float, help="interior vertex displacement, fraction of the cell size (default 0.10)")
    p.add_argument("--tet-fraction", dest="tet_fraction", type=float, help="fraction of hexes split into 6 tets (default 0.20)")
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p.add_argument("--mode", choices=[m.value for m in MeshMode], help="mesh mode (default hybrid)")


def _add_numeric_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", help="poisson-sin | elasticity-sin")
    p.add_argument("--mapping-mode", dest="mapping_mode", help="quadratic | affine")
    p.add_argument("--hex-degree", dest="hex_degree", type=int, help="hex quadrature degree per axis (default 5)")
    p.add_argument("--tet-degree", dest="tet_degree", type=int, help="tet quadrature degree (default 4)")
    p.add_argument("--lam", type=float, help="Lame lambda (default 1)")
    p.add_argument("--mu", type=float, help="Lame mu (default 1)")
    p.add_argument("--rtol", type=float, help="CG relative residual target (default 1e-10)")
    p.add_argument("--max-iters", dest="max_iters", type=int, help="CG iteration cap (default 10 * dofs)")
    p.add_argument("--preconditioner", choices=["none", "jacobi"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridfem", description="Hybrid hex-tet finite elements")
    parser.add_argument("--log-level", dest="log_level", default="WARNING", choices=LEVELS)
    parser.add_argument("--log-file", dest="log_file", default=None)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen = sub.add_parser("gen", help="generate a perturbed unit-cube mesh")
    gen.add_argument("--n", type=int, help="cells per axis (default 4)")
    _add_mesh_gen_flags(gen)
    gen.add_argument("-o", "--output", required=True)

    val = sub.add_parser("validate", help="check connectivity and geometric continuity of a mesh")
    val.add_argument("mesh_path")
    val.add_argument("--force-affine-tets", dest="force_affine_tets", action="store_true", default=None)

    solve = sub.add_parser("solve", help="solve a manufactured problem on one mesh")
    solve.add_argument("--mesh", dest="mesh_path", help="mesh file (default: generate from the flags below)")
    solve.add_argument("--n", type=int)
    _add_mesh_gen_flags(solve)
    _add_numeric_flags(solve)
    solve.add_argument("--space", help="q1 | p1 | dhyb12 | hyb12 | hyb1")
    solve.add_argument("--strategy", choices=["reduce", "direct"])
    solve.add_argument("--zero-source", dest="zero_source", action="store_true", default=None)
    solve.add_argument("--vtk", help="write the solution as VTK legacy ASCII")
    solve.add_argument("--dump-matrix", dest="dump_matrix", help="write the reduced matrix as triplets")
    solve.add_argument("--dump-prolongation", dest="dump_prolongation", help="write P as triplets")

    conv = sub.add_parser("convergence", help="run a refinement study")
    conv.add_argument("--n", dest="n_values", type=_int_list, help="comma-separated cells per axis")
    conv.add_argument("--spaces", type=_name_list, help="comma-separated spaces")
    _add_mesh_gen_flags(conv)
    _add_numeric_flags(conv)
    conv.add_argument("-o", "--output", required=True, help="CSV path")
    conv.add_argument("--gnuplot", action="store_true", default=None)
    return parser


# ==================== Subcommands ====================

def _load_mesh(path: str) -> HybridMesh:
    try:
        return read_mesh(path)
    except MeshFormatError as exc:
        raise CliError(f"{path}: {exc}", ExitCode.IO) from exc
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", ExitCode.IO) from exc


def cmd_gen(cfg: CliConfig) -> int:
    spec = cfg.mesh_spec(cfg.n)
    try:
        mesh = generate_mesh(spec)
    except HybridFemError as exc:
        raise CliError(str(exc), ExitCode.VALIDATION) from exc
    try:
        write_mesh(cfg.output, mesh)
    except OSError as exc:
        raise CliError(f"cannot write {cfg.output}: {exc}", ExitCode.IO) from exc
    print(f"wrote {cfg.output} (n={spec.n} d={spec.d} tet_fraction={spec.effective_tet_fraction} seed={spec.seed})")
    print(face_statistics(mesh).summary())
    return ExitCode.OK


def cmd_validate(cfg: CliConfig) -> int:
    mesh = _load_mesh(cfg.mesh_path)
    print(f"{mesh!r}")
    report = validate_spec(mesh)
    for v in report:
        print(v)
    if not report.is_valid:
        print(f"INVALID: {len(report.errors)} violation(s)")
        return ExitCode.VALIDATION
    try:
        interfaces = build_interfaces(mesh)
        mappings = build_mappings(mesh, interfaces, affine_tets=cfg.force_affine_tets)
    except HybridFemError as exc:
        print(f"INVALID: {exc}")
        return ExitCode.VALIDATION
    geo = check_geometric_continuity(mesh, mappings, interfaces)
    print(f"interfaces={len(interfaces)} max_geometric_gap={geo.max_gap:.3e}")
    print(face_statistics(mesh).summary())
    if geo.max_gap > GAP_TOLERANCE:
        print(f"INVALID: geometric gap above {GAP_TOLERANCE:g}")
        return ExitCode.VALIDATION
    print("OK")
    return ExitCode.OK


def _point_data(result: SolveResult) -> dict:
    """
    Point data on the VTK points (vertices, then tet edge nodes).

    "u" is the field value at every point. Only the vertex rows carry data for
    P1, Q1 and Hyb1; their edge rows follow from the vertex values. Hyb12 and
    DHyb12 also get "u_edge_bubble": edge value minus the mean of its endpoints,
    zero at vertices.
    """
    mesh, dofs = result.mesh, result.dofs
    raw = dofs.raw_values(result.solution)
    edges = mesh.tet_edges
    vector = raw.ndim == 2
    if not vector:
        raw = raw[None, :]
    if dofs.space_kind.uses_p2:
        full = raw
    else:
        # linear tets: the value at an edge node is the endpoint mean
        mids = 0.5 * (raw[:, edges[:, 0]] + raw[:, edges[:, 1]]) if edges.size else raw[:, :0]
        full = np.concatenate([raw, mids], axis=1)
    data = {"u": full.T if vector else full[0]}
    if dofs.space_kind in (SpaceKind.HYB12, SpaceKind.DHYB12):
        bubble = np.zeros_like(full)
        bubble[:, mesh.n_vertices:] = full[:, mesh.n_vertices:] - 0.5 * (full[:, edges[:, 0]] + full[:, edges[:, 1]])
        data["u_edge_bubble"] = bubble.T if vector else bubble[0]
    return data


def cmd_solve(cfg: CliConfig) -> int:
    if cfg.mesh_path:
        mesh = _load_mesh(cfg.mesh_path)
    else:
        try:
            mesh = generate_mesh(cfg.mesh_spec(cfg.n))
        except HybridFemError as exc:
            raise CliError(str(exc), ExitCode.VALIDATION) from exc
    problem = manufactured_problem(ProblemKind.parse(cfg.problem), lam=cfg.lam, mu=cfg.mu)
    form, exact = problem.form, problem.exact
    if cfg.zero_source:
        zero = problem.form.dirichlet_value
        form = replace(form, source=zero)
        exact = None
    try:
        result = solve_on_mesh(
            mesh, form, SpaceKind.parse(cfg.space), exact=exact,
            mapping_mode=MappingMode.parse(cfg.mapping_mode),
            quadrature=cfg.quadrature(), solver=cfg.solver(),
            threads=assembly_threads(), strategy=cfg.strategy,
        )
    except NoConvergence as exc:
        raise CliError(str(exc), ExitCode.SOLVER) from exc
    except HybridFemError as exc:
        raise CliError(str(exc), ExitCode.VALIDATION) from exc

    try:
        if cfg.vtk:
            write_vtk(cfg.vtk, mesh, result.mappings, _point_data(result),
                      title=f"{cfg.problem} {cfg.space} seed={cfg.seed}")
        if cfg.dump_matrix:
            atomic_write_triplets(cfg.dump_matrix, *result.system.triplets())
        if cfg.dump_prolongation:
            atomic_write_triplets(cfg.dump_prolongation, *result.dofs.prolongation_triplets())
    except OSError as exc:
        raise CliError(f"cannot write output: {exc}", ExitCode.IO) from exc

    print(result.summary() + f" seed={cfg.seed}")
    if exact is None:
        print(f"max_abs_u={float(np.abs(result.solution).max(initial=0.0)):.3e}")
    return ExitCode.OK


def cmd_convergence(cfg: CliConfig) -> int:
    study = ConvergenceStudy(cfg.study(), cfg.output, write_gnuplot=cfg.gnuplot, threads=assembly_threads())
    try:
        records = study.run()
    except OSError as exc:
        raise CliError(f"cannot write {cfg.output}: {exc}", ExitCode.IO) from exc

    print(f"wrote {cfg.output} ({len(records)} rows, seed={cfg.seed})")
    for space, rate in rate_table(records).items():
        rows = [r for r in records if r.space == space]
        rates = AnalyticsEngine.pairwise_rates([r.dofs for r in rows], [r.l2_rel_error for r in rows])
        shown = "n/a" if rate is None else f"{rate:.2f}"
        print(f"{space}: fitted_rate={shown} pairwise={', '.join(f'{x:.2f}' for x in rates) or 'n/a'}")
    if study.failures:
        for f in study.failures:
            print(f"FAILED {f.space} n={f.n}: {f.message}")
        solver_failed = any(isinstance(f.exception, NoConvergence) for f in study.failures)
        return ExitCode.SOLVER if solver_failed else ExitCode.VALIDATION
    return ExitCode.OK


COMMANDS = {
    "gen": cmd_gen,
    "validate": cmd_validate,
    "solve": cmd_solve,
    "convergence": cmd_convergence,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    configure_logging(LoggingConfig(level=ns.log_level, log_file=ns.log_file))
    try:
        cfg = CliConfig.from_args(ns)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ExitCode.IO
    try:
        return int(COMMANDS[cfg.subcommand](cfg))
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return int(exc.code)


if __name__ == "__main__":
    sys.exit(main())
