"""
Refinement study tests.

Critical tests:
1. Study artifacts: CSV rows, JSON sidecar, gnuplot script
2. A failing space is recorded and skipped, finished rows survive
3. Quadratic rates, error ordering and matched-dof ratios (slow)
4. Affine tet mappings lose the rate on distorted meshes (slow)
"""
import os
from dataclasses import replace

import pytest

from application.analytics_engine import AnalyticsEngine
from application.convergence import (
    CSV_HEADER,
    ConvergenceRecord,
    ConvergenceStudy,
    gnuplot_script,
    mesh_mode_for,
    rate_table,
)
from application.mesh_generator import MeshMode
from engine.function_spaces import SpaceKind
from infrastructure.config import SolverConfig, StudyConfig
from infrastructure.persistence import read_csv, read_json


def record(space, n, dofs, error):
    return ConvergenceRecord("poisson-sin", space, n, dofs, error, 0.0, 0.0, "quadratic", 7)


def curve(records, space):
    rows = sorted((r for r in records if r.space == space), key=lambda r: r.n)
    return [r.dofs for r in rows], [r.l2_rel_error for r in rows]


class TestRecord:
    def test_rejects_non_positive_error(self):
        with pytest.raises(ValueError):
            record("q1", 4, 27, 0.0)

    def test_row_matches_header(self):
        assert len(record("q1", 4, 27, 0.1).as_row()) == len(CSV_HEADER)


class TestHelpers:
    def test_mesh_mode_for(self):
        assert mesh_mode_for(SpaceKind.P1, MeshMode.HYBRID) is MeshMode.ALL_TET
        assert mesh_mode_for(SpaceKind.Q1, MeshMode.HYBRID) is MeshMode.ALL_HEX
        assert mesh_mode_for(SpaceKind.HYB12, MeshMode.HYBRID) is MeshMode.HYBRID

    def test_rate_table(self):
        records = [record("q1", 4, 27, 0.08), record("q1", 8, 343, 0.02), record("p1", 4, 27, 0.2)]
        rates = rate_table(records)
        assert list(rates) == ["q1", "p1"]
        assert rates["p1"] is None
        assert rates["q1"] == pytest.approx(AnalyticsEngine.fit_rate([27, 343], [0.08, 0.02]))

    def test_gnuplot_script(self):
        script = gnuplot_script("study.csv", ["q1", "hyb1"], "poisson-sin (quadratic)")
        assert "set logscale xy" in script
        assert "title 'q1'" in script and "title 'hyb1'" in script
        assert script.count("study.csv") == 2


class TestConvergenceStudy:
    """Artifacts of one short study."""

    def test_smoke_study(self, tmp_path):
        csv_path = str(tmp_path / "smoke.csv")
        study = ConvergenceStudy(StudyConfig.SMOKE(), csv_path, write_gnuplot=True)
        records = study.run()

        assert [(r.space, r.n) for r in records] == [("q1", 2), ("q1", 4), ("hyb1", 2), ("hyb1", 4)]
        assert not study.failures

        rows = read_csv(csv_path)
        assert tuple(rows[0]) == CSV_HEADER
        assert len(rows) == 4
        assert {r["seed"] for r in rows} == {"7"}
        assert all(float(r["l2_rel_error"]) > 0.0 for r in rows)

        sidecar = read_json(study.sidecar_path)
        assert sidecar["seed"] == 7
        assert sidecar["config"]["name"] == "SMOKE"
        assert set(sidecar["rates"]) == {"q1", "hyb1"}
        assert sidecar["failures"] == []
        assert sidecar["finished_at"] >= sidecar["started_at"]

        assert os.path.exists(study.gnuplot_path)
        assert study.gnuplot_path.endswith("smoke.gp")

    def test_errors_decrease(self, tmp_path):
        records = ConvergenceStudy(StudyConfig.SMOKE(), str(tmp_path / "s.csv"), write_sidecar=False).run()
        for space in ("q1", "hyb1"):
            _, errors = curve(records, space)
            assert errors[1] < errors[0]

    def test_mesh_mode_applies_to_hybrid_spaces(self, tmp_path):
        cfg = replace(StudyConfig.SMOKE(), spaces=("hyb1", "p1"), n_values=(2, 3), mesh_mode="all-tet")
        study = ConvergenceStudy(cfg, str(tmp_path / "tet.csv"), write_sidecar=False)
        records = study.run()

        assert set(study._meshes) == {(2, MeshMode.ALL_TET), (3, MeshMode.ALL_TET)}
        assert all(mesh.n_hexes == 0 for mesh in study._meshes.values())
        # no junctions: hyb1 spans the same functions as p1
        hyb1, p1 = curve(records, "hyb1"), curve(records, "p1")
        assert hyb1[0] == p1[0]
        assert hyb1[1] == pytest.approx(p1[1], rel=1e-6)

    def test_no_sidecar(self, tmp_path):
        study = ConvergenceStudy(StudyConfig.SMOKE(), str(tmp_path / "s.csv"), write_sidecar=False)
        study.run()
        assert not os.path.exists(study.sidecar_path)
        assert not os.path.exists(study.gnuplot_path)

    def test_failures_recorded_per_space(self, tmp_path):
        cfg = replace(StudyConfig.SMOKE(), n_values=(3, 4), solver=SolverConfig(max_iters=1))
        csv_path = str(tmp_path / "fail.csv")
        study = ConvergenceStudy(cfg, csv_path)
        assert study.run() == []
        assert [(f.space, f.n) for f in study.failures] == [("q1", 3), ("hyb1", 3)]
        assert read_csv(csv_path) == []
        sidecar = read_json(study.sidecar_path)
        assert [f["space"] for f in sidecar["failures"]] == ["q1", "hyb1"]


@pytest.mark.slow
class TestFullStudies:
    """Full refinement studies up to n = 16."""

    @pytest.fixture(scope="class")
    def poisson_records(self, tmp_path_factory):
        path = str(tmp_path_factory.mktemp("poisson") / "poisson.csv")
        return ConvergenceStudy(StudyConfig.POISSON(), path, write_sidecar=False).run()

    @pytest.mark.parametrize("space", ["q1", "hyb1", "hyb12", "p1"])
    def test_quadratic_rate(self, poisson_records, space):
        dofs, errors = curve(poisson_records, space)
        assert 1.7 <= AnalyticsEngine.fit_rate(dofs, errors, last=3) <= 2.3

    def test_ordering_at_matched_dofs(self, poisson_records):
        # err_b / err_a on a's dof counts; hyb12 carries more dofs than q1/hyb1 at equal n
        for better, worse in (("q1", "hyb12"), ("hyb12", "hyb1"), ("hyb1", "p1")):
            ratio = AnalyticsEngine.matched_dof_ratio(*curve(poisson_records, better), *curve(poisson_records, worse))
            assert ratio >= 1.0, (better, worse, ratio)

    def test_ordering_per_n(self, poisson_records):
        by_key = {(r.space, r.n): r.l2_rel_error for r in poisson_records}
        for n in StudyConfig.POISSON().n_values:
            assert by_key[("q1", n)] <= by_key[("hyb1", n)] <= by_key[("p1", n)]

    def test_hyb1_beats_p1_at_matched_dofs(self, poisson_records):
        ratio = AnalyticsEngine.matched_dof_ratio(*curve(poisson_records, "hyb1"), *curve(poisson_records, "p1"))
        assert 2.0 <= ratio <= 5.0

    def test_elasticity_matched_dofs(self, tmp_path):
        records = ConvergenceStudy(StudyConfig.ELASTICITY(), str(tmp_path / "el.csv"), write_sidecar=False).run()
        ratio = AnalyticsEngine.matched_dof_ratio(*curve(records, "hyb1"), *curve(records, "p1"))
        assert 1.8 <= ratio <= 5.0

    def test_affine_mappings_lose_rate(self, tmp_path):
        affine_cfg = StudyConfig.ABLATION()
        quadratic_cfg = replace(affine_cfg, name="ABLATION-Q", mapping_mode="quadratic")
        affine = ConvergenceStudy(affine_cfg, str(tmp_path / "a.csv"), write_sidecar=False).run()
        quadratic = ConvergenceStudy(quadratic_cfg, str(tmp_path / "q.csv"), write_sidecar=False).run()
        assert AnalyticsEngine.fit_rate(*curve(affine, "hyb1"), last=2) < 1.3
        assert AnalyticsEngine.fit_rate(*curve(quadratic, "hyb1"), last=2) >= 1.7
