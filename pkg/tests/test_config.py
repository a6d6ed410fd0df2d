"""
Configuration and logging setup tests.
"""
import logging

import pytest

from infrastructure.config import (
    THREADS_ENV,
    ElasticityConfig,
    QuadratureConfig,
    SolverConfig,
    StudyConfig,
    assembly_threads,
)
from infrastructure.logger import LoggingConfig, build_dict_config, configure_logging
from engine.reference_elements import CellKind


class TestQuadratureConfig:
    def test_defaults(self):
        q = QuadratureConfig()
        assert q.stiffness == {CellKind.HEX: 5, CellKind.TET: 4}
        assert q.error == {CellKind.HEX: 7, CellKind.TET: 6}

    def test_error_degree_capped(self):
        assert QuadratureConfig(tet_degree=6).error[CellKind.TET] == 6

    def test_raised(self):
        q = QuadratureConfig().raised(2)
        assert (q.hex_degree, q.tet_degree) == (7, 6)
        assert QuadratureConfig(hex_degree=9).raised(3).hex_degree == 9

    @pytest.mark.parametrize(
        "kwargs", [{"hex_degree": 2}, {"hex_degree": 10}, {"tet_degree": 1}, {"tet_degree": 7}, {"error_extra": -1}]
    )
    def test_bounds(self, kwargs):
        with pytest.raises(ValueError):
            QuadratureConfig(**kwargs)


class TestSolverAndElasticity:
    def test_solver_defaults(self):
        cfg = SolverConfig()
        assert cfg.rel_residual_target == 1e-10
        assert cfg.max_iters is None

    @pytest.mark.parametrize(
        "kwargs", [{"rel_residual_target": 0.0}, {"max_iters": 0}, {"preconditioner": "ilu"}]
    )
    def test_solver_rejects(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)

    def test_lame_positive(self):
        with pytest.raises(ValueError, match="Lame"):
            ElasticityConfig(lam=0.0)


class TestStudyConfig:
    @pytest.mark.parametrize("factory", [StudyConfig.POISSON, StudyConfig.ELASTICITY, StudyConfig.ABLATION, StudyConfig.SMOKE])
    def test_presets_valid(self, factory):
        cfg = factory()
        assert cfg.name == factory.__name__
        assert min(cfg.n_values) >= 2

    def test_ablation_uses_affine(self):
        cfg = StudyConfig.ABLATION()
        assert cfg.mapping_mode == "affine"
        assert cfg.distortion == 0.20

    @pytest.mark.parametrize(
        "kwargs",
        [{"spaces": ()}, {"n_values": (1, 2)}, {"distortion": 0.5}, {"tet_fraction": -0.1}, {"mapping_mode": "cubic"},
         {"mesh_mode": "prism"}],
    )
    def test_rejects(self, kwargs):
        base = dict(name="x", problem="poisson-sin", spaces=("q1",), n_values=(2,), distortion=0.1, tet_fraction=0.2, seed=1)
        base.update(kwargs)
        with pytest.raises(ValueError):
            StudyConfig(**base)


class TestAssemblyThreads:
    def test_default(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert assembly_threads() == 1

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "4")
        assert assembly_threads() == 4

    @pytest.mark.parametrize("raw", ["many", "0", "-2"])
    def test_invalid_falls_back(self, monkeypatch, caplog, raw):
        monkeypatch.setenv(THREADS_ENV, raw)
        with caplog.at_level(logging.WARNING):
            assert assembly_threads() == 1
        assert THREADS_ENV in caplog.text


class TestLoggingConfig:
    def test_level_normalised(self):
        assert LoggingConfig(level="info").level == "INFO"

    def test_unknown_level(self):
        with pytest.raises(ValueError, match="valid: DEBUG"):
            LoggingConfig(level="loud")

    def test_console_on_stderr(self):
        cfg = build_dict_config(LoggingConfig())
        assert cfg["handlers"]["console"]["stream"] == "ext://sys.stderr"
        assert cfg["root"]["handlers"] == ["console"]
        assert cfg["root"]["level"] == "WARNING"

    def test_file_handler(self, tmp_path):
        cfg = build_dict_config(LoggingConfig(level="ERROR", log_file=str(tmp_path / "run.log")))
        assert cfg["handlers"]["file"]["class"] == "logging.handlers.RotatingFileHandler"
        assert cfg["handlers"]["file"]["formatter"] == "file"
        assert "%(threadName)s" in cfg["formatters"]["file"]["format"]
        assert cfg["root"]["level"] == "DEBUG"
        assert cfg["handlers"]["console"]["level"] == "ERROR"

    def test_console_prefixed_with_app_name(self):
        cfg = build_dict_config(LoggingConfig(app_name="fem"))
        assert cfg["formatters"]["console"]["format"].startswith("fem %(levelname)s")

    def test_configure_writes_file(self, tmp_path):
        log_file = tmp_path / "logs" / "run.log"
        try:
            configure_logging(LoggingConfig(log_file=str(log_file), capture_warnings=False))
            logging.getLogger("engine.solver").debug("cg iterations=%d", 12)
            for handler in logging.getLogger().handlers:
                handler.flush()
            assert "engine.solver: cg iterations=12" in log_file.read_text()
        finally:
            configure_logging(LoggingConfig(capture_warnings=False))
