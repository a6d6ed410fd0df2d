# infrastructure/logger.py
from __future__ import annotations

import logging
import logging.config
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

CONSOLE_FORMAT = "%(levelname)s %(name)s: %(message)s"
FILE_FORMAT = "%(asctime)s.%(msecs)03d %(levelname)s [%(threadName)s] %(name)s: %(message)s"


@dataclass(frozen=True)
class LoggingConfig:
    """
    Logging for one CLI run or test session.

    Note:
    - The console handler writes to stderr; stdout carries the reports.
    - The file handler records everything at DEBUG (per-stage timings,
      CG iterations) regardless of the console level.
    - capture_warnings routes numpy/scipy RuntimeWarnings into the
      `py.warnings` logger.
    """
    app_name: str = "hybridfem"
    level: str = "WARNING"
    log_file: Optional[str] = None
    capture_warnings: bool = True

    def __post_init__(self) -> None:
        if self.level.upper() not in LEVELS:
            raise ValueError(f"unknown log level '{self.level}' (valid: {', '.join(LEVELS)})")
        object.__setattr__(self, "level", self.level.upper())


def _console_handler(cfg: LoggingConfig) -> Dict[str, Any]:
    return {
        "class": "logging.StreamHandler",
        "level": cfg.level,
        "formatter": "console",
        "stream": "ext://sys.stderr",
    }


def _file_handler(cfg: LoggingConfig) -> Dict[str, Any]:
    return {
        "class": "logging.handlers.RotatingFileHandler",
        "level": "DEBUG",
        "formatter": "file",
        "filename": cfg.log_file,
        "maxBytes": 5_000_000,
        "backupCount": 3,
        "encoding": "utf-8",
    }


def build_dict_config(cfg: LoggingConfig) -> Dict[str, Any]:
    handlers: Dict[str, Any] = {"console": _console_handler(cfg)}
    root_handlers: List[str] = ["console"]
    if cfg.log_file:
        handlers["file"] = _file_handler(cfg)
        root_handlers.append("file")

    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "console": {"format": f"{cfg.app_name} {CONSOLE_FORMAT}"},
            "file": {"format": FILE_FORMAT, "datefmt": "%Y-%m-%d %H:%M:%S"},
        },
        "handlers": handlers,
        "loggers": {
            "py.warnings": {"level": "WARNING"},
        },
        "root": {
            "level": "DEBUG" if cfg.log_file else cfg.level,
            "handlers": root_handlers,
        },
    }


def configure_logging(cfg: LoggingConfig) -> None:
    """Configure logging once from the entry point (ui.cli / main.py)."""
    if cfg.log_file:
        Path(cfg.log_file).parent.mkdir(parents=True, exist_ok=True)
    logging.config.dictConfig(build_dict_config(cfg))
    logging.captureWarnings(cfg.capture_warnings)
