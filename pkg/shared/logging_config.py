"""Logging for cropgan commands.

Every command logs to stderr. Training and benchmark commands also keep a
rotating run log inside their output directory, with timestamps, so a run
directory carries the record of how it was produced.
"""

import logging
import sys
from dataclasses import dataclass
from logging.handlers import RotatingFileHandler
from pathlib import Path

ROOT_LOGGER = "cropgan"
RUN_LOG = Path("logs") / "cropgan.log"

CONSOLE_FORMAT = "%(levelname)s %(name)s: %(message)s"
FILE_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


@dataclass(frozen=True)
class Rotation:
    """Size at which the run log rolls over, and how many old logs are kept."""

    max_bytes: int = 10 * 1024 * 1024
    backup_count: int = 5


def _level(name: str) -> int:
    level = logging.getLevelName(name.upper())
    return level if isinstance(level, int) else logging.INFO


def release_handlers(logger: logging.Logger) -> None:
    """Detach and close every handler of ``logger``."""
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()


def setup_logging(
    level: str = "INFO",
    log_file: str | Path | None = None,
    *,
    name: str = ROOT_LOGGER,
    stream: object = None,
    rotation: Rotation = Rotation(),
) -> logging.Logger:
    """
    Configure the cropgan logger for one command.

    Args:
        level: Level name, case-insensitive; unknown names mean INFO
        log_file: Run log; parent directories are created. None logs to the console only.
        name: Logger to configure; child loggers reach its handlers
        stream: Console stream (default: stderr)
        rotation: Run log rollover policy

    Returns:
        The configured logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(_level(level))
    # batch and rerun configure logging again for every command they run
    release_handlers(logger)

    console = logging.StreamHandler(stream or sys.stderr)
    console.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    logger.addHandler(console)

    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        run_log = RotatingFileHandler(
            path,
            maxBytes=rotation.max_bytes,
            backupCount=rotation.backup_count,
            encoding="utf-8",
        )
        run_log.setFormatter(logging.Formatter(FILE_FORMAT, datefmt=DATE_FORMAT))
        logger.addHandler(run_log)

    logger.propagate = False
    return logger


def run_log_path(output_dir: str | Path) -> Path:
    """Run log of a command writing to ``output_dir``."""
    return Path(output_dir) / RUN_LOG
