"""Tests for shared/logging_config.py."""

import io
import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path

import pytest

from shared.logging_config import (
    FILE_FORMAT,
    ROOT_LOGGER,
    Rotation,
    release_handlers,
    run_log_path,
    setup_logging,
)


@pytest.fixture
def configure():
    """setup_logging() that releases its handlers after the test."""
    loggers = []

    def _configure(*args, **kwargs):
        logger = setup_logging(*args, **kwargs)
        loggers.append(logger)
        return logger

    yield _configure
    for logger in loggers:
        release_handlers(logger)


class TestSetupLogging:
    """Tests for setup_logging()."""

    def test_defaults_to_package_logger(self, configure):
        assert configure().name == ROOT_LOGGER == "cropgan"

    def test_level_case_insensitive(self, configure):
        assert configure("debug", name="cropgan.t_level").level == logging.DEBUG
        assert configure("WARNING", name="cropgan.t_level").level == logging.WARNING

    def test_unknown_level_means_info(self, configure):
        assert configure("chatty", name="cropgan.t_unknown").level == logging.INFO

    def test_console_only_without_run_log(self, configure):
        logger = configure(name="cropgan.t_console")
        assert len(logger.handlers) == 1
        assert not isinstance(logger.handlers[0], RotatingFileHandler)

    def test_run_log_directory_created(self, configure, tmp_path):
        log_file = run_log_path(tmp_path / "out")
        configure(log_file=log_file, name="cropgan.t_mkdir")
        assert log_file.parent.is_dir()

    def test_rotation_policy(self, configure, tmp_path):
        logger = configure(
            log_file=tmp_path / "run.log",
            name="cropgan.t_rotation",
            rotation=Rotation(max_bytes=1024, backup_count=3),
        )
        run_log = next(h for h in logger.handlers if isinstance(h, RotatingFileHandler))
        assert run_log.maxBytes == 1024
        assert run_log.backupCount == 3

    def test_default_rotation(self):
        assert Rotation() == Rotation(max_bytes=10 * 1024 * 1024, backup_count=5)

    def test_reconfiguring_closes_old_run_log(self, configure, tmp_path):
        logger = configure(log_file=tmp_path / "seed-0.log", name="cropgan.t_batch")
        first = next(h for h in logger.handlers if isinstance(h, RotatingFileHandler))
        configure(log_file=tmp_path / "seed-1.log", name="cropgan.t_batch")
        assert first.stream is None
        assert len(logger.handlers) == 2

    def test_console_has_no_timestamp(self, configure):
        stream = io.StringIO()
        configure(name="cropgan.t_console_format", stream=stream).info("epoch 3 done")
        assert stream.getvalue() == "INFO cropgan.t_console_format: epoch 3 done\n"

    def test_run_log_is_timestamped(self, configure, tmp_path):
        log_file = tmp_path / "run.log"
        logger = configure(log_file=log_file, name="cropgan.t_write", stream=io.StringIO())
        logger.info("checkpoint saved")
        for handler in logger.handlers:
            handler.flush()
        line = log_file.read_text()
        assert line.endswith("[INFO] cropgan.t_write: checkpoint saved\n")
        assert line[:4].isdigit()
        assert "%(asctime)s" in FILE_FORMAT

    def test_child_loggers_reach_handlers(self, configure):
        stream = io.StringIO()
        configure(name="cropgan.t_parent", stream=stream)
        logging.getLogger("cropgan.t_parent.gan_trainer").warning("loss spike")
        assert "loss spike" in stream.getvalue()

    def test_level_filters_messages(self, configure):
        stream = io.StringIO()
        logger = configure("WARNING", name="cropgan.t_filter", stream=stream)
        logger.info("hidden")
        logger.warning("shown")
        assert "hidden" not in stream.getvalue()
        assert "shown" in stream.getvalue()

    def test_no_propagation(self, configure):
        assert configure(name="cropgan.t_propagate").propagate is False


class TestRunLogPath:
    """Tests for run_log_path()."""

    def test_inside_output_logs_dir(self, tmp_path):
        assert run_log_path(tmp_path / "run1") == tmp_path / "run1" / "logs" / "cropgan.log"

    def test_accepts_string(self):
        assert run_log_path("out") == Path("out/logs/cropgan.log")

    def test_does_not_create_anything(self, tmp_path):
        run_log_path(tmp_path / "fresh")
        assert not (tmp_path / "fresh").exists()
