"""Tests for cropgan/benchmark.py - direct vs adapted transfer runs."""

import numpy as np
import pytest

from cropgan.benchmark import (
    RESULT_HEADER,
    BenchmarkSettings,
    PipelineResult,
    make_domains,
    median_delta_f1,
    run_benchmark,
    run_pipeline,
    write_results,
)
from cropgan.config import ClassifierConfig, GanConfig
from cropgan.tables import read_csv

TINY = BenchmarkSettings(
    n_per_class=10,
    gan=GanConfig(epochs=2, batch_size=4, warmup_epochs=0),
    classifier=ClassifierConfig(epochs=2, batch_size=4),
)


def _result(seed, baseline_f1, adapted_f1):
    return PipelineResult(
        seed=seed,
        baseline={"oa": 0.5, "f1": baseline_f1, "kappa": 0.0},
        adapted={"oa": 0.75, "f1": adapted_f1, "kappa": 0.5},
        selected_epoch=1,
        alignment={"raw_distance": 1.0, "transformed_distance": 0.5},
    )


class TestDomains:
    """Tests for make_domains()."""

    def test_deterministic(self):
        a_source, a_target = make_domains(TINY, 7)
        b_source, b_target = make_domains(TINY, 7)
        np.testing.assert_array_equal(a_source.samples, b_source.samples)
        np.testing.assert_array_equal(a_target.samples, b_target.samples)

    def test_domains_are_labeled_and_differ(self):
        source, target = make_domains(TINY, 0)
        assert len(source) == len(target) == 20
        assert source.has_labels and target.has_labels
        assert not np.array_equal(source.samples, target.samples)


class TestResults:
    """Tests for the result helpers."""

    def test_delta_f1(self):
        assert _result(0, 0.5, 0.75).delta_f1 == pytest.approx(0.25)

    def test_median(self):
        results = [_result(0, 0.5, 0.6), _result(1, 0.5, 0.9), _result(2, 0.5, 0.4)]
        assert median_delta_f1(results) == pytest.approx(0.1)

    def test_write_results(self, tmp_path):
        path = write_results([_result(3, 0.5, 0.75)], tmp_path / "benchmark.csv")
        rows = read_csv(path, RESULT_HEADER)
        assert rows[0]["seed"] == "3"
        assert rows[0]["delta_f1"] == "0.25"
        assert rows[0]["selected_epoch"] == "1"


@pytest.mark.slow
class TestPipeline:
    """Runs the full pipeline on tiny settings."""

    def test_run_pipeline(self):
        result = run_pipeline(TINY, 0)
        assert result.seed == 0
        assert 0 <= result.selected_epoch < 2
        for scores in (result.baseline, result.adapted):
            assert 0.0 <= scores["oa"] <= 1.0
        assert set(result.alignment) == {"raw_distance", "transformed_distance"}

    def test_run_benchmark_is_seeded(self):
        first = run_benchmark(TINY, [0, 1])
        second = run_benchmark(TINY, [0, 1])
        assert [r.row() for r in first] == [r.row() for r in second]


@pytest.mark.slow
class TestDirectionalClaim:
    """Full-size canada-like benchmark: adaptation must beat direct transfer clearly."""

    def test_adapted_beats_direct(self, tmp_path):
        settings = BenchmarkSettings()
        assert settings.preset == "canada-like"
        assert 2 * settings.n_per_class == 2000
        assert settings.gan.epochs == 300
        results = run_benchmark(settings, [0, 1, 2])
        write_results(results, tmp_path / "benchmark.csv")
        assert median_delta_f1(results) >= 0.10
        assert float(np.median([r.baseline["f1"] for r in results])) <= 0.75
        assert float(np.median([r.adapted["f1"] for r in results])) >= 0.80
