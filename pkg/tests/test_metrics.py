"""Tests for cropgan/metrics.py - confusion counts, OA, F1 and kappa."""

import itertools

import numpy as np
import pytest

from cropgan.metrics import ConfusionMatrix, confusion, f1, kappa, overall_accuracy, score
from shared.errors import UsageError


def _vectors(tp, fp, fn, tn):
    pred = [1] * tp + [1] * fp + [0] * fn + [0] * tn
    truth = [1] * tp + [0] * fp + [1] * fn + [0] * tn
    return pred, truth


class TestConfusion:
    """Tests for confusion()."""

    def test_counts(self):
        pred, truth = _vectors(3, 2, 1, 4)
        assert confusion(pred, truth) == ConfusionMatrix(tp=3, fp=2, fn=1, tn=4)

    def test_order_independent(self):
        pred, truth = _vectors(3, 2, 1, 4)
        order = np.random.default_rng(0).permutation(10)
        assert confusion(np.array(pred)[order], np.array(truth)[order]) == confusion(pred, truth)

    def test_length_mismatch(self):
        with pytest.raises(UsageError, match="does not match"):
            confusion([0, 1], [0, 1, 1])

    def test_empty(self):
        with pytest.raises(UsageError, match="empty"):
            confusion([], [])

    def test_non_binary(self):
        with pytest.raises(UsageError):
            confusion([0, 2], [0, 1])

    def test_negative_counts(self):
        with pytest.raises(UsageError):
            ConfusionMatrix(tp=-1, fp=0, fn=0, tn=0)


class TestScores:
    """Tests for overall_accuracy(), f1() and kappa()."""

    def test_worked_example(self):
        cm = ConfusionMatrix(tp=45, fp=10, fn=5, tn=40)
        assert overall_accuracy(cm) == pytest.approx(0.85)
        assert f1(cm) == pytest.approx(90 / 105)
        assert kappa(cm) == pytest.approx(0.7)

    def test_perfect_prediction(self):
        truth = [1, 0, 1, 1, 0]
        result = score(truth, truth)
        assert result["oa"] == 1.0
        assert result["f1"] == 1.0
        assert result["kappa"] == 1.0

    def test_inverted_prediction(self):
        truth = np.array([1, 0, 1, 0])
        result = score(1 - truth, truth)
        assert result["oa"] == 0.0
        assert result["f1"] == 0.0
        assert result["kappa"] == pytest.approx(-1.0)

    def test_no_positives_anywhere(self):
        result = score([0, 0, 0], [0, 0, 0])
        assert result["f1"] == 0.0
        assert result["kappa"] == 0.0
        assert result["oa"] == 1.0

    def test_all_positive_kappa_zero(self):
        assert kappa(ConfusionMatrix(tp=5, fp=0, fn=0, tn=0)) == 0.0

    def test_empty_matrix(self):
        with pytest.raises(UsageError):
            overall_accuracy(ConfusionMatrix(0, 0, 0, 0))

    def test_score_includes_counts(self):
        result = score(*_vectors(1, 2, 3, 4))
        assert (result["tp"], result["fp"], result["fn"], result["tn"]) == (1, 2, 3, 4)
        assert isinstance(result["tp"], int)


class TestAgainstBruteForce:
    """Compare every 6-element prediction against a direct computation."""

    @staticmethod
    def _oracle(pred, truth):
        n = len(pred)
        agree = sum(p == t for p, t in zip(pred, truth)) / n
        tp = sum(p and t for p, t in zip(pred, truth))
        positives = sum(pred) + sum(truth)
        f1_value = 2 * tp / positives if positives else 0.0
        chance = (sum(pred) * sum(truth) + (n - sum(pred)) * (n - sum(truth))) / (n * n)
        kappa_value = 0.0 if chance == 1.0 else (agree - chance) / (1 - chance)
        return agree, f1_value, kappa_value

    def test_all_pairs(self):
        truth = (1, 0, 1, 1, 0, 0)
        for pred in itertools.product((0, 1), repeat=6):
            expected = self._oracle(pred, truth)
            result = score(pred, truth)
            assert (result["oa"], result["f1"], result["kappa"]) == pytest.approx(expected)

    def test_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            pred = rng.integers(0, 2, 20)
            truth = rng.integers(0, 2, 20)
            result = score(pred, truth)
            assert 0.0 <= result["oa"] <= 1.0
            assert 0.0 <= result["f1"] <= 1.0
            assert -1.0 <= result["kappa"] <= 1.0
