"""Tests for cropgan/classifier_trainer.py - splitting, training and inference."""

import numpy as np
import pytest

from cropgan.classifier_trainer import (
    HISTORY_HEADER,
    PREDICTION_HEADER,
    classifier_features,
    predict,
    split_dataset,
    split_sizes,
    train_classifier,
    validation_f1,
    write_history,
    write_predictions,
)
from cropgan.checkpoint import rng_state
from cropgan.config import ClassifierConfig, SplitSpec
from cropgan.datasets import LabeledDataset
from cropgan.metrics import confusion, f1
from cropgan.networks import build_crop_mapper, build_generator
from cropgan.tables import read_csv
from shared.errors import UsageError


def separable(n_per_class=150, seed=0):
    """Corn pixels are bright with a rising NIR curve; the rest are dark and flat."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, 9)[:, None]
    corn = 0.3 + 0.4 * t * np.ones((1, 6))
    other = np.full((9, 6), 0.25)
    samples = np.concatenate(
        [
            corn + rng.normal(0.0, 0.02, size=(n_per_class, 9, 6)),
            other + rng.normal(0.0, 0.02, size=(n_per_class, 9, 6)),
        ]
    )
    labels = np.array([1] * n_per_class + [0] * n_per_class)
    order = rng.permutation(len(labels))
    return LabeledDataset(np.clip(samples[order], 0.0, 1.0), labels[order], domain="source")


class TestSplit:
    """Tests for split_sizes()/split_dataset()."""

    @pytest.mark.parametrize("n,expected", [(100, (70, 15, 15)), (10, (7, 2, 1)), (7, (4, 2, 1))])
    def test_sizes(self, n, expected):
        assert split_sizes(n, SplitSpec()) == expected

    def test_partition(self):
        dataset = separable(50)
        dataset.coords = np.stack([np.arange(100), np.zeros(100)], axis=1).astype(np.uint32)
        parts = split_dataset(dataset)
        assert [len(p) for p in parts] == [70, 15, 15]
        rows = np.concatenate([p.coords[:, 0] for p in parts])
        assert sorted(rows.tolist()) == list(range(100))

    def test_seeded(self):
        a = split_dataset(separable(20), SplitSpec(seed=3))[1].samples
        b = split_dataset(separable(20), SplitSpec(seed=3))[1].samples
        c = split_dataset(separable(20), SplitSpec(seed=4))[1].samples
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_too_small(self):
        with pytest.raises(UsageError, match="non-empty"):
            split_dataset(separable(1))

    def test_unlabeled(self):
        with pytest.raises(UsageError):
            split_dataset(separable(10).unlabeled())


class TestTrainClassifier:
    """Tests for train_classifier()."""

    def test_learns_separable_classes(self):
        train, validation, test = split_dataset(separable())
        result = train_classifier(train, validation, ClassifierConfig(epochs=30, batch_size=32))
        assert result.best_f1 >= 0.9
        pred = predict(result.network, test)
        assert np.mean(pred.labels == test.labels) >= 0.9

    def test_history_and_selection(self):
        train, validation, _ = split_dataset(separable(30))
        result = train_classifier(train, validation, ClassifierConfig(epochs=4, batch_size=16))
        assert [r.epoch for r in result.history] == [0, 1, 2, 3]
        best = max(r.val_f1 for r in result.history)
        assert result.best_f1 == best
        first_best = next(r.epoch for r in result.history if r.val_f1 == best)
        assert result.best_epoch == first_best == result.network.epoch
        assert len(result.validation) == len(validation)

    def test_identical_runs_identical_results(self):
        train, validation, _ = split_dataset(separable(20))
        config = ClassifierConfig(epochs=3, batch_size=8, seed=5)
        a = train_classifier(train, validation, config)
        b = train_classifier(train, validation, config)
        for x, y in zip(a.history, b.history):
            assert (x.train_loss, x.val_loss, x.val_f1) == (y.train_loss, y.val_loss, y.val_f1)
        for x, y in zip(a.network.state_arrays(), b.network.state_arrays()):
            np.testing.assert_array_equal(x, y)

    @pytest.mark.parametrize("label", [0, 1])
    def test_constant_labels(self, label):
        """A single-class training set is predicted as that class everywhere."""
        dataset = separable(20)
        dataset = LabeledDataset(dataset.samples, np.full(40, label, dtype=np.uint8))
        train, validation, test = split_dataset(dataset)
        result = train_classifier(train, validation, ClassifierConfig(epochs=30, batch_size=8))
        assert result.best_f1 == 1.0
        assert np.all(result.validation.labels == label)
        assert np.all(predict(result.network, test).labels == label)

    def test_loss_does_not_rise_early(self):
        train, validation, _ = split_dataset(separable())
        result = train_classifier(train, validation, ClassifierConfig(epochs=5, batch_size=32))
        losses = [r.train_loss for r in result.history]
        assert all(b <= a for a, b in zip(losses, losses[1:]))

    def test_best_f1_matches_stored_predictions(self):
        train, validation, _ = split_dataset(separable(30))
        result = train_classifier(train, validation, ClassifierConfig(epochs=4, batch_size=16))
        assert f1(confusion(result.validation.labels, validation.labels)) == result.best_f1
        np.testing.assert_array_equal(
            predict(result.network, validation).probabilities, result.validation.probabilities
        )

    def test_rng_state_of_best_epoch(self):
        train, validation, _ = split_dataset(separable(10))
        config = ClassifierConfig(epochs=2, batch_size=4, seed=2)
        result = train_classifier(train, validation, config)
        rng = np.random.default_rng(int(np.random.SeedSequence(config.seed).generate_state(2)[1]))
        for _ in range(result.best_epoch + 1):
            rng.permutation(len(train))
        assert result.rng_state == rng_state(rng)

    def test_needs_labels(self):
        train, validation, _ = split_dataset(separable(10))
        with pytest.raises(UsageError):
            train_classifier(train.unlabeled(), validation, ClassifierConfig(epochs=1))


class TestInference:
    """Tests for predict() and classifier_features()."""

    def test_threshold(self):
        network = build_crop_mapper(0)
        pred = predict(network, separable(5))
        np.testing.assert_array_equal(pred.labels, (pred.probabilities >= 0.5).astype(np.uint8))
        assert len(pred) == 10

    def test_features_shape(self):
        assert classifier_features(build_crop_mapper(0), separable(3)).shape == (6, 4)

    def test_wrong_role(self):
        with pytest.raises(UsageError, match="crop-mapper"):
            predict(build_generator(0), separable(2))

    def test_empty_dataset(self):
        empty = LabeledDataset(np.zeros((0, 9, 6)))
        assert len(predict(build_crop_mapper(0), empty)) == 0


class TestCsvOutputs:
    """Tests for write_history()/write_predictions()."""

    def test_history_csv(self, tmp_path):
        train, validation, _ = split_dataset(separable(10))
        result = train_classifier(train, validation, ClassifierConfig(epochs=2, batch_size=4))
        rows = read_csv(write_history(result.history, tmp_path / "history.csv"), HISTORY_HEADER)
        assert [row["epoch"] for row in rows] == ["0", "1"]
        assert float(rows[1]["val_loss"]) == result.history[1].val_loss

    def test_predictions_csv(self, tmp_path):
        pred = predict(build_crop_mapper(0), separable(2))
        rows = read_csv(write_predictions(pred, tmp_path / "pred.csv"), PREDICTION_HEADER)
        assert len(rows) == 4
        assert float(rows[2]["probability"]) == pred.probabilities[2]


class TestValidationF1:
    """Tests for validation_f1()."""

    def test_corn_present(self):
        assert validation_f1(np.array([1, 0, 1, 0]), np.array([1, 0, 0, 0])) == pytest.approx(2 / 3)

    def test_single_class_scored_on_that_class(self):
        labels = np.zeros(4, dtype=np.uint8)
        assert validation_f1(np.zeros(4, dtype=np.uint8), labels) == 1.0
        assert validation_f1(np.array([1, 0, 0, 0]), labels) == pytest.approx(6 / 7)
