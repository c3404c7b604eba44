"""Supervised training and inference for the crop mapper."""

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from autodiff import Adam, Graph, binary_cross_entropy
from cropgan.checkpoint import rng_state
from cropgan.config import ClassifierConfig, SplitSpec
from cropgan.datasets import LabeledDataset
from cropgan.metrics import confusion, f1
from cropgan.networks import ROLE_CROP_MAPPER, Network, build_crop_mapper
from cropgan.tables import write_csv
from shared.errors import TrainingDivergedError, UsageError

logger = logging.getLogger("cropgan.classifier_trainer")

THRESHOLD = 0.5
INFERENCE_BATCH = 512
HISTORY_HEADER = ("epoch", "train_loss", "val_loss", "val_f1")
PREDICTION_HEADER = ("index", "probability", "label")


def split_sizes(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    """floor(train * n) for training; the rest shared out with validation taking the odd one."""
    n_train = math.floor(spec.train_fraction * n + 1e-9)
    rest = n - n_train
    share = spec.validation_fraction / (spec.validation_fraction + spec.test_fraction)
    n_val = math.ceil(rest * share - 1e-9)
    return n_train, n_val, rest - n_val


def split_dataset(
    dataset: LabeledDataset, spec: SplitSpec | None = None
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """
    Shuffle a labeled dataset and partition it into train, validation and test.

    Raises:
        UsageError: The dataset has no labels or is too small for three non-empty parts
    """
    spec = spec or SplitSpec()
    dataset.require_labels("Splitting")
    sizes = split_sizes(len(dataset), spec)
    if min(sizes) < 1:
        raise UsageError(
            f"Cannot split {len(dataset)} samples into non-empty parts {sizes}",
            recovery_hint="Provide at least 7 labeled samples.",
        )
    order = np.random.default_rng(spec.seed).permutation(len(dataset))
    n_train, n_val, _ = sizes
    return (
        dataset.subset(order[:n_train]),
        dataset.subset(order[n_train : n_train + n_val]),
        dataset.subset(order[n_train + n_val :]),
    )


@dataclass
class ClassifierEpoch:
    epoch: int
    train_loss: float
    val_loss: float
    val_f1: float
    seconds: float = 0.0


@dataclass
class Prediction:
    probabilities: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class ClassifierResult:
    """Best-validation crop mapper, its per-epoch history and stored validation predictions."""

    network: Network
    history: list[ClassifierEpoch] = field(default_factory=list)
    best_epoch: int = 0
    validation: Prediction | None = None
    rng_state: str | None = None  # shuffling rng after the best epoch

    @property
    def best_f1(self) -> float:
        return self.history[self.best_epoch].val_f1


def _check_role(classifier: Network) -> None:
    role = getattr(classifier, "role", None)
    if role != ROLE_CROP_MAPPER:
        raise UsageError(
            f"Expected a {ROLE_CROP_MAPPER} checkpoint, got {role}",
            recovery_hint="Pass the checkpoint written by train-classifier.",
        )


def probabilities(classifier: Network, dataset: LabeledDataset) -> np.ndarray:
    inputs = dataset.network_input()
    out = [
        classifier(inputs[i : i + INFERENCE_BATCH], mode="eval").data.reshape(-1)
        for i in range(0, len(dataset), INFERENCE_BATCH)
    ]
    return np.concatenate(out) if out else np.zeros(0)


def predict(classifier: Network, dataset: LabeledDataset) -> Prediction:
    """
    Corn probabilities and thresholded labels for every sample.

    Raises:
        UsageError: The network is not a crop mapper
    """
    _check_role(classifier)
    probs = probabilities(classifier, dataset)
    return Prediction(probabilities=probs, labels=(probs >= THRESHOLD).astype(np.uint8))


def classifier_features(classifier: Network, dataset: LabeledDataset) -> np.ndarray:
    """Penultimate (FC 1) activations, used as an alternative t-SNE input."""
    _check_role(classifier)
    inputs = dataset.network_input()
    out = [
        classifier.forward(inputs[i : i + INFERENCE_BATCH], mode="eval", until="FC 1").data
        for i in range(0, len(dataset), INFERENCE_BATCH)
    ]
    return np.concatenate(out) if out else np.zeros((0, 4))


def validation_f1(pred: np.ndarray, labels: np.ndarray) -> float:
    """F1 on corn; a validation set without corn is scored on the one class it holds."""
    positive = 1 if np.any(labels == 1) else 0
    return f1(confusion(pred == positive, labels == positive))


def _bce(probs: np.ndarray, labels: np.ndarray) -> float:
    return float(binary_cross_entropy(probs, labels.astype(np.float64)).item())


def train_classifier(
    train: LabeledDataset,
    validation: LabeledDataset,
    config: ClassifierConfig | None = None,
) -> ClassifierResult:
    """
    Fit a crop mapper with binary cross-entropy and Adam, keeping the best-validation-F1 epoch.

    Batches are drawn from a seeded shuffle each epoch; a trailing batch of a
    single sample is skipped because batch norm needs two. Validation F1 is
    scored by validation_f1(); ties keep the earliest epoch.

    Raises:
        UsageError: Either set is unlabeled or empty
        TrainingDivergedError: The loss becomes non-finite
    """
    config = config or ClassifierConfig()
    train_labels = train.require_labels("Classifier training").astype(np.float64)
    val_labels = validation.require_labels("Classifier validation")
    if len(train) < 2 or len(validation) < 1:
        raise UsageError("Classifier training needs >= 2 training and >= 1 validation samples")

    seeds = np.random.SeedSequence(config.seed).generate_state(2)
    network = build_crop_mapper(int(seeds[0]))
    rng = np.random.default_rng(int(seeds[1]))
    optimizer = Adam(network.parameters(), learning_rate=config.learning_rate, beta1=config.beta1)
    inputs = train.network_input()

    history: list[ClassifierEpoch] = []
    best_state, best_epoch, best_f1 = None, 0, -1.0
    best_validation, best_rng = None, None

    for epoch in range(config.epochs):
        start = time.perf_counter()
        order = rng.permutation(len(train))
        losses = []
        for batch, offset in enumerate(range(0, len(order), config.batch_size)):
            index = order[offset : offset + config.batch_size]
            if len(index) < 2:
                continue
            optimizer.zero_grad()
            with Graph() as graph:
                prob = network(inputs[index], mode="train")
                loss = binary_cross_entropy(prob, train_labels[index, None])
                value = loss.item()
                if not np.isfinite(value):
                    logger.error(f"Classifier loss diverged at epoch {epoch}, batch {batch}")
                    raise TrainingDivergedError("classifier", epoch, batch, {"bce": value})
                graph.backward(loss)
            optimizer.step()
            losses.append(value)

        val_probs = probabilities(network, validation)
        val_pred = (val_probs >= THRESHOLD).astype(np.uint8)
        record = ClassifierEpoch(
            epoch=epoch,
            train_loss=float(np.mean(losses)),
            val_loss=_bce(val_probs, val_labels),
            val_f1=validation_f1(val_pred, val_labels),
            seconds=time.perf_counter() - start,
        )
        history.append(record)
        logger.info(
            f"Classifier epoch {epoch}: train_loss={record.train_loss:.4f} "
            f"val_loss={record.val_loss:.4f} val_f1={record.val_f1:.4f}"
        )

        if record.val_f1 > best_f1:
            best_f1, best_epoch = record.val_f1, epoch
            best_state = network.state_arrays()
            best_validation = Prediction(val_probs, val_pred)
            best_rng = rng_state(rng)

    network.load_state_arrays(best_state)
    network.epoch = best_epoch
    logger.info(f"Selected classifier epoch {best_epoch} (val_f1={best_f1:.4f})")
    return ClassifierResult(network, history, best_epoch, best_validation, best_rng)


def write_history(history: list[ClassifierEpoch], path: str | Path) -> Path:
    rows = [(r.epoch, r.train_loss, r.val_loss, r.val_f1) for r in history]
    return write_csv(path, HISTORY_HEADER, rows)


def write_predictions(prediction: Prediction, path: str | Path) -> Path:
    rows = [
        (i, float(p), int(label))
        for i, (p, label) in enumerate(zip(prediction.probabilities, prediction.labels))
    ]
    return write_csv(path, PREDICTION_HEADER, rows)
