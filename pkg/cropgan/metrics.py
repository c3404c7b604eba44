"""Binary classification metrics: confusion counts, overall accuracy, F1 and Cohen's kappa.

The positive class is corn (label 1).
"""

from dataclasses import dataclass

import numpy as np

from shared.errors import UsageError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise UsageError("Confusion counts must be non-negative", details=self.as_dict())

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_dict(self) -> dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def _labels(values, name: str) -> np.ndarray:
    array = np.asarray(values).reshape(-1)
    if array.size and not np.isin(array, (0, 1)).all():
        raise UsageError(f"{name} labels must be 0 or 1")
    return array.astype(bool)


def confusion(pred, truth) -> ConfusionMatrix:
    """
    Count agreement between predicted and true labels.

    Raises:
        UsageError: Lengths differ, are zero, or labels are not binary
    """
    p = _labels(pred, "Predicted")
    t = _labels(truth, "True")
    if p.size != t.size:
        raise UsageError(f"Prediction length {p.size} does not match truth length {t.size}")
    if p.size == 0:
        raise UsageError("Cannot score an empty prediction")
    return ConfusionMatrix(
        tp=int(np.count_nonzero(p & t)),
        fp=int(np.count_nonzero(p & ~t)),
        fn=int(np.count_nonzero(~p & t)),
        tn=int(np.count_nonzero(~p & ~t)),
    )


def _require_total(cm: ConfusionMatrix) -> int:
    if cm.total < 1:
        raise UsageError("Confusion matrix is empty")
    return cm.total


def overall_accuracy(cm: ConfusionMatrix) -> float:
    return (cm.tp + cm.tn) / _require_total(cm)


def f1(cm: ConfusionMatrix) -> float:
    """2tp / (2tp + fp + fn); 0 when there are no positives in either vector."""
    _require_total(cm)
    denominator = 2 * cm.tp + cm.fp + cm.fn
    if denominator == 0:
        return 0.0
    return 2 * cm.tp / denominator


def kappa(cm: ConfusionMatrix) -> float:
    """Cohen's kappa; 0 when chance agreement is already 1."""
    total = _require_total(cm)
    po = (cm.tp + cm.tn) / total
    pe = ((cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.fn + cm.tn) * (cm.fp + cm.tn)) / (total * total)
    if pe == 1.0:
        return 0.0
    return (po - pe) / (1.0 - pe)


def score(pred, truth) -> dict[str, float]:
    """OA, F1 and kappa of a prediction, plus its confusion counts."""
    cm = confusion(pred, truth)
    return {
        "oa": overall_accuracy(cm),
        "f1": f1(cm),
        "kappa": kappa(cm),
        **cm.as_dict(),
    }
