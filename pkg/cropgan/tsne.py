"""Exact t-SNE for comparing source, target and transformed sample distributions."""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cropgan.config import TsneConfig
from cropgan.tables import write_csv
from shared.errors import UsageError

logger = logging.getLogger("cropgan.tsne")

PERPLEXITY_TOLERANCE = 1e-3
MAX_SEARCH_STEPS = 200
MIN_GAIN = 0.01
EMBEDDING_HEADER = ("x", "y", "domain", "class")


@dataclass
class Embedding2D:
    """n x 2 coordinates with per-point domain and class tags."""

    coords: np.ndarray
    domains: list[str] = field(default_factory=list)
    classes: list[int | None] = field(default_factory=list)
    kl_initial: float = float("nan")
    kl_final: float = float("nan")

    def __len__(self) -> int:
        return len(self.coords)

    def to_csv(self, path: str | Path) -> Path:
        rows = [
            (x, y, d, "" if c is None else int(c))
            for (x, y), d, c in zip(self.coords, self.domains, self.classes)
        ]
        return write_csv(path, EMBEDDING_HEADER, rows)


def squared_distances(points: np.ndarray) -> np.ndarray:
    sq = np.sum(points * points, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def _entropy(distances: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """Shannon entropy (nats) and the conditional distribution at precision beta."""
    shifted = distances - distances.min()
    p = np.exp(-shifted * beta)
    total = p.sum()
    p = p / total
    h = np.log(total) + beta * np.sum(shifted * p)
    return float(h), p


def conditional_probabilities(
    distances: np.ndarray, perplexity: float
) -> tuple[np.ndarray, np.ndarray]:
    """
    Row-conditional P(j | i) with per-point Gaussian precisions found by bisection.

    Each row's perplexity exp(H) is matched to ``perplexity`` within 1e-3.

    Returns:
        (P, perplexities): P has zero diagonal and rows summing to 1
    """
    n = len(distances)
    target = np.log(perplexity)
    P = np.zeros((n, n))
    achieved = np.zeros(n)
    for i in range(n):
        others = np.concatenate([np.arange(i), np.arange(i + 1, n)])
        row = distances[i, others]
        beta, low, high = 1.0, 0.0, np.inf
        h, p = _entropy(row, beta)
        for _ in range(MAX_SEARCH_STEPS):
            if abs(np.exp(h) - perplexity) <= PERPLEXITY_TOLERANCE:
                break
            if h > target:
                low = beta
                beta = beta * 2.0 if high == np.inf else (beta + high) / 2.0
            else:
                high = beta
                beta = (beta + low) / 2.0
            h, p = _entropy(row, beta)
        P[i, others] = p
        achieved[i] = np.exp(h)
    return P, achieved


def joint_probabilities(points: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized P = (P_cond + P_cond^T) / 2n; sums to 1."""
    conditional, _ = conditional_probabilities(squared_distances(points), perplexity)
    P = conditional + conditional.T
    return P / P.sum()


def kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], 1e-300))))


def _student_t(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    num = 1.0 / (1.0 + squared_distances(Y))
    np.fill_diagonal(num, 0.0)
    return num, num / num.sum()


def tsne(
    points,
    config: TsneConfig | None = None,
    domains: list[str] | None = None,
    classes: list | None = None,
) -> Embedding2D:
    """
    Embed points in 2-D with exact t-SNE.

    Gradient descent uses early exaggeration, a two-phase momentum and
    per-coordinate adaptive gains. Inputs above config.max_points are
    subsampled with the config seed (tags follow the kept points).

    Raises:
        UsageError: Fewer than 4 points, non-finite values, or a perplexity
            of (n - 1) / 3 or more
    """
    config = config or TsneConfig()
    X = np.asarray(points, dtype=np.float64)
    X = X.reshape(len(X), -1)
    domains = list(domains) if domains is not None else [""] * len(X)
    classes = list(classes) if classes is not None else [None] * len(X)
    if not np.all(np.isfinite(X)):
        raise UsageError("t-SNE input contains NaN or infinite values")

    rng = np.random.default_rng(config.seed)
    if len(X) > config.max_points:
        keep = np.sort(rng.choice(len(X), config.max_points, replace=False))
        logger.info(f"Subsampling {len(X)} points to {config.max_points} for t-SNE")
        X = X[keep]
        domains = [domains[i] for i in keep]
        classes = [classes[i] for i in keep]

    n = len(X)
    if n < 4:
        raise UsageError(f"t-SNE needs at least 4 points, got {n}")
    if config.perplexity >= (n - 1) / 3:
        raise UsageError(
            f"Perplexity {config.perplexity} is too large for {n} points",
            recovery_hint=f"Use a perplexity below {(n - 1) / 3:.1f}.",
        )

    P = joint_probabilities(X, config.perplexity)
    P = np.maximum(P, 1e-12)

    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    kl_initial = kl_divergence(P, _student_t(Y)[1])

    for it in range(config.iterations):
        exaggeration = config.exaggeration if it < config.exaggeration_iterations else 1.0
        momentum = config.initial_momentum if it < config.momentum_switch else config.final_momentum

        num, Q = _student_t(Y)
        W = (exaggeration * P - np.maximum(Q, 1e-12)) * num
        grad = 4.0 * (np.diag(W.sum(axis=1)) - W) @ Y

        same_sign = (grad > 0) == (update > 0)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, MIN_GAIN)
        update = momentum * update - config.learning_rate * gains * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)

        if (it + 1) % 100 == 0:
            logger.debug(f"t-SNE iteration {it + 1}: KL={kl_divergence(P, Q):.4f}")

    kl_final = kl_divergence(P, _student_t(Y)[1])
    logger.info(f"t-SNE finished: KL {kl_initial:.4f} -> {kl_final:.4f}")
    return Embedding2D(Y, domains, classes, kl_initial, kl_final)
