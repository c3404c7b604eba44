"""Cycle-consistent adversarial training of the domain mapper.

Domain naming: X is the unlabeled target domain, Y the labeled source domain.
G maps X -> Y (the direction used to adapt target data), F maps Y -> X, D_X
judges target realism and D_Y judges source realism.
"""

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from autodiff import Adam, Graph, Tensor, as_tensor, clamped_log, l1_distance
from cropgan.checkpoint import rng_state, save_checkpoint
from cropgan.classifier_trainer import predict
from cropgan.config import GanConfig, config_hash
from cropgan.datasets import LabeledDataset
from cropgan.metrics import confusion, f1, kappa, overall_accuracy
from cropgan.networks import (
    ROLE_DISCRIMINATOR_X,
    ROLE_DISCRIMINATOR_Y,
    ROLE_GENERATOR_F,
    ROLE_GENERATOR_G,
    Network,
    build_discriminator,
    build_generator,
)
from cropgan.tables import format_value, read_csv, write_csv
from shared.errors import TrainingDivergedError, UsageError

logger = logging.getLogger("cropgan.gan_trainer")

HISTORY_HEADER = ("epoch", "adv_g", "adv_f", "cyc_x", "cyc_y", "id_g", "id_f", "total", "seconds")
MONITOR_HEADER = ("epoch", "oa", "f1", "kappa")
COMPONENTS = ("adv_g", "adv_f", "cyc_x", "cyc_y", "id_g", "id_f")
TRANSFORM_BATCH = 512

Mapping = Callable[..., Tensor]


def _batch(values) -> Tensor:
    """Tensor of shape (N, 9, 6, 1); plain (N, 9, 6) batches gain the channel axis."""
    tensor = as_tensor(values)
    if tensor.ndim == 3:
        tensor = tensor.reshape((*tensor.shape, 1))
    if tensor.shape[0] == 0:
        raise UsageError("Loss evaluated on an empty batch")
    return tensor


def adversarial_loss(discriminator: Mapping, real_batch, fake_batch) -> Tensor:
    """
    mean log D(real) + mean log(1 - D(fake)), with D clamped to [1e-7, 1 - 1e-7].

    The discriminator ascends this value. It approaches 0 from below for a
    perfect discriminator and equals 2 ln 0.5 when D outputs 0.5 everywhere.
    """
    real = _batch(real_batch)
    fake = _batch(fake_batch)
    return clamped_log(discriminator(real)).mean() + clamped_log(1.0 - discriminator(fake)).mean()


def generator_adversarial_loss(discriminator: Mapping, fake_batch) -> Tensor:
    """Non-saturating generator objective -mean log D(fake)."""
    return -clamped_log(discriminator(_batch(fake_batch))).mean()


def cycle_loss(forward: Mapping, backward: Mapping, batch) -> Tensor:
    """Per-element L1 between x and backward(forward(x))."""
    x = _batch(batch)
    return l1_distance(backward(forward(x)), x)


def identity_loss(generator: Mapping, batch) -> Tensor:
    """Per-element L1 between G(y) and y, evaluated on samples of G's output domain."""
    y = _batch(batch)
    return l1_distance(generator(y), y)


@dataclass
class LossComponents:
    adv_g: float = 0.0
    adv_f: float = 0.0
    cyc_x: float = 0.0
    cyc_y: float = 0.0
    id_g: float = 0.0
    id_f: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in COMPONENTS}

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(list(self.as_dict().values()))))


def total_loss(components: LossComponents, config: GanConfig) -> float:
    """alpha * (adv_g + adv_f) + beta * (cyc_x + cyc_y) + sigma * (id_g + id_f)."""
    return (
        config.alpha * (components.adv_g + components.adv_f)
        + config.beta * (components.cyc_x + components.cyc_y)
        + config.sigma * (components.id_g + components.id_f)
    )


@dataclass
class EpochRecord:
    epoch: int
    components: LossComponents
    total: float
    seconds: float = 0.0
    checkpoint: str | None = None

    def row(self) -> tuple:
        c = self.components
        components = (c.adv_g, c.adv_f, c.cyc_x, c.cyc_y, c.id_g, c.id_f)
        return (self.epoch, *components, self.total, self.seconds)


@dataclass
class TrainHistory:
    """One record per completed epoch."""

    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, index: int) -> EpochRecord:
        return self.records[index]

    def totals(self) -> list[float]:
        return [r.total for r in self.records]

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, HISTORY_HEADER, (r.row() for r in self.records))

    @classmethod
    def from_csv(cls, path: str | Path) -> "TrainHistory":
        records = []
        for row in read_csv(path, HISTORY_HEADER):
            components = LossComponents(**{name: float(row[name]) for name in COMPONENTS})
            records.append(
                EpochRecord(
                    epoch=int(row["epoch"]),
                    components=components,
                    total=float(row["total"]),
                    seconds=float(row["seconds"]),
                )
            )
        return cls(records)


@dataclass
class MonitorRecord:
    epoch: int
    oa: float
    f1: float
    kappa: float


@dataclass
class GanResult:
    """Everything a training run produces besides the checkpoint files."""

    history: TrainHistory
    networks: dict[str, Network]
    snapshots: list[list[np.ndarray]]
    selected_epoch: int
    monitor: list[MonitorRecord] = field(default_factory=list)
    rng_states: list[str] = field(default_factory=list)  # shuffling rng after each epoch

    def selected_generator(self) -> Network:
        """Target -> source generator restored to the selected epoch."""
        generator = build_generator(0, ROLE_GENERATOR_G)
        generator.load_state_arrays(self.snapshots[self.selected_epoch])
        generator.epoch = self.selected_epoch
        return generator


def select_model(history: TrainHistory | list[float], warmup_epochs: int) -> int:
    """
    Epoch with the smallest total loss once warmup is over; the earliest wins ties.

    Raises:
        UsageError: The history is not longer than the warmup
    """
    totals = history.totals() if isinstance(history, TrainHistory) else list(history)
    if len(totals) <= warmup_epochs:
        raise UsageError(
            f"History has {len(totals)} epochs, not enough to pass a warmup of {warmup_epochs}",
            recovery_hint="Train for more epochs or lower --warmup.",
        )
    return warmup_epochs + int(np.argmin(totals[warmup_epochs:]))


def transform_target(generator: Mapping, target: LabeledDataset) -> LabeledDataset:
    """Map every target sample into the source domain; labels and coords pass through."""
    role = getattr(generator, "role", ROLE_GENERATOR_G)
    if role != ROLE_GENERATOR_G:
        raise UsageError(
            f"transform_target needs the {ROLE_GENERATOR_G} (target -> source) generator, got {role}"
        )
    if len(target) == 0:
        return target.with_samples(target.samples)
    inputs = target.network_input()
    chunks = []
    for i in range(0, len(target), TRANSFORM_BATCH):
        if isinstance(generator, Network):
            out = generator(inputs[i : i + TRANSFORM_BATCH], mode="eval")
        else:
            out = as_tensor(generator(inputs[i : i + TRANSFORM_BATCH]))
        chunks.append(out.data.reshape(-1, *target.samples.shape[1:]))
    samples = np.clip(np.concatenate(chunks), 0.0, 1.0)
    return target.with_samples(samples)


def alignment_report(
    source: LabeledDataset, target: LabeledDataset, transformed: LabeledDataset
) -> dict[str, float]:
    """Per-element L1 between the source mean sample and the raw / transformed target means."""
    source_mean = source.samples.mean(axis=0)
    raw = float(np.abs(target.samples.mean(axis=0) - source_mean).mean())
    adapted = float(np.abs(transformed.samples.mean(axis=0) - source_mean).mean())
    return {"raw_distance": raw, "transformed_distance": adapted}


def _monitor(epoch, generator, classifier, target) -> MonitorRecord:
    labels = target.require_labels("Adaptation monitoring")
    pred = predict(classifier, transform_target(generator, target)).labels
    cm = confusion(pred, labels)
    return MonitorRecord(epoch, overall_accuracy(cm), f1(cm), kappa(cm))


def discriminator_step(g, f, d_x, d_y, optimizer: Adam, x, y) -> tuple[float, float]:
    """
    One Adam ascent step of D_X and D_Y against fakes from the current generators.

    Only the parameters held by ``optimizer`` move; G and F are evaluated but untouched.

    Returns:
        (adv_g, adv_f) as evaluated before the update
    """
    fake_y = g(x).data
    fake_x = f(y).data
    optimizer.zero_grad()
    with Graph() as graph:
        adv_g = adversarial_loss(d_y, y, fake_y)
        adv_f = adversarial_loss(d_x, x, fake_x)
        graph.backward(-(adv_g + adv_f))
    optimizer.step()
    return adv_g.item(), adv_f.item()


def generator_step(
    g,
    f,
    d_x,
    d_y,
    optimizer: Adam,
    x,
    y,
    config: GanConfig,
    adversarial: tuple[float, float] = (0.0, 0.0),
    epoch: int = 0,
    batch: int = 0,
) -> LossComponents:
    """
    One joint Adam step of G and F on the weighted objective.

    Discriminator gradients from this pass are left for the next discriminator
    step to clear; D_X and D_Y are never updated here.

    Args:
        adversarial: (adv_g, adv_f) from the preceding discriminator step,
            reported alongside this step's cycle and identity terms

    Returns:
        The six loss components of this batch

    Raises:
        TrainingDivergedError: A loss is non-finite; no update is applied
    """
    optimizer.zero_grad()
    with Graph() as graph:
        cyc_x = cycle_loss(g, f, x)
        cyc_y = cycle_loss(f, g, y)
        id_g = identity_loss(g, y)
        id_f = identity_loss(f, x)
        fooled = generator_adversarial_loss(d_y, g(x)) + generator_adversarial_loss(d_x, f(y))
        objective = (
            config.alpha * fooled + config.beta * (cyc_x + cyc_y) + config.sigma * (id_g + id_f)
        )
        components = LossComponents(
            *adversarial, cyc_x.item(), cyc_y.item(), id_g.item(), id_f.item()
        )
        if not (components.is_finite() and np.isfinite(objective.item())):
            logger.error(f"GAN losses diverged at epoch {epoch}, batch {batch}")
            raise TrainingDivergedError("gan", epoch, batch, components.as_dict())
        graph.backward(objective)
    optimizer.step()
    return components


def train_gan(
    source: LabeledDataset,
    target: LabeledDataset,
    config: GanConfig | None = None,
    checkpoint_dir: str | Path | None = None,
    classifier: Network | None = None,
    monitor_target: LabeledDataset | None = None,
    metadata: dict | None = None,
) -> GanResult:
    """
    Train G, F, D_X and D_Y with alternating Adam updates.

    Each batch runs one discriminator step on both discriminators, then one
    joint generator step on G and F. Both domains are reshuffled every epoch
    from a seeded generator and the trailing partial batch is dropped. Target
    labels are never read, except by the optional monitor, which only
    evaluates.

    Args:
        source: Labeled source-domain samples (domain Y)
        target: Target-domain samples (domain X)
        config: Training hyperparameters
        checkpoint_dir: If set, all four networks are saved there every epoch
        classifier: Optional crop mapper for per-epoch monitoring
        monitor_target: Labeled target samples for monitoring
        metadata: Extra checkpoint metadata; a ``config_hash`` here replaces the
            hash of ``config``

    Returns:
        GanResult with the history, final networks, per-epoch G snapshots and
        rng states, and the selected epoch

    Raises:
        UsageError: A domain has fewer samples than one batch
        TrainingDivergedError: A loss becomes non-finite
    """
    config = config or GanConfig()
    n_batches = min(len(source), len(target)) // config.batch_size
    if n_batches == 0:
        raise UsageError(
            f"Need at least {config.batch_size} samples per domain, got "
            f"{len(source)} source and {len(target)} target",
            recovery_hint="Lower --batch-size or generate more samples.",
        )

    seeds = [int(s) for s in np.random.SeedSequence(config.seed).generate_state(5)]
    g = build_generator(seeds[0], ROLE_GENERATOR_G)
    f = build_generator(seeds[1], ROLE_GENERATOR_F)
    d_x = build_discriminator(seeds[2], ROLE_DISCRIMINATOR_X)
    d_y = build_discriminator(seeds[3], ROLE_DISCRIMINATOR_Y)
    rng = np.random.default_rng(seeds[4])

    hyper = {"learning_rate": config.learning_rate, "beta1": config.beta1}
    gen_opt = Adam(g.parameters() + f.parameters(), **hyper)
    disc_opt = Adam(d_x.parameters() + d_y.parameters(), **hyper)

    xs = target.network_input()
    ys = source.network_input()
    history = TrainHistory()
    snapshots: list[list[np.ndarray]] = []
    rng_states: list[str] = []
    monitor: list[MonitorRecord] = []
    if classifier is not None and monitor_target is None:
        raise UsageError("Monitoring needs a labeled target dataset alongside the classifier")
    base_metadata = {"seed": config.seed, "config_hash": config_hash(config), **(metadata or {})}

    for epoch in range(config.epochs):
        start = time.perf_counter()
        order_x = rng.permutation(len(target))
        order_y = rng.permutation(len(source))
        sums = np.zeros(len(COMPONENTS))

        for batch in range(n_batches):
            window = slice(batch * config.batch_size, (batch + 1) * config.batch_size)
            x = xs[order_x[window]]
            y = ys[order_y[window]]
            adversarial = discriminator_step(g, f, d_x, d_y, disc_opt, x, y)
            components = generator_step(
                g, f, d_x, d_y, gen_opt, x, y, config, adversarial, epoch, batch
            )
            sums += [getattr(components, name) for name in COMPONENTS]

        means = LossComponents(*(sums / n_batches))
        record = EpochRecord(epoch, means, total_loss(means, config), time.perf_counter() - start)
        rng_states.append(rng_state(rng))

        if checkpoint_dir is not None:
            epoch_dir = Path(checkpoint_dir) / f"epoch_{epoch:04d}"
            epoch_metadata = {
                **base_metadata,
                "total": format_value(record.total),
                "rng_state": rng_states[-1],
            }
            for network in (g, f, d_x, d_y):
                save_checkpoint(network, epoch_dir / f"{network.role}.ckpt", epoch, epoch_metadata)
            record.checkpoint = str(epoch_dir)

        history.records.append(record)
        snapshots.append(g.state_arrays())
        logger.info(
            f"GAN epoch {epoch}: total={record.total:.4f} "
            + " ".join(f"{k}={v:.4f}" for k, v in means.as_dict().items())
            + f" ({record.seconds:.1f}s)"
        )

        if classifier is not None:
            monitor.append(_monitor(epoch, g, classifier, monitor_target))
            logger.info(f"Monitor epoch {epoch}: f1={monitor[-1].f1:.4f} oa={monitor[-1].oa:.4f}")

    selected = select_model(history, config.warmup_epochs)
    logger.info(
        f"Selected epoch {selected} with total loss {history[selected].total:.6f} "
        f"(warmup {config.warmup_epochs})"
    )
    networks = {n.role: n for n in (g, f, d_x, d_y)}
    return GanResult(history, networks, snapshots, selected, monitor, rng_states)


def write_monitor(monitor: list[MonitorRecord], path: str | Path) -> Path:
    return write_csv(path, MONITOR_HEADER, ((m.epoch, m.oa, m.f1, m.kappa) for m in monitor))
