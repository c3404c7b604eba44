"""End-to-end synthetic benchmark: direct transfer versus domain-mapped transfer."""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from cropgan.classifier_trainer import predict, split_dataset, train_classifier
from cropgan.config import ClassifierConfig, GanConfig, SplitSpec
from cropgan.datasets import LabeledDataset
from cropgan.gan_trainer import alignment_report, train_gan, transform_target
from cropgan.metrics import score
from cropgan.synth import DomainSpec, make_domain, shift_preset
from cropgan.tables import write_csv

logger = logging.getLogger("cropgan.benchmark")

RESULT_HEADER = (
    "seed",
    "baseline_oa",
    "baseline_f1",
    "baseline_kappa",
    "adapted_oa",
    "adapted_f1",
    "adapted_kappa",
    "delta_f1",
    "selected_epoch",
)


@dataclass
class BenchmarkSettings:
    preset: str = "canada-like"
    n_per_class: int = 1000
    noise_std: float = 0.01
    jitter: float = 1.0
    gan: GanConfig = field(default_factory=GanConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    split: SplitSpec = field(default_factory=SplitSpec)


@dataclass
class PipelineResult:
    seed: int
    baseline: dict[str, float]
    adapted: dict[str, float]
    selected_epoch: int
    alignment: dict[str, float]

    @property
    def delta_f1(self) -> float:
        return self.adapted["f1"] - self.baseline["f1"]

    def row(self) -> tuple:
        b, a = self.baseline, self.adapted
        return (
            self.seed,
            b["oa"],
            b["f1"],
            b["kappa"],
            a["oa"],
            a["f1"],
            a["kappa"],
            self.delta_f1,
            self.selected_epoch,
        )


def make_domains(settings: BenchmarkSettings, seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Labeled source (no shift) and target (preset shift) domains for one seed."""
    source_seed, target_seed = (int(s) for s in np.random.SeedSequence(seed).generate_state(2))
    common = {
        "n_per_class": settings.n_per_class,
        "noise_std": settings.noise_std,
        "jitter": settings.jitter,
    }
    source = make_domain(DomainSpec(seed=source_seed, name="source", **common))
    target = make_domain(
        DomainSpec(shift=shift_preset(settings.preset), seed=target_seed, name="target", **common)
    )
    return source, target


def run_pipeline(settings: BenchmarkSettings, seed: int) -> PipelineResult:
    """synth -> train classifier -> train GAN -> adapt -> score both transfer paths."""
    source, target = make_domains(settings, seed)
    train, validation, _ = split_dataset(source, replace(settings.split, seed=seed))
    trained = train_classifier(train, validation, replace(settings.classifier, seed=seed))
    classifier = trained.network

    gan = train_gan(source, target.unlabeled(), replace(settings.gan, seed=seed))
    adapted = transform_target(gan.selected_generator(), target)

    baseline = score(predict(classifier, target).labels, target.labels)
    adapted_scores = score(predict(classifier, adapted).labels, target.labels)
    result = PipelineResult(
        seed=seed,
        baseline=baseline,
        adapted=adapted_scores,
        selected_epoch=gan.selected_epoch,
        alignment=alignment_report(source, target, adapted),
    )
    logger.info(
        f"Seed {seed}: baseline F1 {baseline['f1']:.4f}, adapted F1 {adapted_scores['f1']:.4f} "
        f"(delta {result.delta_f1:+.4f})"
    )
    return result


def run_benchmark(settings: BenchmarkSettings, seeds) -> list[PipelineResult]:
    return [run_pipeline(settings, int(seed)) for seed in seeds]


def median_delta_f1(results: list[PipelineResult]) -> float:
    return float(np.median([r.delta_f1 for r in results]))


def write_results(results: list[PipelineResult], path: str | Path) -> Path:
    return write_csv(path, RESULT_HEADER, (r.row() for r in results))
