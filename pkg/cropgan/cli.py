#!/usr/bin/env python3
"""
CropGAN - command-line pipeline

Synthesizes or preprocesses domain data, trains the crop mapper and the domain
mapper, adapts target data and evaluates direct versus adapted transfer.
Every command writes a manifest.yaml next to its outputs; ``cropgan rerun``
replays a command from that manifest alone.
"""

import argparse
import logging
import shlex
import sys
from collections.abc import Callable
from pathlib import Path

import numpy as np
import yaml

from cropgan import benchmark as bench
from cropgan.checkpoint import load_checkpoint, save_checkpoint
from cropgan.classifier_trainer import (
    classifier_features,
    predict,
    split_dataset,
    train_classifier,
    write_history,
    write_predictions,
)
from cropgan.config import MANIFEST_NAME, RunConfig, config_hash, load_yaml, override
from cropgan.datasets import MAGIC as DATASET_MAGIC
from cropgan.datasets import LabeledDataset, read_dataset, write_dataset
from cropgan.gan_trainer import alignment_report, train_gan, transform_target, write_monitor
from cropgan.metrics import score
from cropgan.networks import ROLE_GENERATOR_G
from cropgan.preprocessor import ndvi, preprocess
from cropgan.render import labels_to_raster, render_error_map, render_map
from cropgan.scene_io import read_scene, write_scene
from cropgan.synth import (
    SHIFT_PRESETS,
    DomainSpec,
    SceneSpec,
    make_domain,
    make_scene,
    shift_preset,
)
from cropgan.tables import read_column, write_csv
from shared.errors import EXIT_USAGE, CropGanError, FormatError, UsageError
from shared.logging_config import run_log_path, setup_logging
from shared.version import __version__

logger = logging.getLogger("cropgan")

METRICS_HEADER = ("name", "oa", "f1", "kappa", "tp", "fp", "fn", "tn")
NDVI_HEADER = ("slot", "class", "mean_ndvi")
# Long-running commands also log to <out>/logs/cropgan.log unless a log file is configured
LOGGED_COMMANDS = ("train-classifier", "train-gan", "benchmark")


class _Parser(argparse.ArgumentParser):
    """Argument errors become UsageError so they map to exit code 1."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}", recovery_hint=f"Run '{self.prog} --help'.")


def _write_manifest(
    out_dir: Path, args, config: RunConfig, outputs: dict, stats: dict | None = None
):
    manifest = {
        "command": args.command,
        "version": __version__,
        "argv": list(args.argv),
        "config": config.to_dict(),
        "outputs": {k: str(v) for k, v in outputs.items()},
    }
    if stats:
        manifest["stats"] = stats
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / MANIFEST_NAME, "w") as f:
        yaml.safe_dump(manifest, f, default_flow_style=False, sort_keys=True)


def _labeled_or_predicted(path: Path) -> np.ndarray:
    """Truth labels from a dataset file, or the label column of a predictions CSV."""
    with open(path, "rb") as f:
        head = f.read(4)
    if head == DATASET_MAGIC:
        return read_dataset(path).require_labels("Evaluation")
    labels = read_column(path, "label")
    if any(label not in (0, 1) for label in labels):
        raise FormatError(str(path), 0, "labels must be 0 or 1")
    return np.array(labels, dtype=np.uint8)


def _stem(path: Path) -> str:
    return Path(path).stem


# Commands


def cmd_synth(args, config: RunConfig) -> int:
    synth = override(
        config.synth,
        preset=args.preset,
        n_per_class=args.n_per_class,
        noise_std=args.noise,
        jitter=args.jitter,
        width=args.width,
        height=args.height,
        field_size=args.field_size,
        cloud_gap_prob=args.cloud_prob,
        revisit=args.revisit,
        corn_fraction=args.corn_fraction,
    )
    config.synth = synth
    if synth.preset == "all":
        presets = sorted(p for p in SHIFT_PRESETS if p != "none")
    else:
        presets = [synth.preset]
    out = Path(args.out)
    outputs = {}
    for preset in presets:
        folder = out / preset if len(presets) > 1 else out
        source_seed, target_seed, s_scene, t_scene = (
            int(s) for s in np.random.SeedSequence(config.seed).generate_state(4)
        )
        common = {
            "n_per_class": synth.n_per_class,
            "noise_std": synth.noise_std,
            "jitter": synth.jitter,
        }
        domains = {
            "source": DomainSpec(seed=source_seed, name="source", **common),
            "target": DomainSpec(
                shift=shift_preset(preset), seed=target_seed, name="target", **common
            ),
        }
        for name, spec in domains.items():
            outputs[f"{preset}/{name}"] = write_dataset(make_domain(spec), folder / f"{name}.cgts")
            if args.scenes:
                scene = SceneSpec(
                    width=synth.width,
                    height=synth.height,
                    field_size=synth.field_size,
                    domain=spec,
                    cloud_gap_prob=synth.cloud_gap_prob,
                    corn_fraction=synth.corn_fraction,
                    border=synth.border,
                    revisit=synth.revisit,
                    seed=s_scene if name == "source" else t_scene,
                )
                outputs[f"{preset}/{name}_scene"] = write_scene(
                    make_scene(scene), folder / f"{name}_scene"
                )
        print(f"Wrote {preset} source/target domains to {folder}")
    _write_manifest(out, args, config, outputs)
    return 0


def cmd_preprocess(args, config: RunConfig) -> int:
    stack = read_scene(args.scene)
    domain = args.domain or _stem(args.scene)
    dataset, series = preprocess(stack, domain)
    out = Path(args.out)
    path = write_dataset(dataset, out / f"{domain}.cgts")
    stats = {
        "samples": len(dataset),
        "dropped": series.dropped,
        "non_cropland": series.non_cropland,
    }
    print(f"Extracted {len(dataset)} samples, dropped {series.dropped} pixels -> {path}")
    _write_manifest(out, args, config, {"dataset": path}, stats)
    return 0


def cmd_train_classifier(args, config: RunConfig) -> int:
    config.classifier = override(
        config.classifier, epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr
    )
    dataset = read_dataset(args.dataset)
    train, validation, test = split_dataset(dataset, config.split)
    result = train_classifier(train, validation, config.classifier)

    out = Path(args.out)
    outputs = {
        "checkpoint": save_checkpoint(
            result.network,
            out / "crop-mapper.ckpt",
            result.best_epoch,
            {
                "val_f1": result.best_f1,
                "seed": config.classifier.seed,
                "config_hash": config_hash(config),
                "rng_state": result.rng_state,
            },
        ),
        "history": write_history(result.history, out / "history.csv"),
        "validation": write_predictions(result.validation, out / "validation.csv"),
        "test": write_dataset(test, out / f"{dataset.domain}-test.cgts"),
    }
    test_scores = score(predict(result.network, test).labels, test.labels)
    print(
        f"Best epoch {result.best_epoch}: val F1 {result.best_f1:.4f}; "
        f"test OA {test_scores['oa']:.4f} F1 {test_scores['f1']:.4f} Kappa {test_scores['kappa']:.4f}"
    )
    stats = {"best_epoch": result.best_epoch, "test": test_scores}
    _write_manifest(out, args, config, outputs, stats)
    return 0


def cmd_train_gan(args, config: RunConfig) -> int:
    config.gan = override(
        config.gan,
        epochs=args.epochs,
        batch_size=args.batch_size,
        alpha=args.alpha,
        beta=args.beta,
        sigma=args.sigma,
        learning_rate=args.lr,
        warmup_epochs=args.warmup,
    )
    source = read_dataset(args.source)
    target = read_dataset(args.target)
    classifier = load_checkpoint(args.classifier) if args.classifier else None
    monitor_target = target if classifier is not None and target.has_labels else None
    if classifier is not None and monitor_target is None:
        logger.warning("Target has no labels; per-epoch monitoring disabled")
        classifier = None

    out = Path(args.out)
    result = train_gan(
        source,
        target.unlabeled(),
        config.gan,
        checkpoint_dir=out / "checkpoints",
        classifier=classifier,
        monitor_target=monitor_target,
        metadata={"config_hash": config_hash(config)},
    )
    generator = result.selected_generator()
    selected = result.selected_epoch
    outputs = {
        "history": result.history.to_csv(out / "history.csv"),
        "generator": save_checkpoint(
            generator,
            out / f"{ROLE_GENERATOR_G}.ckpt",
            selected,
            {
                "total": result.history[selected].total,
                "seed": config.gan.seed,
                "config_hash": config_hash(config),
                "rng_state": result.rng_states[selected],
            },
        ),
        "checkpoints": out / "checkpoints",
    }
    if result.monitor:
        outputs["monitor"] = write_monitor(result.monitor, out / "monitor.csv")
    print(
        f"Selected epoch {result.selected_epoch} "
        f"(total loss {result.history[result.selected_epoch].total:.6f})"
    )
    _write_manifest(out, args, config, outputs, {"selected_epoch": result.selected_epoch})
    return 0


def cmd_adapt(args, config: RunConfig) -> int:
    generator = load_checkpoint(args.generator)
    target = read_dataset(args.target)
    adapted = transform_target(generator, target)
    out = Path(args.out)
    path = write_dataset(adapted, out / f"{target.domain}-transformed.cgts")
    stats = {"samples": len(adapted), "generator_epoch": generator.epoch}
    if args.source:
        stats["alignment"] = alignment_report(read_dataset(args.source), target, adapted)
        print(
            f"Mean-sample L1 to source: raw {stats['alignment']['raw_distance']:.6f}, "
            f"transformed {stats['alignment']['transformed_distance']:.6f}"
        )
    print(f"Transformed {len(adapted)} samples -> {path}")
    _write_manifest(out, args, config, {"dataset": path}, stats)
    return 0


def cmd_predict(args, config: RunConfig) -> int:
    classifier = load_checkpoint(args.classifier)
    dataset = read_dataset(args.dataset)
    prediction = predict(classifier, dataset)
    out = Path(args.out)
    path = write_predictions(prediction, out / f"{args.name or dataset.domain}.csv")
    print(f"Predicted {len(prediction)} samples ({int(prediction.labels.sum())} corn) -> {path}")
    _write_manifest(out, args, config, {"predictions": path})
    return 0


def cmd_evaluate(args, config: RunConfig) -> int:
    truth = _labeled_or_predicted(Path(args.truth))
    runs = []
    if args.baseline:
        runs.append(("baseline", args.baseline))
    if args.adapted:
        runs.append(("cropgan", args.adapted))
    runs.extend((_stem(p), p) for p in args.pred or [])
    if not runs:
        raise UsageError(
            "Nothing to evaluate", recovery_hint="Pass --baseline, --adapted or --pred."
        )

    rows = []
    for name, path in runs:
        scores = score(_labeled_or_predicted(Path(path)), truth)
        rows.append((name, *(scores[k] for k in METRICS_HEADER[1:])))
        print(f"{name:>10}  OA {scores['oa']:.4f}  F1 {scores['f1']:.4f}  Kappa {scores['kappa']:.4f}")
    out = Path(args.out)
    path = write_csv(out / "metrics.csv", METRICS_HEADER, rows)
    _write_manifest(out, args, config, {"metrics": path})
    return 0


def cmd_tsne(args, config: RunConfig) -> int:
    from cropgan.tsne import tsne

    config.tsne = override(
        config.tsne,
        perplexity=args.perplexity,
        iterations=args.iterations,
        features=args.features,
        max_points=args.max_points,
    )
    parts = [("source", args.source), ("target", args.target), ("transformed", args.transformed)]
    datasets = [(tag, read_dataset(path)) for tag, path in parts if path]
    classifier = None
    if config.tsne.features == "classifier":
        if not args.classifier:
            raise UsageError("--features classifier needs --classifier")
        classifier = load_checkpoint(args.classifier)

    points, domains, classes = [], [], []
    for tag, dataset in datasets:
        points.append(classifier_features(classifier, dataset) if classifier else dataset.flat())
        domains.extend([tag] * len(dataset))
        classes.extend(dataset.labels.tolist() if dataset.has_labels else [None] * len(dataset))
    embedding = tsne(np.concatenate(points), config.tsne, domains, classes)

    out = Path(args.out)
    path = embedding.to_csv(out / "embedding.csv")
    print(f"Embedded {len(embedding)} points (KL {embedding.kl_initial:.4f} -> {embedding.kl_final:.4f})")
    _write_manifest(
        out,
        args,
        config,
        {"embedding": path},
        {"kl_initial": embedding.kl_initial, "kl_final": embedding.kl_final},
    )
    return 0


def cmd_render(args, config: RunConfig) -> int:
    stack = read_scene(args.scene)
    dataset = read_dataset(args.dataset)
    if dataset.coords is None:
        raise UsageError(
            f"{args.dataset} has no pixel coordinates",
            recovery_hint="Use a preprocessed scene dataset.",
        )
    labels = _labeled_or_predicted(Path(args.pred))
    grid = stack.cropland.shape
    raster = labels_to_raster(labels, dataset.coords, grid)

    out = Path(args.out)
    outputs = {"map": render_map(raster, out / "map.ppm")}
    if stack.truth is not None:
        truth = np.where(stack.cropland, stack.truth, 0)
        outputs["truth"] = render_map(truth, out / "truth.ppm")
        outputs["errors"] = render_error_map(raster, truth, out / "errors.ppm")
    print(f"Rendered {len(outputs)} images to {out}")
    _write_manifest(out, args, config, outputs)
    return 0


def cmd_ndvi(args, config: RunConfig) -> int:
    dataset = read_dataset(args.dataset)
    curves = ndvi(dataset.samples)
    rows = []
    if dataset.has_labels:
        groups = [(c, dataset.labels == c) for c in (0, 1)]
    else:
        groups = [("all", slice(None))]
    for label, selection in groups:
        chosen = curves[selection]
        if len(chosen) == 0:
            continue
        for slot, value in enumerate(chosen.mean(axis=0)):
            rows.append((slot, label, float(value)))
    out = Path(args.out)
    path = write_csv(out / f"ndvi-{dataset.domain}.csv", NDVI_HEADER, rows)
    print(f"Wrote mean NDVI curves -> {path}")
    _write_manifest(out, args, config, {"ndvi": path})
    return 0


def cmd_benchmark(args, config: RunConfig) -> int:
    synth = override(config.synth, preset=args.preset, n_per_class=args.n_per_class)
    config.synth = synth
    config.gan = override(config.gan, epochs=args.gan_epochs, warmup_epochs=args.warmup)
    config.classifier = override(config.classifier, epochs=args.classifier_epochs)
    settings = bench.BenchmarkSettings(
        preset=synth.preset,
        n_per_class=synth.n_per_class,
        noise_std=synth.noise_std,
        jitter=synth.jitter,
        gan=config.gan,
        classifier=config.classifier,
        split=config.split,
    )
    results = bench.run_benchmark(settings, args.seeds)
    out = Path(args.out)
    path = bench.write_results(results, out / "benchmark.csv")
    median = bench.median_delta_f1(results)
    print(f"{synth.preset}: median delta F1 over seeds {list(args.seeds)} = {median:+.4f}")
    _write_manifest(out, args, config, {"results": path}, {"median_delta_f1": median})
    return 0


def _global_flags(args) -> list[str]:
    """The global options of ``args`` other than --seed, as argv for a nested run."""
    flags = []
    if args.config:
        flags += ["--config", str(args.config)]
    if args.log_level:
        flags += ["--log-level", args.log_level]
    if args.log_file:
        flags += ["--log-file", str(args.log_file)]
    if args.verbose:
        flags.append("--verbose")
    return flags


def cmd_batch(args, config: RunConfig) -> int:
    if not args.subcommand:
        raise UsageError(
            "batch needs a command to run",
            recovery_hint="e.g. cropgan batch --seeds 0 1 2 --out runs train-gan ...",
        )
    if args.subcommand[0] in ("batch", "rerun"):
        raise UsageError(f"batch cannot run '{args.subcommand[0]}'")
    out = Path(args.out)
    status = 0
    for seed in args.seeds:
        argv = (
            _global_flags(args)
            + ["--seed", str(seed)]
            + list(args.subcommand)
            + ["--out", str(out / f"seed_{seed}")]
        )
        logger.info(f"batch: cropgan {shlex.join(argv)}")
        status = max(status, main(argv))
    _write_manifest(out, args, config, {f"seed_{s}": out / f"seed_{s}" for s in args.seeds})
    return status


def cmd_rerun(args, config: RunConfig) -> int:
    path = Path(args.manifest)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise UsageError(f"No manifest at {path}")
    manifest = load_yaml(path) or {}
    if not isinstance(manifest, dict) or "argv" not in manifest or "config" not in manifest:
        raise FormatError(str(path), 0, "not a cropgan run manifest")
    if not isinstance(manifest["argv"], list):
        raise FormatError(str(path), 0, "'argv' must be a list")
    logger.info(f"Re-running '{manifest.get('command')}' from {path}")
    argv = [str(a) for a in manifest["argv"]]
    return run(argv, RunConfig.from_dict(manifest["config"], str(path)))


# Parser


def _add_common(parser):
    parser.add_argument("-o", "--out", required=True, type=Path, help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cropgan", description="CropGAN - cross-domain early crop mapping")
    parser.add_argument("--version", action="version", version=f"cropgan {__version__}")
    parser.add_argument("-c", "--config", type=Path, help="YAML config file (flags override it)")
    parser.add_argument("--seed", type=int, help="Global seed (overrides config)")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-file", type=Path, help="Also log to this file (rotated)")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("synth", help="Generate synthetic source/target domains")
    _add_common(p)
    p.add_argument("--preset", choices=sorted(SHIFT_PRESETS) + ["all"], help="Target-domain shift")
    p.add_argument("--n-per-class", type=int, help="Samples per class and domain")
    p.add_argument("--noise", type=float, help="Per-band noise std")
    p.add_argument("--jitter", type=float, help="Phenology jitter scale (0 = none)")
    p.add_argument("--scenes", action="store_true", help="Also write scene directories")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument(
        "--field-size", type=int, help="Field edge in pixels; must divide width and height"
    )
    p.add_argument("--cloud-prob", type=float, help="Per-pixel cloud probability per observation")
    p.add_argument("--revisit", type=int, help="Days between observations")
    p.add_argument("--corn-fraction", type=float)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("preprocess", help="Composite, gap-fill and extract samples from a scene")
    p.add_argument("scene", type=Path, help="Scene directory")
    _add_common(p)
    p.add_argument(
        "--domain", help="Domain tag and output file stem (default: scene directory name)"
    )
    p.set_defaults(handler=cmd_preprocess)

    p = sub.add_parser("train-classifier", help="Train the crop mapper on a labeled dataset")
    p.add_argument("dataset", type=Path)
    _add_common(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.set_defaults(handler=cmd_train_classifier)

    p = sub.add_parser("train-gan", help="Train the target -> source domain mapper")
    p.add_argument("--source", required=True, type=Path, help="Labeled source dataset")
    p.add_argument("--target", required=True, type=Path, help="Target dataset (labels ignored)")
    _add_common(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--alpha", type=float, help="Adversarial weight (default 1)")
    p.add_argument("--beta", type=float, help="Cycle weight (default 10)")
    p.add_argument("--sigma", type=float, help="Identity weight (default 5)")
    p.add_argument("--lr", type=float)
    p.add_argument("--warmup", type=int, help="Epochs excluded from model selection")
    p.add_argument("--classifier", type=Path, help="Crop mapper for per-epoch monitoring")
    p.set_defaults(handler=cmd_train_gan)

    p = sub.add_parser("adapt", help="Transform target samples into the source domain")
    p.add_argument("--generator", required=True, type=Path)
    p.add_argument("--target", required=True, type=Path)
    p.add_argument("--source", type=Path, help="Report mean-sample alignment against this dataset")
    _add_common(p)
    p.set_defaults(handler=cmd_adapt)

    p = sub.add_parser("predict", help="Classify a dataset with a crop mapper")
    p.add_argument("--classifier", required=True, type=Path)
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--name", help="Output file stem (default: dataset domain)")
    _add_common(p)
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("evaluate", help="OA, F1 and Kappa of predictions against truth")
    p.add_argument("--truth", required=True, type=Path, help="Labeled dataset or predictions CSV")
    p.add_argument("--baseline", type=Path, help="Direct-transfer predictions")
    p.add_argument("--adapted", type=Path, help="Predictions on transformed target data")
    p.add_argument("--pred", type=Path, nargs="+", help="Further prediction files")
    _add_common(p)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("tsne", help="Embed source, target and transformed samples in 2-D")
    p.add_argument("--source", type=Path)
    p.add_argument("--target", type=Path)
    p.add_argument("--transformed", type=Path)
    p.add_argument("--features", choices=["raw", "classifier"])
    p.add_argument("--classifier", type=Path, help="Crop mapper for --features classifier")
    p.add_argument("--perplexity", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--max-points", type=int)
    _add_common(p)
    p.set_defaults(handler=cmd_tsne)

    p = sub.add_parser("render", help="Render class and error maps of scene predictions")
    p.add_argument("--scene", required=True, type=Path)
    p.add_argument("--dataset", required=True, type=Path, help="Dataset with pixel coordinates")
    p.add_argument(
        "--pred", required=True, type=Path, help="Predictions CSV aligned with the dataset"
    )
    _add_common(p)
    p.set_defaults(handler=cmd_render)

    p = sub.add_parser("ndvi", help="Per-class mean NDVI curves of a dataset")
    p.add_argument("dataset", type=Path)
    _add_common(p)
    p.set_defaults(handler=cmd_ndvi)

    p = sub.add_parser("benchmark", help="Direct vs adapted transfer on a synthetic preset")
    p.add_argument("--preset", choices=sorted(p for p in SHIFT_PRESETS if p != "none"))
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--n-per-class", type=int)
    p.add_argument("--gan-epochs", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--classifier-epochs", type=int)
    _add_common(p)
    p.set_defaults(handler=cmd_benchmark)

    p = sub.add_parser("batch", help="Run one command for several seeds, sequentially")
    p.add_argument("--seeds", type=int, nargs="+", required=True)
    _add_common(p)
    p.add_argument(
        "subcommand", nargs=argparse.REMAINDER, help="Command and its arguments (without --out)"
    )
    p.set_defaults(handler=cmd_batch)

    p = sub.add_parser("rerun", help="Re-execute a command from its manifest.yaml")
    p.add_argument("manifest", type=Path, help="manifest.yaml or the directory holding it")
    p.set_defaults(handler=cmd_rerun)

    return parser


def run(argv: list[str], config: RunConfig | None = None) -> int:
    """Parse ``argv`` and run its command; ``config`` replaces the config file when given."""
    args = build_parser().parse_args(argv)
    args.argv = list(argv)
    if not args.command:
        raise UsageError("No command given", recovery_hint="Run 'cropgan --help'.")

    if config is None:
        config = RunConfig.load(args.config) if args.config else RunConfig()
        if args.config and not Path(args.config).exists():
            raise UsageError(f"Config file not found: {args.config}")
    config = config.with_seed(args.seed)
    if args.log_level:
        config.log_level = args.log_level
    if args.log_file:
        config.log_file = str(args.log_file)
    elif config.log_file is None and args.command in LOGGED_COMMANDS:
        config.log_file = str(run_log_path(args.out))

    setup_logging(level="DEBUG" if args.verbose else config.log_level, log_file=config.log_file)
    logger.debug(f"cropgan {__version__}: {shlex.join(argv)}")
    handler: Callable = args.handler
    return handler(args, config)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return run(argv)
    except CropGanError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        if e.recovery_hint:
            print(f"Hint: {e.recovery_hint}", file=sys.stderr)
        return e.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
