"""Configuration management for CropGAN runs."""

import dataclasses
import hashlib
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from shared.errors import ConfigurationError, FormatError

DEFAULT_CONFIG_FILE = Path("cropgan.yaml")
MANIFEST_NAME = "manifest.yaml"


def load_yaml(path: str | Path):
    """
    Parse a YAML file.

    Raises:
        FormatError: The file is not valid UTF-8 YAML
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            return yaml.safe_load(f)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        offset = mark.index if mark is not None else 0
        reason = getattr(e, "problem", None) or str(e)
        raise FormatError(str(path), offset, f"invalid YAML: {reason}") from e
    except UnicodeDecodeError as e:
        raise FormatError(str(path), e.start, "file is not UTF-8 text") from e


def _accepts(annotation, value) -> bool:
    """Whether ``value`` fits a field annotation of int, float, str or an optional of those."""
    if isinstance(annotation, types.UnionType) or typing.get_origin(annotation) is typing.Union:
        return any(_accepts(a, value) for a in typing.get_args(annotation))
    if annotation is type(None):
        return value is None
    if isinstance(value, bool):
        return annotation is bool
    if annotation is float:
        return isinstance(value, int | float)
    if annotation in (int, str):
        return isinstance(value, annotation)
    return True


def _type_problems(cls, data: dict) -> list[tuple[str, str]]:
    problems = []
    for f in dataclasses.fields(cls):
        if f.name in data and not _accepts(f.type, data[f.name]):
            expected = getattr(f.type, "__name__", str(f.type))
            problems.append((f.name, f"must be {expected}, got {data[f.name]!r}"))
    return problems


def _check_types(instance) -> None:
    """Raise ConfigurationError before any comparison can fail on a wrongly typed field."""
    values = {f.name: getattr(instance, f.name) for f in dataclasses.fields(instance)}
    for name, problem in _type_problems(type(instance), values):
        raise ConfigurationError(name, problem)


def _from_dict(cls, data, section: str, path: str | None = None):
    """
    Build a config section from a mapping; unknown keys are ignored.

    Raises:
        FormatError: ``path`` is given and the section is not a mapping or holds a mistyped value
        ConfigurationError: The same faults without a file to blame, or a value out of range
    """
    data = {} if data is None else data
    problems = []
    if not isinstance(data, dict):
        problems.append((section, f"must be a mapping, got {data!r}"))
    else:
        names = {f.name for f in dataclasses.fields(cls)}
        data = {k: v for k, v in data.items() if k in names}
        problems = [(f"{section}.{n}", p) for n, p in _type_problems(cls, data)]
    if problems:
        name, problem = problems[0]
        if path is not None:
            raise FormatError(path, 0, f"'{name}' {problem}")
        raise ConfigurationError(name, problem)
    return cls(**data)


def config_hash(config) -> str:
    """SHA-256 of a config dataclass dumped as sorted YAML, logging options left out."""
    data = dataclasses.asdict(config)
    for key in ("log_level", "log_file"):
        data.pop(key, None)
    text = yaml.safe_dump(data, default_flow_style=False, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def override(section, **values):
    """Return a copy of ``section`` with every non-None value replaced (and re-validated)."""
    changes = {k: v for k, v in values.items() if v is not None}
    return dataclasses.replace(section, **changes) if changes else section


@dataclass
class GanConfig:
    """Domain mapper training hyperparameters."""

    alpha: float = 1.0  # adversarial weight
    beta: float = 10.0  # cycle weight
    sigma: float = 5.0  # identity weight
    epochs: int = 300
    batch_size: int = 64
    learning_rate: float = 0.005
    beta1: float = 0.5
    warmup_epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        _check_types(self)
        for name in ("alpha", "beta", "sigma"):
            if getattr(self, name) < 0:
                raise ConfigurationError(name, "loss coefficients must be non-negative")
        if self.epochs <= 0:
            raise ConfigurationError("epochs", "must be positive")
        if self.batch_size <= 0:
            raise ConfigurationError("batch_size", "must be positive")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate", "must be positive")
        if not 0.0 < self.beta1 < 1.0:
            raise ConfigurationError("beta1", "must be in (0, 1)")
        if not 0 <= self.warmup_epochs < self.epochs:
            raise ConfigurationError(
                "warmup_epochs",
                f"must be in [0, epochs), got {self.warmup_epochs} with {self.epochs} epochs",
            )


@dataclass
class ClassifierConfig:
    """Crop mapper training hyperparameters."""

    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 0.005
    beta1: float = 0.5
    seed: int = 0

    def __post_init__(self):
        _check_types(self)
        if self.epochs <= 0:
            raise ConfigurationError("epochs", "must be positive")
        if self.batch_size < 2:
            raise ConfigurationError("batch_size", "batch norm needs at least 2 samples per batch")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate", "must be positive")
        if not 0.0 < self.beta1 < 1.0:
            raise ConfigurationError("beta1", "must be in (0, 1)")


@dataclass
class SplitSpec:
    """Train/validation/test fractions for the labeled source set."""

    train_fraction: float = 0.70
    validation_fraction: float = 0.15
    test_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        _check_types(self)
        fractions = (self.train_fraction, self.validation_fraction, self.test_fraction)
        if any(not 0.0 < f < 1.0 for f in fractions):
            raise ConfigurationError("split", f"fractions must lie in (0, 1), got {fractions}")
        if abs(sum(fractions) - 1.0) > 1e-12:
            raise ConfigurationError("split", f"fractions must sum to 1, got {sum(fractions)}")


@dataclass
class TsneConfig:
    """Exact t-SNE settings."""

    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    exaggeration: float = 12.0
    exaggeration_iterations: int = 250
    initial_momentum: float = 0.5
    final_momentum: float = 0.8
    momentum_switch: int = 250
    max_points: int = 5000
    features: str = "raw"  # "raw" or "classifier"
    seed: int = 0

    def __post_init__(self):
        _check_types(self)
        if self.perplexity <= 0:
            raise ConfigurationError("perplexity", "must be positive")
        if self.iterations <= 0:
            raise ConfigurationError("iterations", "must be positive")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate", "must be positive")
        if self.exaggeration < 1:
            raise ConfigurationError("exaggeration", "must be at least 1")
        if self.max_points < 4:
            raise ConfigurationError("max_points", "t-SNE needs at least 4 points")
        if self.features not in ("raw", "classifier"):
            raise ConfigurationError("features", "must be 'raw' or 'classifier'")


@dataclass
class SynthConfig:
    """Synthetic benchmark settings used by the synth and benchmark commands."""

    preset: str = "canada-like"
    n_per_class: int = 1000
    noise_std: float = 0.01
    jitter: float = 1.0
    width: int = 48
    height: int = 48
    field_size: int = 8
    border: int = 1
    corn_fraction: float = 0.5
    cloud_gap_prob: float = 0.2
    revisit: int = 5

    def __post_init__(self):
        _check_types(self)
        if self.n_per_class < 1:
            raise ConfigurationError("n_per_class", "must be at least 1")
        if self.noise_std < 0 or self.jitter < 0:
            raise ConfigurationError("noise_std", "noise and jitter must be non-negative")
        if not 0.0 <= self.cloud_gap_prob < 1.0:
            raise ConfigurationError("cloud_gap_prob", "must be in [0, 1)")
        if not 0.0 <= self.corn_fraction <= 1.0:
            raise ConfigurationError("corn_fraction", "must be in [0, 1]")
        if self.revisit <= 0:
            raise ConfigurationError("revisit", "must be positive")


@dataclass
class _Globals:
    """Top-level scalar settings of a config file."""

    seed: int = 0
    log_level: str = "INFO"
    log_file: str | None = None


@dataclass
class RunConfig:
    """Top-level run configuration: global settings plus one section per stage."""

    seed: int = 0
    log_level: str = "INFO"
    log_file: str | None = None
    gan: GanConfig = field(default_factory=GanConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    tsne: TsneConfig = field(default_factory=TsneConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self):
        _check_types(self)

    @classmethod
    def load(cls, path: Path | None = None) -> "RunConfig":
        """
        Load configuration from a YAML file; a missing or empty file yields defaults.

        Raises:
            FormatError: The file is not YAML, is not a mapping or holds a mistyped value
            ConfigurationError: A value is out of range
        """
        path = Path(path) if path else DEFAULT_CONFIG_FILE

        if not path.exists():
            return cls()

        data = load_yaml(path) or {}
        if not isinstance(data, dict):
            raise FormatError(str(path), 0, "top level must be a mapping of sections")

        return cls.from_dict(data, str(path))

    @classmethod
    def from_dict(cls, data: dict, path: str | None = None) -> "RunConfig":
        """Build from a mapping; ``path`` names the file the mapping came from, if any."""
        top = _from_dict(_Globals, data, "config", path)
        return cls(
            seed=top.seed,
            log_level=top.log_level,
            log_file=top.log_file,
            gan=_from_dict(GanConfig, data.get("gan"), "gan", path),
            classifier=_from_dict(ClassifierConfig, data.get("classifier"), "classifier", path),
            split=_from_dict(SplitSpec, data.get("split"), "split", path),
            tsne=_from_dict(TsneConfig, data.get("tsne"), "tsne", path),
            synth=_from_dict(SynthConfig, data.get("synth"), "synth", path),
        )

    def with_seed(self, seed: int | None) -> "RunConfig":
        """Copy with ``seed`` applied globally and to every seeded section."""
        if seed is None:
            return self
        return dataclasses.replace(
            self,
            seed=seed,
            gan=override(self.gan, seed=seed),
            classifier=override(self.classifier, seed=seed),
            split=override(self.split, seed=seed),
            tsne=override(self.tsne, seed=seed),
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def save(self, path: Path | None = None) -> None:
        """Save configuration to file."""
        path = Path(path) if path else DEFAULT_CONFIG_FILE
        path.parent.mkdir(parents=True, exist_ok=True)

        with open(path, "w") as f:
            yaml.safe_dump(self.to_dict(), f, default_flow_style=False, sort_keys=True)
