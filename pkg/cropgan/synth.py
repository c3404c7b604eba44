"""Synthetic, domain-shifted crop reflectance series.

Greenness follows a double-logistic NDVI curve per class. Bands are built so
that the NDVI of the noise-free vector equals the curve value exactly; a
domain shift moves the season in time and scales its amplitude.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from cropgan.datasets import BANDS, LABEL_CORN, LABEL_OTHER, TIMESTEPS, LabeledDataset
from cropgan.preprocessor import WINDOW_LEN, SceneStack
from shared.errors import ConfigurationError

logger = logging.getLogger("cropgan.synth")

DEFAULT_WINDOW_STARTS = tuple(range(20, 20 + TIMESTEPS * WINDOW_LEN, WINDOW_LEN))
SOS_JITTER_DAYS = 3.0
AMPLITUDE_JITTER = 0.03
DEFAULT_REVISIT = 5
CLOUD_RAW_VALUE = 9000


@dataclass(frozen=True)
class PhenologyParams:
    base: float
    amplitude: float
    t_sos: float
    t_eos: float
    k1: float
    k2: float
    label: int = LABEL_CORN

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigurationError("amplitude", "must be non-negative")
        if self.t_sos >= self.t_eos:
            raise ConfigurationError("t_sos", "start of season must precede end of season")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ConfigurationError("k1/k2", "steepness must be positive")
        if self.base + self.amplitude > 1.0 + 1e-12:
            raise ConfigurationError("amplitude", "base + amplitude must not exceed 1")

    def shifted(self, shift: "DomainShift") -> "PhenologyParams":
        return replace(
            self,
            t_sos=self.t_sos + shift.day_shift,
            t_eos=self.t_eos + shift.day_shift,
            amplitude=self.amplitude * shift.amplitude_scale,
        )


CORN = PhenologyParams(
    base=0.15, amplitude=0.65, t_sos=35, t_eos=110, k1=0.15, k2=0.12, label=LABEL_CORN
)
OTHER = PhenologyParams(
    base=0.15, amplitude=0.45, t_sos=15, t_eos=95, k1=0.12, k2=0.10, label=LABEL_OTHER
)


@dataclass(frozen=True)
class DomainShift:
    day_shift: float = 0.0
    amplitude_scale: float = 1.0
    noise_std: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.amplitude_scale <= 2.0:
            raise ConfigurationError("amplitude_scale", "must be in (0, 2]")
        if abs(self.day_shift) > 45:
            raise ConfigurationError("day_shift", "must be within 45 days")
        if self.noise_std < 0:
            raise ConfigurationError("noise_std", "must be non-negative")


SHIFT_PRESETS = {
    "none": DomainShift(),
    "cross-year": DomainShift(day_shift=-10, amplitude_scale=1.0, noise_std=0.02),
    "china-like": DomainShift(day_shift=-10, amplitude_scale=1.15),
    "canada-like": DomainShift(day_shift=-30, amplitude_scale=1.0),
}


def shift_preset(name: str) -> DomainShift:
    try:
        return SHIFT_PRESETS[name]
    except KeyError:
        raise ConfigurationError("preset", f"unknown preset {name!r}, choose from {sorted(SHIFT_PRESETS)}")


@dataclass(frozen=True)
class BandModel:
    """Per-class mapping from NDVI to the six band reflectances."""

    brightness: float = 0.8  # Red + NIR
    visible_intercept: float = 0.1  # B2, B3
    visible_slope: float = -0.05
    swir_intercept: float = 0.3  # B11, B12
    swir_slope: float = -0.2


BAND_MODELS = {LABEL_CORN: BandModel(), LABEL_OTHER: BandModel()}


def _logistic(z):
    return np.exp(-np.logaddexp(0.0, -z))


def phenology_curve(params: PhenologyParams, t):
    """base + amplitude * (logistic(k1 (t - sos)) - logistic(k2 (t - eos)))."""
    t = np.asarray(t, dtype=np.float64)
    rise = _logistic(params.k1 * (t - params.t_sos))
    fall = _logistic(params.k2 * (t - params.t_eos))
    return params.base + params.amplitude * (rise - fall)


def synth_bands(
    ndvi_t,
    label: int = LABEL_CORN,
    rng: np.random.Generator | None = None,
    noise_std: float = 0.0,
) -> np.ndarray:
    """
    Six-band reflectance with NDVI equal to ``ndvi_t`` before noise.

    Red and NIR split the class brightness s as s(1 - v)/2 and s(1 + v)/2;
    visible and SWIR bands are affine in v. Noise is added per band and the
    result clipped into [0, 1].

    Returns:
        Array of shape ndvi_t.shape + (6,) in band order B2, B3, B4, B8, B11, B12
    """
    v = np.asarray(ndvi_t, dtype=np.float64)
    model = BAND_MODELS[label]
    visible = model.visible_intercept + model.visible_slope * v
    swir = model.swir_intercept + model.swir_slope * v
    red = model.brightness * (1.0 - v) / 2.0
    nir = model.brightness * (1.0 + v) / 2.0
    bands = np.stack([visible, visible, red, nir, swir, swir], axis=-1)
    if noise_std > 0:
        rng = rng if rng is not None else np.random.default_rng()
        bands = bands + rng.normal(0.0, noise_std, size=bands.shape)
    return np.clip(bands, 0.0, 1.0)


def window_midpoints(window_starts, window_len: int = WINDOW_LEN) -> np.ndarray:
    return np.asarray(window_starts, dtype=np.float64) + window_len / 2


@dataclass
class DomainSpec:
    """Recipe for one synthetic domain of balanced corn / other samples."""

    n_per_class: int = 500
    corn: PhenologyParams = CORN
    other: PhenologyParams = OTHER
    shift: DomainShift = field(default_factory=DomainShift)
    window_starts: tuple[float, ...] = DEFAULT_WINDOW_STARTS
    window_len: int = WINDOW_LEN
    noise_std: float = 0.01
    jitter: float = 1.0
    seed: int = 0
    name: str = "synthetic"

    def __post_init__(self):
        if self.n_per_class < 1:
            raise ConfigurationError("n_per_class", "must be at least 1")
        if len(self.window_starts) != TIMESTEPS:
            raise ConfigurationError("window_starts", f"need {TIMESTEPS} windows")
        if self.noise_std < 0 or self.jitter < 0:
            raise ConfigurationError("noise_std", "noise and jitter must be non-negative")

    @property
    def total_noise(self) -> float:
        return float(np.hypot(self.noise_std, self.shift.noise_std))


def _jittered(params: PhenologyParams, rng: np.random.Generator, n: int, jitter: float):
    """Per-sample (sos, eos, amplitude) arrays around ``params``."""
    sos = params.t_sos + rng.normal(0.0, SOS_JITTER_DAYS * jitter, n)
    eos = params.t_eos + rng.normal(0.0, SOS_JITTER_DAYS * jitter, n)
    amplitude = params.amplitude + rng.normal(0.0, AMPLITUDE_JITTER * jitter, n)
    amplitude = np.clip(amplitude, 0.0, 1.0 - params.base)
    return sos, eos, amplitude


def _curves(params: PhenologyParams, sos, eos, amplitude, t) -> np.ndarray:
    """NDVI of many jittered curves at times t: (n,) params x (m,) t -> (n, m)."""
    t = np.asarray(t, dtype=np.float64)[None, :]
    rise = _logistic(params.k1 * (t - sos[:, None]))
    fall = _logistic(params.k2 * (t - eos[:, None]))
    return params.base + amplitude[:, None] * (rise - fall)


def make_domain(spec: DomainSpec) -> LabeledDataset:
    """
    Balanced labeled samples of the shifted phenology at the window midpoints.

    Samples are shuffled with the spec seed; the same spec always yields the
    same dataset.
    """
    rng = np.random.default_rng(spec.seed)
    t = window_midpoints(spec.window_starts, spec.window_len)
    samples, labels = [], []
    for params in (spec.corn, spec.other):
        shifted = params.shifted(spec.shift)
        sos, eos, amplitude = _jittered(shifted, rng, spec.n_per_class, spec.jitter)
        ndvi = _curves(shifted, sos, eos, amplitude, t)
        samples.append(synth_bands(ndvi, params.label, rng, spec.total_noise))
        labels.append(np.full(spec.n_per_class, params.label, dtype=np.uint8))
    order = rng.permutation(2 * spec.n_per_class)
    dataset = LabeledDataset(
        samples=np.concatenate(samples)[order],
        labels=np.concatenate(labels)[order],
        domain=spec.name,
    )
    logger.debug(f"Generated {len(dataset)} samples for domain {spec.name}")
    return dataset


@dataclass
class SceneSpec:
    """Recipe for a synthetic scene of rectangular fields."""

    width: int = 48
    height: int = 48
    field_size: int = 8
    domain: DomainSpec = field(default_factory=DomainSpec)
    cloud_gap_prob: float = 0.2
    corn_fraction: float = 0.5
    border: int = 1
    revisit: int = DEFAULT_REVISIT
    seed: int = 0

    def __post_init__(self):
        if self.field_size <= 0 or self.width % self.field_size or self.height % self.field_size:
            raise ConfigurationError(
                "field_size",
                f"{self.field_size} must divide width {self.width} and height {self.height}",
            )
        if not 0.0 <= self.cloud_gap_prob < 1.0:
            raise ConfigurationError("cloud_gap_prob", "must be in [0, 1)")
        if not 0.0 <= self.corn_fraction <= 1.0:
            raise ConfigurationError("corn_fraction", "must be in [0, 1]")
        if self.border < 0 or 2 * self.border >= min(self.width, self.height):
            raise ConfigurationError("border", "must leave some cropland")
        if self.revisit <= 0:
            raise ConfigurationError("revisit", "must be positive")


def observation_days(window_starts, window_len: int, revisit: int) -> np.ndarray:
    """Acquisition days every ``revisit`` days across the windows, offset to mid-interval."""
    first, last = int(window_starts[0]), int(window_starts[-1]) + window_len
    return np.arange(first, last, revisit, dtype=np.int64) + revisit // 2


def field_classes(spec: SceneSpec, rng: np.random.Generator) -> np.ndarray:
    """(rows, cols) grid of field labels with round(corn_fraction * fields) corn fields."""
    shape = (spec.height // spec.field_size, spec.width // spec.field_size)
    n_fields = shape[0] * shape[1]
    n_corn = int(round(spec.corn_fraction * n_fields))
    labels = np.zeros(n_fields, dtype=np.uint8)
    labels[rng.permutation(n_fields)[:n_corn]] = LABEL_CORN
    return labels.reshape(shape)


def make_scene(spec: SceneSpec) -> SceneStack:
    """
    Render a scene: one jittered phenology per field, per-pixel band noise,
    random cloud cover per pixel and observation, a cropland border and truth.

    A clean window composites to the bands of the mean NDVI over its observation
    days. That equals the curve at the window midpoint only when ``revisit``
    equals the window length, so each window holds one acquisition at its middle.
    """
    domain = spec.domain
    rng = np.random.default_rng(spec.seed)
    days = observation_days(domain.window_starts, domain.window_len, spec.revisit)
    fields = field_classes(spec, rng)
    pixel_fields = np.kron(fields, np.ones((spec.field_size, spec.field_size), dtype=np.uint8))

    ndvi = np.empty((spec.height, spec.width, len(days)))
    field_index = np.arange(fields.size).reshape(fields.shape)
    field_index = np.kron(field_index, np.ones((spec.field_size, spec.field_size), dtype=np.int64))
    for label, params in ((LABEL_CORN, domain.corn), (LABEL_OTHER, domain.other)):
        shifted = params.shifted(domain.shift)
        ids = np.nonzero(fields.reshape(-1) == label)[0]
        if len(ids) == 0:
            continue
        sos, eos, amplitude = _jittered(shifted, rng, len(ids), domain.jitter)
        curves = _curves(shifted, sos, eos, amplitude, days)  # (fields, days)
        for row, field_id in enumerate(ids):
            ndvi[field_index == field_id] = curves[row]

    bands = np.empty((len(days), BANDS, spec.height, spec.width), dtype=np.uint16)
    for label in (LABEL_CORN, LABEL_OTHER):
        where = pixel_fields == label
        if not where.any():
            continue
        values = synth_bands(ndvi[where], label, rng, domain.total_noise)  # (pixels, days, 6)
        raw = np.rint(values * 10000).astype(np.uint16)
        for obs in range(len(days)):
            bands[obs][:, where] = raw[:, obs, :].T

    clouds = rng.random((len(days), spec.height, spec.width)) < spec.cloud_gap_prob
    bands[np.broadcast_to(clouds[:, None], bands.shape)] = CLOUD_RAW_VALUE

    cropland = np.zeros((spec.height, spec.width), dtype=bool)
    b = spec.border
    cropland[b : spec.height - b, b : spec.width - b] = True

    return SceneStack(
        days=days,
        bands=bands,
        clouds=clouds,
        cropland=cropland,
        window_starts=tuple(int(s) for s in domain.window_starts),
        window_len=domain.window_len,
        truth=pixel_fields,
    )
