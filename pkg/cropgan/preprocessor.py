"""Cloud-masked compositing, gap filling and sample extraction for scene time series."""

import logging
from dataclasses import dataclass, field

import numpy as np

from cropgan.datasets import BANDS, NIR, RED, TIMESTEPS, LabeledDataset
from shared.errors import ConfigurationError, UsageError

logger = logging.getLogger("cropgan.preprocessor")

REFLECTANCE_SCALE = 10000
MAX_RAW = 10000
WINDOW_LEN = 10


@dataclass
class SceneStack:
    """
    Gridded raw reflectance series with per-observation cloud masks.

    bands holds (observations, 6, height, width) integers in [0, 10000];
    clouds holds (observations, height, width) booleans, True where cloudy.
    """

    days: np.ndarray
    bands: np.ndarray
    clouds: np.ndarray
    cropland: np.ndarray
    window_starts: tuple[int, ...]
    window_len: int = WINDOW_LEN
    truth: np.ndarray | None = None

    def __post_init__(self):
        self.days = np.asarray(self.days, dtype=np.int64)
        self.bands = np.asarray(self.bands, dtype=np.uint16)
        self.clouds = np.asarray(self.clouds, dtype=bool)
        self.cropland = np.asarray(self.cropland, dtype=bool)
        self.window_starts = tuple(int(s) for s in self.window_starts)
        n_obs = len(self.days)
        if self.bands.ndim != 4 or self.bands.shape[:2] != (n_obs, BANDS):
            raise UsageError(f"bands must be (observations, 6, H, W), got {self.bands.shape}")
        grid = self.cropland.shape
        if self.bands.shape[2:] != grid or self.clouds.shape != (n_obs, *grid):
            raise UsageError("Band, cloud and cropland rasters must share one grid")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=np.uint8)
            if self.truth.shape != grid:
                raise UsageError("Truth raster does not match the scene grid")
        if np.any(np.diff(self.days) <= 0):
            raise UsageError("Observation days must be strictly increasing")
        if self.bands.size and self.bands.max() > MAX_RAW:
            raise UsageError(f"Raw band values must lie in [0, {MAX_RAW}]")
        _check_windows(self.window_starts, self.window_len)

    @property
    def height(self) -> int:
        return self.cropland.shape[0]

    @property
    def width(self) -> int:
        return self.cropland.shape[1]


def _check_windows(starts, window_len: int) -> None:
    if len(starts) != TIMESTEPS:
        raise ConfigurationError("window_starts", f"need {TIMESTEPS} windows, got {len(starts)}")
    if window_len <= 0:
        raise ConfigurationError("window_len", "must be positive")
    for a, b in zip(starts, starts[1:]):
        if b < a + window_len:
            raise ConfigurationError("window_starts", f"windows starting at {a} and {b} overlap")


@dataclass
class CompositeSeries:
    """
    Per-cropland-pixel (9, 6) reflectance matrices; NaN marks a missing slot.

    coords holds the (row, col) of each pixel; dropped and non_cropland count
    the pixels of the grid that are not represented.
    """

    values: np.ndarray
    coords: np.ndarray
    grid: tuple[int, int]
    non_cropland: int = 0
    dropped: int = 0
    drop_coords: list[tuple[int, int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def missing(self) -> int:
        return int(np.isnan(self.values).sum())


def composite(
    stack: SceneStack,
    window_starts=None,
    window_len: int | None = None,
) -> CompositeSeries:
    """
    Mean of the cloud-free observations in each window, scaled into [0, 1].

    Windows with no cloud-free observation yield NaN. Non-cropland pixels are
    left out entirely.

    Raises:
        UsageError: The stack has no observations
    """
    starts = tuple(window_starts) if window_starts is not None else stack.window_starts
    length = window_len if window_len is not None else stack.window_len
    _check_windows(starts, length)
    if len(stack.days) == 0:
        raise UsageError("Scene stack has no observations")

    rows, cols = np.nonzero(stack.cropland)
    values = np.full((len(rows), TIMESTEPS, BANDS), np.nan)

    for slot, start in enumerate(starts):
        inside = np.nonzero((stack.days >= start) & (stack.days < start + length))[0]
        clear = ~stack.clouds[inside][:, rows, cols]  # (k, pixels)
        raw = stack.bands[inside][:, :, rows, cols].astype(np.int64)  # (k, 6, pixels)
        sums = (raw * clear[:, None, :]).sum(axis=0)
        count = clear.sum(axis=0)
        seen = count > 0
        values[seen, slot, :] = (sums[:, seen] / count[seen]).T / REFLECTANCE_SCALE

    series = CompositeSeries(
        values=values,
        coords=np.stack([rows, cols], axis=1).astype(np.uint32),
        grid=stack.cropland.shape,
        non_cropland=int(stack.cropland.size - len(rows)),
    )
    logger.debug(f"Composited {len(rows)} cropland pixels, {series.missing} missing values")
    return series


def fill_gaps(series: CompositeSeries) -> CompositeSeries:
    """
    Linear interpolation over missing slots, per pixel and band.

    Leading and trailing gaps hold the nearest observed value. Pixels with a
    band that is missing in all slots are dropped and counted.
    """
    values = series.values.copy()
    keep = np.ones(len(values), dtype=bool)
    slots = np.arange(TIMESTEPS)

    for pixel in np.nonzero(np.isnan(values).any(axis=(1, 2)))[0]:
        for band in range(BANDS):
            curve = values[pixel, :, band]
            known = ~np.isnan(curve)
            if not known.any():
                keep[pixel] = False
                break
            if not known.all():
                values[pixel, :, band] = np.interp(slots, slots[known], curve[known])

    dropped = int((~keep).sum())
    if dropped:
        logger.warning(f"Dropped {dropped} pixels with a band missing in every window")
    return CompositeSeries(
        values=values[keep],
        coords=series.coords[keep],
        grid=series.grid,
        non_cropland=series.non_cropland,
        dropped=series.dropped + dropped,
        drop_coords=series.drop_coords + [tuple(int(v) for v in c) for c in series.coords[~keep]],
    )


def extract_samples(
    series: CompositeSeries, truth: np.ndarray | None = None, domain: str = ""
) -> LabeledDataset:
    """
    One sample per retained pixel, with coords and (optionally) truth labels.

    Raises:
        UsageError: The series still has missing values or the truth grid differs
    """
    if series.missing:
        raise UsageError(
            f"Series has {series.missing} missing values",
            recovery_hint="Run fill_gaps before extracting samples.",
        )
    labels = None
    if truth is not None:
        truth = np.asarray(truth)
        if truth.shape != tuple(series.grid):
            raise UsageError(f"Truth raster {truth.shape} does not match grid {series.grid}")
        labels = truth[series.coords[:, 0], series.coords[:, 1]].astype(np.uint8)
    return LabeledDataset(
        samples=np.clip(series.values, 0.0, 1.0),
        labels=labels,
        domain=domain,
        coords=series.coords,
    )


def preprocess(stack: SceneStack, domain: str = "") -> tuple[LabeledDataset, CompositeSeries]:
    """composite -> fill_gaps -> extract_samples, returning the dataset and the filled series."""
    filled = fill_gaps(composite(stack))
    return extract_samples(filled, stack.truth, domain), filled


def ndvi(samples) -> np.ndarray:
    """
    (NIR - Red) / (NIR + Red) per timestep; 0 where both bands are 0.

    Accepts one (9, 6) sample or an (n, 9, 6) batch.
    """
    samples = np.asarray(samples, dtype=np.float64)
    nir = samples[..., NIR]
    red = samples[..., RED]
    total = nir + red
    safe = np.where(total == 0, 1.0, total)
    return np.where(total == 0, 0.0, (nir - red) / safe)
