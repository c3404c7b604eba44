"""Class maps and error maps as PPM images."""

from pathlib import Path

import numpy as np

from cropgan.datasets import LABEL_CORN
from cropgan.rasters import write_ppm
from shared.errors import UsageError

CORN_RGB = (0, 170, 0)
OTHER_RGB = (255, 255, 255)
ERROR_RGB = (220, 0, 0)
CORRECT_RGB = (255, 255, 255)


def labels_to_raster(labels, coords, grid: tuple[int, int]) -> np.ndarray:
    """Scatter per-sample labels onto the grid; cells without a sample stay 0 (other)."""
    labels = np.asarray(labels, dtype=np.uint8).reshape(-1)
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
    if len(labels) != len(coords):
        raise UsageError(f"{len(labels)} labels but {len(coords)} coordinates")
    height, width = grid
    if len(coords) and (coords[:, 0].max() >= height or coords[:, 1].max() >= width):
        raise UsageError(f"Coordinates fall outside the {height}x{width} grid")
    raster = np.zeros(grid, dtype=np.uint8)
    raster[coords[:, 0], coords[:, 1]] = labels
    return raster


def class_image(raster) -> np.ndarray:
    raster = np.asarray(raster)
    image = np.empty((*raster.shape, 3), dtype=np.uint8)
    image[...] = OTHER_RGB
    image[raster == LABEL_CORN] = CORN_RGB
    return image


def error_image(pred, truth) -> np.ndarray:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise UsageError(f"Prediction raster {pred.shape} is not aligned with truth {truth.shape}")
    image = np.empty((*pred.shape, 3), dtype=np.uint8)
    image[...] = CORRECT_RGB
    image[(pred > 0) != (truth > 0)] = ERROR_RGB
    return image


def render_map(raster, path: str | Path) -> Path:
    """Green for corn, white for other."""
    return write_ppm(path, class_image(raster))


def render_error_map(pred, truth, path: str | Path) -> Path:
    """Red where prediction and truth disagree, white elsewhere."""
    return write_ppm(path, error_image(pred, truth))
