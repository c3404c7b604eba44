"""Scene directories: a YAML manifest, raw u16 band rasters and PGM masks.

Layout::

    manifest.yaml        width, height, days, window_starts, window_len, files
    obs_000.u16          6 bands x height x width, little-endian u16, band-sequential
    cloud_000.pgm        P5 mask, 255 = cloudy
    cropland.pgm         P5 mask, 255 = cropland
    truth.pgm            optional P5 mask, 255 = corn
"""

import logging
from pathlib import Path

import numpy as np
import yaml

from cropgan.config import load_yaml
from cropgan.datasets import BANDS
from cropgan.preprocessor import SceneStack
from cropgan.rasters import read_mask, write_pgm
from shared.errors import FormatError, UsageError

logger = logging.getLogger("cropgan.scene_io")

SCENE_MANIFEST = "manifest.yaml"
CROPLAND_FILE = "cropland.pgm"
TRUTH_FILE = "truth.pgm"


def _observation_files(index: int) -> tuple[str, str]:
    return f"obs_{index:03d}.u16", f"cloud_{index:03d}.pgm"


def write_scene(stack: SceneStack, directory: str | Path) -> Path:
    """Write ``stack`` as a scene directory; the output bytes depend only on the stack."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    observations = []
    for index, day in enumerate(stack.days):
        raster_name, cloud_name = _observation_files(index)
        (directory / raster_name).write_bytes(stack.bands[index].astype("<u2").tobytes())
        write_pgm(directory / cloud_name, stack.clouds[index])
        observations.append({"day": int(day), "raster": raster_name, "cloud_mask": cloud_name})

    write_pgm(directory / CROPLAND_FILE, stack.cropland)
    manifest = {
        "width": stack.width,
        "height": stack.height,
        "bands": ["B2", "B3", "B4", "B8", "B11", "B12"],
        "window_starts": list(stack.window_starts),
        "window_len": stack.window_len,
        "cropland_mask": CROPLAND_FILE,
        "observations": observations,
    }
    if stack.truth is not None:
        write_pgm(directory / TRUTH_FILE, stack.truth.astype(bool))
        manifest["truth"] = TRUTH_FILE

    with open(directory / SCENE_MANIFEST, "w") as f:
        yaml.safe_dump(manifest, f, default_flow_style=False, sort_keys=True)
    logger.debug(f"Wrote scene with {len(stack.days)} observations to {directory}")
    return directory


def read_scene(directory: str | Path) -> SceneStack:
    """
    Load a scene directory.

    Raises:
        UsageError: The directory or its manifest is missing
        FormatError: The manifest does not parse, lacks a field or describes an invalid
            scene, or a raster has the wrong size
    """
    directory = Path(directory)
    manifest_path = directory / SCENE_MANIFEST
    if not manifest_path.exists():
        raise UsageError(f"No scene manifest at {manifest_path}")

    manifest = load_yaml(manifest_path) or {}
    if not isinstance(manifest, dict):
        raise FormatError(str(manifest_path), 0, "manifest must be a mapping")

    try:
        width = int(manifest["width"])
        height = int(manifest["height"])
        observations = list(manifest["observations"])
        window_starts = tuple(int(s) for s in manifest["window_starts"])
        window_len = int(manifest.get("window_len", 10))
        cropland_name = str(manifest.get("cropland_mask", CROPLAND_FILE))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(str(manifest_path), 0, f"manifest is missing or has a bad field: {e}") from e

    expected = BANDS * height * width * 2
    days, bands, clouds = [], [], []
    for index, obs in enumerate(observations):
        try:
            raster_path = directory / obs["raster"]
            cloud_path = directory / obs["cloud_mask"]
            day = int(obs["day"])
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(str(manifest_path), 0, f"observation {index} has a bad field: {e}") from e
        data = raster_path.read_bytes()
        if len(data) != expected:
            raise FormatError(str(raster_path), min(len(data), expected), f"expected {expected} bytes")
        bands.append(np.frombuffer(data, dtype="<u2").reshape(BANDS, height, width))
        clouds.append(_mask(cloud_path, height, width))
        days.append(day)

    truth = None
    if manifest.get("truth"):
        truth = _mask(directory / manifest["truth"], height, width).astype(np.uint8)

    try:
        return SceneStack(
            days=np.array(days, dtype=np.int64),
            bands=np.array(bands, dtype=np.uint16).reshape(len(days), BANDS, height, width),
            clouds=np.array(clouds, dtype=bool).reshape(len(days), height, width),
            cropland=_mask(directory / cropland_name, height, width),
            window_starts=window_starts,
            window_len=window_len,
            truth=truth,
        )
    except UsageError as e:
        # band range, day order and window layout
        raise FormatError(str(manifest_path), 0, e.message) from e


def _mask(path: Path, height: int, width: int) -> np.ndarray:
    mask = read_mask(path)
    if mask.shape != (height, width):
        raise FormatError(str(path), 0, f"mask is {mask.shape}, scene is {(height, width)}")
    return mask
