"""Shared error types, logging and version for CropGAN."""

from .errors import (
    ConfigurationError,
    CropGanError,
    DimensionError,
    FormatError,
    TrainingDivergedError,
    UsageError,
)

__all__ = [
    "CropGanError",
    "UsageError",
    "ConfigurationError",
    "DimensionError",
    "FormatError",
    "TrainingDivergedError",
]
