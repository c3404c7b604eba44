"""Version information for CropGAN."""

__version__ = "0.1.0"

# Bumped whenever a binary file layout changes
CHECKPOINT_FORMAT_VERSION = 1
DATASET_FORMAT_VERSION = 1
