"""CropGAN: cross-domain early crop mapping with a cycle-consistent domain mapper."""

from shared.version import __version__

__all__ = ["__version__"]
