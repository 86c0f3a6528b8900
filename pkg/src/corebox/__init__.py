"""Core box photo tooling: mask-guided augmentation, column extraction,
depth referencing, metrics and an interactive correction service."""

from .errors import CoreboxError

__all__ = ["CoreboxError", "__version__"]
__version__ = "0.1.0"
