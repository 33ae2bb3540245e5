"""Anti-Kähler geometry checks and Einstein-metric towers, numerically."""

from .jets import backend_name

__version__ = "0.1.0"
__all__ = ["backend_name", "__version__"]
