"""Light and sparse (1+eps)-spanners for finite doubling metrics."""

from .metric import MetricError, MetricSpace, load_points, normalize, save_points

__all__ = ["MetricError", "MetricSpace", "load_points", "normalize", "save_points"]
__version__ = "0.1.0"
