"""HTTP adapter exposing chat vendors and local segmentation services
behind the rvos backend wire protocol."""

__version__ = "0.1.0"
