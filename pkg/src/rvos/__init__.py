"""Training-free referring video object segmentation pipeline and evaluation suite."""

__version__ = "0.1.0"
