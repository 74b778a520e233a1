"""Numerics around the gradient catastrophe of small-dispersion KdV-type equations."""

__version__ = "0.1.0"
