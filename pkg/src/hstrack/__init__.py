"""Hyperspectral object tracking with random 3D convolutional features and a
kernelized correlation filter."""

__version__ = "0.1.0"
