"""Reconstruction-error fault detection and localization for multivariate sensor data."""

__version__ = "0.1.0"
