"""Neuroevolution of phase-offset controllers for voxel soft actuators."""

__version__ = "0.1.0"
