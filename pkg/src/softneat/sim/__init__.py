"""Deterministic mass-spring simulator for voxel soft actuators."""
from .backend import COMPILED_AVAILABLE, default_name
from .lattice import (
    LINEAR_STRAIN_50,
    LatticeState,
    MaterialParams,
    SimParams,
    SimTrace,
    build_lattice,
    config_hash,
    fitness_from_trace,
    rest_length,
    simulate,
    step,
    trace_metrics,
)

BACKEND = default_name()

__all__ = [
    "BACKEND",
    "COMPILED_AVAILABLE",
    "LINEAR_STRAIN_50",
    "LatticeState",
    "MaterialParams",
    "SimParams",
    "SimTrace",
    "build_lattice",
    "config_hash",
    "fitness_from_trace",
    "rest_length",
    "simulate",
    "step",
    "trace_metrics",
]
