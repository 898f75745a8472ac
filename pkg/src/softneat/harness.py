"""Controller decoding, evaluation and the summary metrics.

A controller is a NEAT CPPN genome, a HyperNEAT CPPN genome or an SGA matrix.
Each is turned into a PhaseField over the occupied voxels of a SAM, simulated,
and scored by the upward free-end displacement.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .activations import DISPLAY_NAMES, get_dictionary
from .errors import ArityError, ConfigurationError, SimulationDiverged
from .genome import CppnNetwork
from .hyperneat import DEFAULT_LAYOUT, SubstrateNet, build_substrate, substrate_forward
from .morphology import CONTRACTILE, PASSIVE
from .phase import PhaseField, clamp_phase
from .sga import sga_decode
from .sim import MaterialParams, SimParams, fitness_from_trace, simulate

ALGORITHMS = ("neat", "hyperneat", "sga")
APTITUDE_SET_SIZE = 9
Z95 = 1.96

# substrate input neuron for the material; NEAT sees the raw code
SUBSTRATE_MATERIAL = {0: 0.0, PASSIVE: 0.5, CONTRACTILE: 1.0}


def check_algorithm(name):
    key = str(name).lower()
    if key not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")
    return key


def cppn_outputs(algorithm):
    """Number of CPPN outputs: one phase for NEAT, weight and bias for HyperNEAT."""
    return 2 if check_algorithm(algorithm) == "hyperneat" else 1


def normalized_coords(coords, dims):
    """Map voxel indices 0..D-1 onto [-1, 1] per axis (a single slice maps to 0)."""
    c = np.asarray(coords, dtype=float).reshape(-1, 3)
    span = np.maximum(np.asarray(dims, dtype=float) - 1.0, 1.0)
    out = 2.0 * c / span - 1.0
    out[:, np.asarray(dims) == 1] = 0.0
    return out


def controller_inputs(sam, algorithm="neat"):
    """(n, 4) rows (x, y, z, m) for the occupied voxels in lexicographic order."""
    occ = sam.occupied()
    xyz = normalized_coords(occ, sam.dims)
    codes = sam.voxels[tuple(occ.T)].astype(int)
    if check_algorithm(algorithm) == "hyperneat":
        m = np.array([SUBSTRATE_MATERIAL[c] for c in codes.tolist()], dtype=float)
    else:
        m = codes.astype(float)
    return np.column_stack([xyz, m])


class Decoder:
    """Controller prepared for repeated decoding (the substrate is built once)."""

    def __init__(self, algorithm, controller, layout=DEFAULT_LAYOUT):
        self.algorithm = check_algorithm(algorithm)
        self.controller = controller
        if self.algorithm == "neat":
            self._net = CppnNetwork(controller)
        elif self.algorithm == "hyperneat":
            net = controller if isinstance(controller, SubstrateNet) else build_substrate(controller, layout)
            self._net = net
        else:
            self._net = None

    @property
    def substrate(self):
        return self._net if self.algorithm == "hyperneat" else None

    def __call__(self, sam):
        if self.algorithm == "sga":
            pf = sga_decode(self.controller, sam)
            return PhaseField(pf.dims, pf.coords, clamp_phase(pf.phases))
        if sam.voxel_count == 0:
            return PhaseField(sam.dims, sam.occupied(), [])
        x = controller_inputs(sam, self.algorithm)
        if self.algorithm == "neat":
            raw = self._net.activate(x)[:, 0]
        else:
            raw = substrate_forward(self._net, x)
        return PhaseField(sam.dims, sam.occupied(), clamp_phase(raw))


def decode_controller(algorithm, controller, sam, layout=DEFAULT_LAYOUT):
    """Phase offsets in [-2pi, 2pi] for every occupied voxel of ``sam``."""
    return Decoder(algorithm, controller, layout)(sam)


@dataclass(frozen=True)
class EvalSettings:
    """Everything besides the controller and SAM that fixes a fitness value."""

    material: MaterialParams = field(default_factory=MaterialParams)
    sim: SimParams = field(default_factory=SimParams)
    layout: object = DEFAULT_LAYOUT
    backend: str | None = None

    @classmethod
    def full(cls, duration=1.0, **kw):
        return cls(MaterialParams(), SimParams(duration=duration), **kw)

    @classmethod
    def desk(cls, duration=0.5, **kw):
        return cls(MaterialParams.desk(), SimParams(duration=duration), **kw)


PRESETS = {"full": EvalSettings.full, "desk": EvalSettings.desk}


@dataclass(frozen=True)
class EvalResult:
    fitness: float
    diverged: bool = False


def _simulate_fitness(phase_field, sam, settings):
    if sam.contractile_count == 0:
        return EvalResult(0.0)
    try:
        trace = simulate(sam, phase_field, settings.material, params=settings.sim, backend=settings.backend)
    except SimulationDiverged:
        return EvalResult(0.0, True)
    return EvalResult(fitness_from_trace(trace))


def evaluate_detailed(algorithm, controller, sam, settings=None):
    """Fitness of one controller on one SAM plus the divergence flag."""
    settings = settings or EvalSettings()
    decoder = controller if isinstance(controller, Decoder) else Decoder(algorithm, controller, settings.layout)
    return _simulate_fitness(decoder(sam), sam, settings)


def evaluate(algorithm, controller, sam, settings=None):
    """Upward free-end displacement (m); a diverged simulation scores 0."""
    return evaluate_detailed(algorithm, controller, sam, settings).fitness


def evaluate_set(algorithm, controller, sams, settings=None):
    """Per-SAM results for one controller, decoding setup shared across SAMs."""
    settings = settings or EvalSettings()
    decoder = Decoder(algorithm, controller, settings.layout)
    return [_simulate_fitness(decoder(s), s, settings) for s in sams]


def set_fitness(results):
    """Evolutionary fitness over a SAM set: the mean displacement."""
    if not results:
        raise ConfigurationError("empty SAM set")
    total = 0.0
    for r in results:
        total += r.fitness
    return total / len(results)


def aptitude(algorithm, controller, sams, settings=None):
    """Mean displacement over exactly nine SAMs."""
    sams = list(sams)
    if len(sams) != APTITUDE_SET_SIZE:
        raise ArityError(f"aptitude needs {APTITUDE_SET_SIZE} SAMs, got {len(sams)}")
    return aptitude_from(r.fitness for r in evaluate_set(algorithm, controller, sams, settings))


def aptitude_from(displacements):
    d = [float(v) for v in displacements]
    if len(d) != APTITUDE_SET_SIZE:
        raise ArityError(f"aptitude needs {APTITUDE_SET_SIZE} displacements, got {len(d)}")
    total = 0.0
    for v in d:
        total += v
    return total / APTITUDE_SET_SIZE


def complexity_report(algorithm, champion, layout=DEFAULT_LAYOUT):
    """(connections, hidden nodes) of the phenotype that produced the phases."""
    algorithm = check_algorithm(algorithm)
    if algorithm == "neat":
        return champion.complexity()
    if algorithm == "hyperneat":
        net = champion if isinstance(champion, SubstrateNet) else build_substrate(champion, layout)
        return net.complexity()
    return 0, 0


def activation_histogram(champions, dictionary=None):
    """Percentage use of each activation over hidden and output nodes.

    Keys are activation ids, ordered as in the dictionary; only used ones
    appear. Raises if a node uses an activation outside ``dictionary``.
    """
    champions = list(champions)
    if not champions:
        raise ConfigurationError("activation_histogram needs at least one champion")
    counts = Counter()
    for g in champions:
        for n in g.nodes:
            if n.kind in ("hidden", "output"):
                counts[n.activation] += 1
    total = sum(counts.values())
    if total == 0:
        raise ConfigurationError("champions have no hidden or output nodes")
    order = list(get_dictionary(dictionary)) if dictionary is not None else sorted(counts)
    unknown = set(counts) - set(order)
    if unknown:
        raise ConfigurationError(f"activations {sorted(unknown)} outside the dictionary")
    return {name: 100.0 * counts[name] / total for name in order if counts[name]}


def display_histogram(hist):
    return {DISPLAY_NAMES.get(k, k): v for k, v in hist.items()}


def ci95(series):
    """Pointwise mean and 1.96 s / sqrt(n) half-width over per-run curves."""
    arr = np.asarray(series, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    n = arr.shape[0]
    if n < 2:
        raise ConfigurationError("a confidence interval needs at least 2 runs")
    mean = arr.mean(axis=0)
    s = arr.std(axis=0, ddof=1)
    return mean, Z95 * s / math.sqrt(n)


__all__ = [
    "ALGORITHMS",
    "APTITUDE_SET_SIZE",
    "Decoder",
    "EvalResult",
    "EvalSettings",
    "PRESETS",
    "SUBSTRATE_MATERIAL",
    "activation_histogram",
    "aptitude",
    "aptitude_from",
    "check_algorithm",
    "ci95",
    "complexity_report",
    "controller_inputs",
    "cppn_outputs",
    "decode_controller",
    "display_histogram",
    "evaluate",
    "evaluate_detailed",
    "evaluate_set",
    "normalized_coords",
    "set_fitness",
]
