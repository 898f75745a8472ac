"""Standard genetic algorithm baseline.

An individual is a real matrix of shape (X, Y*Z) holding one phase offset per
canvas cell; row x, column y*Z + z.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .neat import GenerationStats, RunRecord
from .phase import TWO_PI, PhaseField


@dataclass(frozen=True)
class SgaIndividual:
    matrix: np.ndarray
    key: int = 0
    fitness: float | None = None

    def with_fitness(self, fitness):
        return SgaIndividual(self.matrix, self.key, fitness)

    def complexity(self):
        return 0, 0

    def to_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(self.matrix.shape)
        w.writerow([repr(float(v)) for v in self.matrix.ravel()])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text, key=0):
        rows = list(csv.reader(io.StringIO(text)))
        shape = tuple(int(v) for v in rows[0])
        return cls(np.array([float(v) for v in rows[1]]).reshape(shape), key)


@dataclass
class SgaParams:
    population_size: int = 50
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    tournament_size: int = 3
    elitism: int = 1

    def __post_init__(self):
        if not (0.0 <= self.crossover_rate <= 1.0 and 0.0 <= self.mutation_rate <= 1.0):
            raise ConfigurationError("rates must lie in [0, 1]")
        if self.population_size < 1 or self.generations < 1 or self.tournament_size < 1:
            raise ConfigurationError("sizes must be >= 1")


def matrix_shape(dims):
    X, Y, Z = dims
    return (X, Y * Z)


def sga_init(rng, dims, key=0):
    shape = dims if len(dims) == 2 else matrix_shape(dims)
    if min(shape) < 1:
        raise ConfigurationError(f"non-positive dims {dims}")
    return SgaIndividual(rng.uniform(-TWO_PI, TWO_PI, size=shape), key)


def sga_two_point_crossover(a, b, rng, rate=0.9, cuts=None):
    """Swap the flattened segment [i, j) between two parents with probability ``rate``."""
    if a.matrix.shape != b.matrix.shape:
        raise ConfigurationError("parents differ in shape")
    fa, fb = a.matrix.ravel().copy(), b.matrix.ravel().copy()
    if cuts is not None or rng.random() < rate:
        if cuts is None:
            i, j = sorted(int(v) for v in rng.integers(0, fa.size + 1, size=2))
        else:
            i, j = sorted(cuts)
        fa[i:j], fb[i:j] = b.matrix.ravel()[i:j], a.matrix.ravel()[i:j]
    shape = a.matrix.shape
    return SgaIndividual(fa.reshape(shape), a.key), SgaIndividual(fb.reshape(shape), b.key)


def sga_mutate(ind, rng, rate=0.1):
    """With probability ``rate`` resample one uniformly chosen element."""
    if rng.random() >= rate:
        return ind
    m = ind.matrix.copy()
    flat = m.reshape(-1)
    flat[int(rng.integers(flat.size))] = rng.uniform(-TWO_PI, TWO_PI)
    return SgaIndividual(m, ind.key)


def sga_decode(ind, sam):
    """Phase field reading voxel (x, y, z) from matrix[x, y * Z + z]."""
    X, Y, Z = sam.dims
    if ind.matrix.shape[0] < X or ind.matrix.shape[1] < Y * Z:
        raise ConfigurationError(f"matrix shape {ind.matrix.shape} does not cover SAM dims {sam.dims}")
    if ind.matrix.shape[1] != Y * Z:
        raise ConfigurationError(f"matrix columns {ind.matrix.shape[1]} != Y*Z = {Y * Z}")
    occ = sam.occupied()
    return PhaseField(sam.dims, occ, ind.matrix[occ[:, 0], occ[:, 1] * Z + occ[:, 2]])


def _fit(ind):
    f = ind.fitness
    return -math.inf if f is None or math.isnan(f) else f


def tournament(pop, rng, size):
    picks = rng.integers(len(pop), size=size)
    return max((pop[int(i)] for i in picks), key=lambda ind: (_fit(ind), -ind.key))


class SgaRun:
    """Generational GA with tournament selection and elitism, ask/tell style."""

    def __init__(self, params, seed, dims):
        self.params = params
        self.seed = seed
        self.algorithm = "sga"
        self.rng = np.random.default_rng(seed)
        self.next_key = 0
        self.population = []
        for _ in range(params.population_size):
            self.population.append(sga_init(self.rng, dims, self.next_key))
            self.next_key += 1
        self.generation = 0
        self.record = RunRecord("sga", seed)
        self.best_so_far = -math.inf
        self.champion = None

    @property
    def done(self):
        return self.generation >= self.params.generations

    def pending(self):
        return [ind for ind in self.population if ind.fitness is None]

    def tell(self, fitnesses):
        pop = []
        for ind in self.population:
            if ind.fitness is None:
                f = fitnesses.get(ind.key)
                ind = ind.with_fitness(-math.inf if f is None or math.isnan(f) else float(f))
            pop.append(ind)
        self.population = pop
        self._record()
        self.generation += 1
        if not self.done:
            self._advance()

    def _ranked(self):
        return sorted(self.population, key=lambda ind: (-_fit(ind), ind.key))

    def _record(self):
        best = self._ranked()[0]
        finite = [ind.fitness for ind in self.population if math.isfinite(ind.fitness)]
        if self.champion is None or _fit(best) > self.best_so_far:
            self.best_so_far = _fit(best)
            self.champion = best
        self.record.generations.append(
            GenerationStats(
                self.generation,
                best.fitness,
                self.best_so_far,
                float(np.mean(finite)) if finite else -math.inf,
                1,
                0,
                0,
                len(self.population) - len(finite),
            )
        )
        if self.generation == 0:
            self.record.initial_champion = best
        self.record.champion = self.champion
        self.record.champion_fitness = self.best_so_far

    def _advance(self):
        p = self.params
        new = self._ranked()[: p.elitism]
        while len(new) < p.population_size:
            a = tournament(self.population, self.rng, p.tournament_size)
            b = tournament(self.population, self.rng, p.tournament_size)
            ca, cb = sga_two_point_crossover(a, b, self.rng, p.crossover_rate)
            for child in (ca, cb):
                if len(new) < p.population_size:
                    child = sga_mutate(child, self.rng, p.mutation_rate)
                    new.append(SgaIndividual(child.matrix, self.next_key))
                    self.next_key += 1
        self.population = new


def sga_evolve(evaluator, params, seed, dims):
    """Run the GA on ``evaluator`` (individual -> fitness); returns a RunRecord."""
    from .neat import run_serial

    return run_serial(SgaRun(params, seed, dims), evaluator)


__all__ = [
    "SgaIndividual",
    "SgaParams",
    "SgaRun",
    "matrix_shape",
    "sga_decode",
    "sga_evolve",
    "sga_init",
    "sga_mutate",
    "sga_two_point_crossover",
    "tournament",
]
