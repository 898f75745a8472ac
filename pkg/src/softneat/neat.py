"""Population-level NEAT: speciation, fitness sharing, stagnation, reproduction.

:class:`NeatRun` exposes an ask/tell loop so that evaluation can be batched
across runs by the experiment harness; :func:`evolve` is the self-contained
driver for a single evaluator.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .genome import (
    CppnGenome,
    EvolutionParams,
    InnovationRegistry,
    compatibility_distance,
    crossover,
    minimal_genome,
    mutate,
)


@dataclass
class Species:
    species_id: int
    representative: CppnGenome
    members: list = field(default_factory=list)
    staleness: int = 0
    best_fitness: float = -math.inf

    @property
    def member_keys(self):
        return [g.key for g in self.members]


def _distance(a, b, params):
    return compatibility_distance(
        a, b, params.excess_coefficient, params.disjoint_coefficient, params.weight_coefficient
    )


def speciate(population, species_prev, params, rng, next_species_id=None):
    """Partition ``population`` into species.

    Existing species keep their id and are represented by a member of the
    previous generation drawn uniformly; a genome joins the first species whose
    representative lies strictly within the threshold, otherwise it founds a
    new one. Species left empty are dropped.
    """
    if not population:
        raise ConfigurationError("cannot speciate an empty population")
    species = []
    for sp in sorted(species_prev, key=lambda s: s.species_id):
        rep = sp.members[int(rng.integers(len(sp.members)))] if sp.members else sp.representative
        species.append(
            Species(sp.species_id, rep, [], staleness=sp.staleness, best_fitness=sp.best_fitness)
        )
    if next_species_id is None:
        next_species_id = max((s.species_id for s in species), default=-1) + 1
    threshold = params.compatibility_threshold
    for g in population:
        for sp in species:
            if _distance(g, sp.representative, params) < threshold:
                sp.members.append(g)
                break
        else:
            species.append(Species(next_species_id, g, [g]))
            next_species_id += 1
    return [sp for sp in species if sp.members]


def _clean_fitness(values):
    f = np.array([v if v is not None and math.isfinite(v) else np.nan for v in values], dtype=float)
    if np.all(np.isnan(f)):
        return np.zeros(len(f))
    lo = np.nanmin(f)
    if lo < 0.0:
        f = f - lo
    return np.nan_to_num(f, nan=0.0)


def shared_fitness(sp):
    """Adjusted fitness of every member: raw fitness / species size."""
    n = len(sp.members)
    return [g.fitness / n for g in sp.members]


def largest_remainder(weights, total, order_keys):
    """Integer split of ``total`` proportional to ``weights``.

    Remainders are handed out largest first; ties go to the smaller key.
    """
    weights = np.asarray(weights, dtype=float)
    if total == 0 or len(weights) == 0:
        return [0] * len(weights)
    s = weights.sum()
    if not s > 0.0:
        weights = np.ones(len(weights))
        s = float(len(weights))
    quotas = weights * total / s
    counts = np.floor(quotas).astype(int)
    left = total - int(counts.sum())
    rema = quotas - counts
    ranking = sorted(range(len(weights)), key=lambda i: (-rema[i], order_keys[i]))
    for i in ranking[:left]:
        counts[i] += 1
    return [int(c) for c in counts]


def allocate_offspring(species, population_size, params, best_key=None):
    """Offspring count per species (same order as ``species``).

    Counts follow the species' summed adjusted fitness. Species stale for
    ``max_stagnation`` generations get nothing unless they hold the population
    best; if every species is stale the best one is revived. The species holding
    the population best always receives at least one slot.
    """
    if not species:
        return []
    raw = _clean_fitness([g.fitness for sp in species for g in sp.members])
    sums, pos = [], 0
    for sp in species:
        n = len(sp.members)
        sums.append(float(raw[pos:pos + n].sum()) / n)
        pos += n
    holds_best = [best_key is not None and best_key in sp.member_keys for sp in species]
    alive = [sp.staleness < params.max_stagnation or hb for sp, hb in zip(species, holds_best)]
    if not any(alive):
        best = max(range(len(species)), key=lambda i: (sums[i], -species[i].species_id))
        species[best].staleness = 0
        alive[best] = True
    weights = [s if a else 0.0 for s, a in zip(sums, alive)]
    if sum(weights) <= 0.0:
        weights = [float(len(sp.members)) if a else 0.0 for sp, a in zip(species, alive)]
    counts = largest_remainder(weights, population_size, [sp.species_id for sp in species])
    if any(holds_best):
        i = holds_best.index(True)
        if counts[i] == 0 and population_size > 0:
            donor = max(range(len(counts)), key=lambda j: (counts[j], -species[j].species_id))
            counts[donor] -= 1
            counts[i] += 1
    return counts


def _fitness_key(g):
    f = g.fitness if g.fitness is not None and not math.isnan(g.fitness) else -math.inf
    return f


def reproduce(sp, n_offspring, params, registry, rng, next_key, force_elite=False):
    """Offspring of one species.

    Parents are the top ``survival_threshold`` fraction (at least one). The
    species champion is copied unchanged when the species has more than
    ``elitism_min_size`` members (or ``force_elite`` is set).
    Returns (offspring, next_key).
    """
    if n_offspring <= 0:
        return [], next_key
    ranked = sorted(sp.members, key=lambda g: (-_fitness_key(g), g.key))
    n_parents = max(1, math.ceil(round(params.survival_threshold * len(ranked), 9)))
    pool = ranked[:n_parents]
    children = []
    if force_elite or len(sp.members) > params.elitism_min_size:
        children.append(pool[0])
    while len(children) < n_offspring:
        if len(pool) == 1:
            base = pool[0]
        else:
            p1 = pool[int(rng.integers(len(pool)))]
            p2 = pool[int(rng.integers(len(pool)))]
            base = crossover(_as_evaluated(p1), _as_evaluated(p2), rng, key=next_key)
        child = mutate(base, params, registry, rng, key=next_key)
        children.append(child)
        next_key += 1
    return children, next_key


def _as_evaluated(g):
    if g.fitness is None or math.isnan(g.fitness):
        return g.with_fitness(-math.inf)
    return g


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    best_so_far: float
    mean_fitness: float
    n_species: int
    best_connections: int
    best_hidden_nodes: int
    n_failed: int = 0


RUN_COLUMNS = (
    "generation",
    "best_fitness",
    "mean_fitness",
    "n_species",
    "best_connections",
    "best_hidden_nodes",
    "best_so_far",
    "n_failed",
)


@dataclass
class RunRecord:
    """Per-generation statistics plus the final champion of one run."""

    algorithm: str
    seed: int
    generations: list = field(default_factory=list)
    champion: object = None
    champion_fitness: float = -math.inf
    initial_champion: object = None

    @property
    def best_curve(self):
        return [g.best_fitness for g in self.generations]

    @property
    def best_so_far_curve(self):
        return [g.best_so_far for g in self.generations]

    def to_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(RUN_COLUMNS)
        for g in self.generations:
            w.writerow(
                [
                    g.generation,
                    repr(float(g.best_fitness)),
                    repr(float(g.mean_fitness)),
                    g.n_species,
                    g.best_connections,
                    g.best_hidden_nodes,
                    repr(float(g.best_so_far)),
                    g.n_failed,
                ]
            )
        return out.getvalue()

    @staticmethod
    def read_csv(text):
        rows = list(csv.DictReader(io.StringIO(text)))
        return [
            GenerationStats(
                int(r["generation"]),
                float(r["best_fitness"]),
                float(r["best_so_far"]),
                float(r["mean_fitness"]),
                int(r["n_species"]),
                int(r["best_connections"]),
                int(r["best_hidden_nodes"]),
                int(r.get("n_failed", 0) or 0),
            )
            for r in rows
        ]


def _genome_complexity(g):
    return g.complexity()


class NeatRun:
    """One NEAT run driven through ``pending()`` / ``tell()``.

    ``complexity`` maps a genome to (connections, hidden nodes) for the run
    record; HyperNEAT passes a substrate-based measure.
    """

    algorithm = "neat"

    def __init__(self, params, seed, n_inputs=4, n_outputs=1, complexity=None, algorithm="neat"):
        self.params = params
        self.seed = seed
        self.algorithm = algorithm
        self.rng = np.random.default_rng(seed)
        self.registry = InnovationRegistry()
        self.complexity = complexity or _genome_complexity
        self.generation = 0
        self.next_key = 0
        self.population = []
        for _ in range(params.population_size):
            g = minimal_genome(
                n_inputs,
                n_outputs,
                rng=self.rng,
                registry=self.registry,
                key=self.next_key,
                activations=params.activations,
                weight_sigma=params.weight_init_sigma,
            )
            self.population.append(g)
            self.next_key += 1
        self.next_species_id = 0
        self.species = self._speciate([])
        self.record = RunRecord(algorithm, seed)
        self.best_so_far = -math.inf
        self.champion = None

    def _speciate(self, prev):
        species = speciate(self.population, prev, self.params, self.rng, self.next_species_id)
        self.next_species_id = max(self.next_species_id, max(s.species_id for s in species) + 1)
        return species

    @property
    def done(self):
        return self.generation >= self.params.generations

    def pending(self):
        """Genomes of the current generation still lacking a fitness."""
        return [g for g in self.population if g.fitness is None]

    def tell(self, fitnesses):
        """Record fitness (key -> value) for the pending genomes and advance."""
        pop = []
        for g in self.population:
            if g.fitness is None:
                f = fitnesses.get(g.key)
                f = -math.inf if f is None or math.isnan(f) else float(f)
                g = g.with_fitness(f)
            pop.append(g)
        self.population = pop
        by_key = {g.key: g for g in pop}
        for sp in self.species:
            sp.members = [by_key[g.key] for g in sp.members]
        self._record_generation()
        self.generation += 1
        if not self.done:
            self._advance()

    def _best(self):
        return max(self.population, key=lambda g: (_fitness_key(g), -g.key))

    def _record_generation(self):
        best = self._best()
        finite = [g.fitness for g in self.population if math.isfinite(g.fitness)]
        mean = float(np.mean(finite)) if finite else -math.inf
        if self.champion is None or _fitness_key(best) > self.best_so_far:
            self.best_so_far = _fitness_key(best)
            self.champion = best
        conns, hidden = self.complexity(best)
        self.record.generations.append(
            GenerationStats(
                self.generation,
                best.fitness,
                self.best_so_far,
                mean,
                len(self.species),
                conns,
                hidden,
                len(self.population) - len(finite),
            )
        )
        if self.generation == 0:
            self.record.initial_champion = best
        self.record.champion = self.champion
        self.record.champion_fitness = self.best_so_far

    def _advance(self):
        params = self.params
        for sp in self.species:
            top = max(_fitness_key(g) for g in sp.members)
            if top > sp.best_fitness:
                sp.best_fitness = top
                sp.staleness = 0
            else:
                sp.staleness += 1
        best = self._best()
        counts = allocate_offspring(self.species, params.population_size, params, best_key=best.key)
        self.registry.new_generation()
        new_pop = []
        for sp, n in zip(self.species, counts):
            children, self.next_key = reproduce(
                sp,
                n,
                params,
                self.registry,
                self.rng,
                self.next_key,
                force_elite=best.key in sp.member_keys,
            )
            new_pop.extend(children)
        self.population = new_pop
        self.species = self._speciate(self.species)


def run_serial(run, evaluator):
    """Drive an ask/tell run to completion with an in-process evaluator.

    Evaluator exceptions give the genome fitness -inf.
    """
    while not run.done:
        results = {}
        for ind in run.pending():
            try:
                results[ind.key] = float(evaluator(ind))
            except Exception:
                results[ind.key] = -math.inf
        run.tell(results)
    return run.record


def evolve(evaluator, params, seed, n_inputs=4, n_outputs=1, complexity=None):
    """Run NEAT on ``evaluator`` (genome -> fitness) and return its RunRecord."""
    run = NeatRun(params, seed, n_inputs, n_outputs, complexity=complexity)
    return run_serial(run, evaluator)


__all__ = [
    "EvolutionParams",
    "GenerationStats",
    "NeatRun",
    "RunRecord",
    "Species",
    "allocate_offspring",
    "evolve",
    "largest_remainder",
    "reproduce",
    "run_serial",
    "shared_fitness",
    "speciate",
]
