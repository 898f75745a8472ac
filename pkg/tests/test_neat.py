import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softneat.genome import (
    EvolutionParams,
    InnovationRegistry,
    compatibility_distance,
    minimal_genome,
    mutate,
)
from softneat.neat import (
    NeatRun,
    RunRecord,
    Species,
    allocate_offspring,
    evolve,
    largest_remainder,
    reproduce,
    shared_fitness,
    speciate,
)

from .conftest import make_genome


def clones(n, fitness=None):
    base = minimal_genome(4, 1)
    return [make_genome([(c.innovation, c.src, c.dst, c.weight) for c in base.connections], key=i, fitness=fitness)
            for i in range(n)]


def species_of(members, sid=0, staleness=0):
    return Species(sid, members[0], list(members), staleness=staleness)


# speciation -------------------------------------------------------------------


def test_clones_form_one_species(rng):
    out = speciate(clones(10), [], EvolutionParams(), rng)
    assert len(out) == 1 and len(out[0].members) == 10


def test_two_clusters_form_two_species(rng):
    # cluster B shares no genes with A: 4 excess + 4 disjoint with N = 1 gives delta = 8 > 3
    a = [make_genome([(i, i, 4, 1.0) for i in range(4)], key=k) for k in range(5)]
    b = [make_genome([(10 + i, i, 4, 1.0) for i in range(4)], key=5 + k) for k in range(5)]
    assert compatibility_distance(a[0], b[0]) > 3.0
    out = speciate(a + b, [], EvolutionParams(), rng)
    assert [sorted(sp.member_keys) for sp in out] == [[0, 1, 2, 3, 4], [5, 6, 7, 8, 9]]


def test_infinite_threshold_one_species(rng):
    a = [make_genome([(i, i, 4, 1.0) for i in range(4)], key=0)]
    b = [make_genome([(10 + i, i, 4, 1.0) for i in range(4)], key=1)]
    out = speciate(a + b, [], EvolutionParams(compatibility_threshold=math.inf), rng)
    assert len(out) == 1


def test_species_ids_persist_and_empty_dropped(rng):
    params = EvolutionParams()
    a = [make_genome([(i, i, 4, 1.0) for i in range(4)], key=k) for k in range(3)]
    b = [make_genome([(10 + i, i, 4, 1.0) for i in range(4)], key=3 + k) for k in range(3)]
    first = speciate(a + b, [], params, rng)
    second = speciate(b, first, params, rng)
    assert [sp.species_id for sp in second] == [1]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_speciation_partition(seed):
    rng = np.random.default_rng(seed)
    params = EvolutionParams()
    reg = InnovationRegistry()
    pop = [minimal_genome(4, 1, rng=rng, registry=reg, key=k) for k in range(20)]
    pop = [mutate(mutate(g, params, reg, rng), params, reg, rng) for g in pop]
    out = speciate(pop, [], params, rng)
    keys = [k for sp in out for k in sp.member_keys]
    assert sorted(keys) == list(range(20))
    for sp in out:
        for g in sp.members:
            assert compatibility_distance(g, sp.representative) < params.compatibility_threshold


# fitness sharing and allocation ---------------------------------------------------


def test_shared_fitness_examples():
    assert shared_fitness(species_of(clones(1, 4.0))) == [4.0]
    assert shared_fitness(species_of(clones(5, 10.0))) == [2.0] * 5
    small = shared_fitness(species_of(clones(2, 6.0)))
    big = shared_fitness(species_of(clones(4, 6.0)))
    assert small[0] == 2 * big[0]


def test_largest_remainder_oracle():
    # 3:1 split of 50 -> quotas 37.5 / 12.5, tie on remainder goes to the smaller key
    assert largest_remainder([3.0, 1.0], 50, [0, 1]) == [38, 12]
    assert largest_remainder([3.0, 1.0], 50, [1, 0]) == [37, 13]
    assert largest_remainder([1.0, 1.0, 1.0], 10, [0, 1, 2]) == [4, 3, 3]
    assert largest_remainder([0.0, 0.0], 5, [0, 1]) == [3, 2]


@settings(max_examples=200, deadline=None)
@given(
    weights=st.lists(st.floats(0.0, 100.0), min_size=1, max_size=12),
    total=st.integers(0, 200),
)
def test_largest_remainder_sums(weights, total):
    counts = largest_remainder(weights, total, list(range(len(weights))))
    assert sum(counts) == total and min(counts) >= 0


def test_allocate_one_species():
    sp = species_of(clones(10, 1.0))
    assert allocate_offspring([sp], 10, EvolutionParams()) == [10]


def test_allocate_proportional_three_to_one():
    a = species_of(clones(4, 3.0), sid=0)
    b = species_of([make_genome([], key=10 + k, fitness=1.0) for k in range(4)], sid=1)
    assert allocate_offspring([a, b], 8, EvolutionParams()) == [6, 2]


def test_stale_species_without_best_gets_nothing():
    a = species_of(clones(4, 3.0), sid=0)
    b = species_of([make_genome([], key=10 + k, fitness=1.0) for k in range(4)], sid=1, staleness=25)
    assert allocate_offspring([a, b], 8, EvolutionParams(), best_key=0) == [8, 0]


def test_stale_species_with_best_is_kept():
    a = species_of(clones(4, 3.0), sid=0, staleness=30)
    b = species_of([make_genome([], key=10 + k, fitness=1.0) for k in range(4)], sid=1)
    assert allocate_offspring([a, b], 8, EvolutionParams(), best_key=0) == [6, 2]


def test_all_stale_revives_best():
    a = species_of(clones(4, 3.0), sid=0, staleness=30)
    b = species_of([make_genome([], key=10 + k, fitness=1.0) for k in range(4)], sid=1, staleness=30)
    counts = allocate_offspring([a, b], 8, EvolutionParams())
    assert counts == [8, 0] and a.staleness == 0


@settings(max_examples=300, deadline=None)
@given(data=st.data())
def test_allocation_sums_to_population(data):
    n_species = data.draw(st.integers(1, 6))
    species, key = [], 0
    for sid in range(n_species):
        size = data.draw(st.integers(1, 8))
        fits = data.draw(st.lists(st.floats(-5.0, 50.0), min_size=size, max_size=size))
        stale = data.draw(st.integers(0, 30))
        members = [make_genome([], key=key + k, fitness=f) for k, f in enumerate(fits)]
        key += size
        species.append(species_of(members, sid=sid, staleness=stale))
    total = sum(len(sp.members) for sp in species)
    best = max((g for sp in species for g in sp.members), key=lambda g: g.fitness).key
    counts = allocate_offspring(species, total, EvolutionParams(), best_key=best)
    assert sum(counts) == total
    holder = next(i for i, sp in enumerate(species) if best in sp.member_keys)
    assert counts[holder] >= 1


# reproduction -------------------------------------------------------------------


def test_parent_pool_is_top_fraction(rng):
    params = EvolutionParams.frozen_structure()
    members = [make_genome([(0, 0, 4, float(k))], key=k, fitness=float(k)) for k in range(10)]
    kids, _ = reproduce(species_of(members), 40, params, InnovationRegistry(1, 5), rng, 100)
    # elite first; with frozen mutation every child is a copy or crossover of the top two
    assert kids[0] is members[9]
    assert {c.connections[0].weight for c in kids[1:]} <= {8.0, 9.0}


def test_zero_offspring(rng):
    kids, nk = reproduce(species_of(clones(3, 1.0)), 0, EvolutionParams(), InnovationRegistry(), rng, 7)
    assert kids == [] and nk == 7


def test_degenerate_pool_clones(rng):
    params = EvolutionParams.frozen_structure()
    members = clones(3, 1.0)
    kids, nk = reproduce(species_of(members), 4, params, InnovationRegistry(), rng, 50)
    assert nk == 54
    for k in kids:
        assert k.connections == members[0].connections and k.fitness is None
    assert [k.key for k in kids] == [50, 51, 52, 53]


def test_elitism_only_for_large_species(rng):
    params = EvolutionParams.frozen_structure()
    small = [make_genome([(0, 0, 4, 1.0)], key=k, fitness=float(k)) for k in range(4)]
    kids, _ = reproduce(species_of(small), 2, params, InnovationRegistry(), rng, 10)
    assert all(k.fitness is None for k in kids)
    kids, _ = reproduce(species_of(small), 2, params, InnovationRegistry(), rng, 10, force_elite=True)
    assert kids[0] is small[3]


# generation loop ------------------------------------------------------------------


def small_params(**kw):
    base = dict(population_size=12, generations=8)
    base.update(kw)
    return EvolutionParams(**base)


def test_constant_evaluator_flat_curve():
    rec = evolve(lambda g: 1.5, small_params(), seed=3)
    assert rec.best_curve == [1.5] * 8
    assert rec.best_so_far_curve == [1.5] * 8


def test_same_seed_identical_record():
    ev = lambda g: float(np.sin(sum(c.weight for c in g.connections)))  # noqa: E731
    a = evolve(ev, small_params(), seed=11)
    b = evolve(ev, small_params(), seed=11)
    assert a.to_csv() == b.to_csv()
    assert a.champion.to_json() == b.champion.to_json()


def test_connection_count_monotone_best():
    rec = evolve(lambda g: float(g.complexity()[0]), small_params(generations=20), seed=5)
    curve = rec.best_curve
    assert all(b >= a for a, b in zip(curve, curve[1:]))


def test_failing_evaluator_gives_minus_inf():
    def ev(g):
        if g.key % 3 == 0:
            raise RuntimeError("boom")
        return 1.0

    rec = evolve(ev, small_params(generations=3), seed=1)
    assert rec.generations[0].n_failed == 4
    assert rec.champion_fitness == 1.0


def test_population_size_constant_and_partition():
    run = NeatRun(small_params(generations=10), seed=2)
    rng = np.random.default_rng(0)
    while not run.done:
        assert len(run.population) == 12
        keys = sorted(k for sp in run.species for k in sp.member_keys)
        assert keys == sorted(g.key for g in run.population)
        run.tell({g.key: float(rng.random()) for g in run.pending()})


def test_initial_champion_is_minimal():
    rec = evolve(lambda g: float(np.tanh(g.connections[0].weight)), small_params(generations=2), seed=9)
    assert rec.initial_champion.complexity() == (4, 0)
    assert rec.generations[0].best_connections == 4 and rec.generations[0].best_hidden_nodes == 0


def test_run_csv_round_trip():
    rec = evolve(lambda g: float(g.complexity()[0]) / 3.0, small_params(generations=3), seed=4)
    text = rec.to_csv()
    assert text.splitlines()[0] == (
        "generation,best_fitness,mean_fitness,n_species,best_connections,best_hidden_nodes,best_so_far,n_failed"
    )
    back = RunRecord.read_csv(text)
    assert back == rec.generations
