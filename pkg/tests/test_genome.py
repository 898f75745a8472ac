import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softneat.errors import ConfigurationError, StructuralError
from softneat.genome import (
    CppnGenome,
    EvolutionParams,
    InnovationRegistry,
    check_invariants,
    compatibility_distance,
    cppn_forward,
    creates_cycle,
    crossover,
    minimal_genome,
    mutate,
    split_connection,
    topological_order,
)

from .conftest import make_genome


def brute_force_delta(a, b, c1=1.0, c2=1.0, c3=0.5):
    """Walk both innovation-sorted gene lists in lockstep, as in the original NEAT formulation."""
    ga = sorted(a.connections, key=lambda c: c.innovation)
    gb = sorted(b.connections, key=lambda c: c.innovation)
    i = j = 0
    E = D = M = 0
    W = 0.0
    while i < len(ga) or j < len(gb):
        if i == len(ga):
            E += 1
            j += 1
        elif j == len(gb):
            E += 1
            i += 1
        elif ga[i].innovation == gb[j].innovation:
            M += 1
            W += abs(ga[i].weight - gb[j].weight)
            i += 1
            j += 1
        elif ga[i].innovation < gb[j].innovation:
            D += 1
            i += 1
        else:
            D += 1
            j += 1
    N = max(len(ga), len(gb), 1)
    if len(ga) < 20 and len(gb) < 20:
        N = 1
    return c1 * E / N + c2 * D / N + c3 * (W / M if M else 0.0)


def random_gene_genome(rng, max_genes=15, universe=30):
    k = int(rng.integers(1, max_genes + 1))
    innovs = sorted(rng.choice(universe, size=k, replace=False).tolist())
    return make_genome([(inn, 0, 4, rng.uniform(-8, 8)) for inn in innovs])


# forward pass ---------------------------------------------------------------


def test_forward_sum_by_hand():
    g = minimal_genome(4, 1)
    assert cppn_forward(g, [1, 2, 3, 4]).tolist() == [10.0]


def test_forward_zero_weights():
    g = make_genome([(i, i, 4, 0.0) for i in range(4)])
    assert cppn_forward(g, [1, 2, 3, 4]).tolist() == [0.0]


def test_disabled_connection_is_inert():
    g = make_genome([(0, 0, 4, 100.0, False)] + [(i, i, 4, 0.0) for i in range(1, 4)])
    assert cppn_forward(g, [1, 2, 3, 4]).tolist() == [0.0]


def test_forward_hidden_node_with_bias_and_activation():
    # h = relu(-1 + 2*x0); out = sin(0.5 + 3*h + x1)
    g = make_genome(
        [(0, 0, 5, 2.0), (1, 5, 4, 3.0), (2, 1, 4, 1.0)],
        hidden=(5,),
        activations={5: "relu", 4: "sin"},
        biases={5: -1.0, 4: 0.5},
    )
    x0, x1 = 0.9, -0.2
    h = max(0.0, -1.0 + 2.0 * x0)
    assert cppn_forward(g, [x0, x1, 0, 0])[0] == pytest.approx(math.sin(0.5 + 3.0 * h + x1), abs=1e-15)


def test_forward_batch_matches_rows(rng):
    g = minimal_genome(4, 2, rng=rng)
    xs = rng.uniform(-1, 1, size=(7, 4))
    batch = cppn_forward(g, xs)
    assert batch.shape == (7, 2)
    for row, out in zip(xs, batch):
        assert np.array_equal(cppn_forward(g, row), out)


def test_forward_is_pure(rng):
    g = minimal_genome(4, 1, rng=rng)
    x = [0.1, -0.3, 0.7, 3.0]
    assert cppn_forward(g, x).tobytes() == cppn_forward(g, x).tobytes()


def test_wrong_input_arity():
    with pytest.raises(ConfigurationError):
        cppn_forward(minimal_genome(4, 1), [1, 2, 3])


def test_cycle_raises_structural_error():
    g = make_genome([(0, 0, 5, 1.0), (1, 5, 6, 1.0), (2, 6, 5, 1.0), (3, 6, 4, 1.0)], hidden=(5, 6))
    with pytest.raises(StructuralError):
        topological_order(g)


# compatibility distance -------------------------------------------------------


def test_distance_identical_is_zero(rng):
    g = minimal_genome(4, 1, rng=rng)
    assert compatibility_distance(g, g) == 0.0


def test_distance_formula_example():
    # E=2 (10, 11), D=3 (7, 8, 9), N=10, matching weights differ by 0.4
    a = make_genome([(i, 0, 4, 0.0) for i in (0, 1, 2, 3, 4, 5, 6, 8, 9)])
    b = make_genome([(i, 0, 4, 0.4) for i in (0, 1, 2, 3, 4, 5, 6, 7, 10, 11)])
    assert compatibility_distance(a, b, small_genome=0) == pytest.approx(0.7, abs=1e-12)
    # default small-genome rule: N = 1
    assert compatibility_distance(a, b) == pytest.approx(2 + 3 + 0.2, abs=1e-12)


def test_distance_no_matching_genes():
    a = make_genome([(0, 0, 4, 1.0), (1, 1, 4, 1.0), (2, 2, 4, 1.0)])
    b = make_genome([(3, 0, 4, 5.0), (4, 1, 4, 5.0), (5, 2, 4, 5.0)])
    # all of b is excess, all of a is disjoint; weight term is 0
    assert compatibility_distance(a, b, small_genome=0) == pytest.approx((3 + 3) / 3, abs=1e-12)


def test_distance_large_genomes_normalise_by_size():
    a = make_genome([(i, 0, 4, 0.0) for i in range(25)])
    b = make_genome([(i, 0, 4, 0.0) for i in range(20)])
    assert compatibility_distance(a, b) == pytest.approx(5 / 25, abs=1e-12)


def test_distance_matches_oracle_random(rng):
    for _ in range(300):
        a, b = random_gene_genome(rng), random_gene_genome(rng)
        d = compatibility_distance(a, b)
        assert abs(d - brute_force_delta(a, b)) <= 1e-12
        assert d == compatibility_distance(b, a)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_distance_symmetric_and_oracle_large(seed):
    rng = np.random.default_rng(seed)
    a = random_gene_genome(rng, max_genes=40, universe=60)
    b = random_gene_genome(rng, max_genes=40, universe=60)
    assert compatibility_distance(a, b) == pytest.approx(brute_force_delta(a, b), abs=1e-12)
    assert compatibility_distance(a, b) == compatibility_distance(b, a)


# crossover ------------------------------------------------------------------


def test_self_crossover_is_identity(rng):
    g = minimal_genome(4, 1, rng=rng).with_fitness(1.0)
    child = crossover(g, g, rng)
    assert child.nodes == g.nodes and child.connections == g.connections


def test_fitter_parent_extra_gene_inherited(rng):
    a = make_genome([(0, 0, 4, 1.0), (1, 1, 4, 1.0), (7, 2, 4, 1.0)], fitness=2.0)
    b = make_genome([(0, 0, 4, -1.0), (1, 1, 4, -1.0)], fitness=1.0)
    for _ in range(20):
        child = crossover(a, b, rng)
        assert 7 in {c.innovation for c in child.connections}
        child = crossover(b, a, rng)
        assert 7 in {c.innovation for c in child.connections}


def test_less_fit_parent_extra_gene_dropped(rng):
    a = make_genome([(0, 0, 4, 1.0)], fitness=2.0)
    b = make_genome([(0, 0, 4, -1.0), (7, 2, 4, 1.0)], fitness=1.0)
    assert {c.innovation for c in crossover(a, b, rng).connections} == {0}


def test_matching_gene_choice_is_fair():
    rng = np.random.default_rng(7)
    a = make_genome([(0, 0, 4, 1.0)], fitness=2.0)
    b = make_genome([(0, 0, 4, -1.0)], fitness=1.0)
    n = 10_000
    from_a = sum(crossover(a, b, rng).connections[0].weight == 1.0 for _ in range(n))
    assert abs(from_a / n - 0.5) <= 0.02


def test_crossover_requires_fitness(rng):
    g = minimal_genome(4, 1)
    with pytest.raises(ConfigurationError):
        crossover(g, g, rng)


# mutation -------------------------------------------------------------------


def test_zero_rates_identity(rng):
    g = minimal_genome(4, 1, rng=rng)
    params = EvolutionParams.frozen_structure()
    out = mutate(g, params, InnovationRegistry(4, 5), rng)
    assert out.nodes == g.nodes and out.connections == g.connections


def test_split_connection_contract():
    reg = InnovationRegistry(4, 5)
    g = make_genome([(i, i, 4, 0.5 + i) for i in range(4)])
    nodes, conns = split_connection(list(g.nodes), list(g.connections), 2, reg, "identity")
    old = conns[2]
    assert old.enabled is False and (old.src, old.dst) == (2, 4)
    u_h, h_v = conns[-2], conns[-1]
    assert (u_h.src, u_h.dst, u_h.weight) == (2, 5, 1.0)
    assert (h_v.src, h_v.dst, h_v.weight) == (5, 4, 2.5)
    assert (u_h.innovation, h_v.innovation) == (4, 5)
    assert nodes[-1].node_id == 5 and nodes[-1].kind == "hidden"
    x = [0.1, 0.2, 0.3, 0.4]
    new = CppnGenome(tuple(nodes), tuple(conns))
    assert cppn_forward(new, x)[0] == pytest.approx(cppn_forward(g, x)[0], abs=1e-15)


def test_registry_memo_same_generation():
    reg = InnovationRegistry(10, 20)
    assert reg.connection(1, 5) == reg.connection(1, 5) == 10
    assert reg.connection(2, 5) == 11
    assert reg.split(3) == reg.split(3) == (20, 12, 13)
    reg.new_generation()
    assert reg.connection(1, 5) == 14
    assert reg.counter == 15


def test_independent_add_connection_shares_innovation():
    reg = InnovationRegistry(4, 6)
    base = make_genome([(i, i, 4, 1.0) for i in range(4)], hidden=(5,))
    # both genomes independently add 0 -> 5
    params = EvolutionParams.frozen_structure(conn_add_rate=1.0)
    results = []
    for seed in range(200):
        g = mutate(base, params, reg, np.random.default_rng(seed))
        new = [c for c in g.connections if (c.src, c.dst) == (0, 5)]
        if new:
            results.append(new[0].innovation)
    assert len(results) >= 2 and len(set(results)) == 1


def test_creates_cycle_over_all_genes():
    g = make_genome([(0, 0, 5, 1.0), (1, 5, 6, 1.0, False), (2, 6, 4, 1.0)], hidden=(5, 6))
    assert creates_cycle(g.connections, 6, 5)
    assert creates_cycle(g.connections, 5, 5)
    assert not creates_cycle(g.connections, 0, 6)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), steps=st.integers(1, 40))
def test_mutation_sequences_keep_invariants(seed, steps):
    rng = np.random.default_rng(seed)
    reg = InnovationRegistry()
    params = EvolutionParams()
    g = minimal_genome(4, 1, rng=rng, registry=reg)
    for k in range(steps):
        g = mutate(g, params, reg, rng)
        if k % 3 == 2:
            other = mutate(g, params, reg, rng).with_fitness(float(rng.random()))
            g = crossover(g.with_fitness(float(rng.random())), other, rng)
        if k % 5 == 4:
            reg.new_generation()
        check_invariants(g)
        assert all(abs(c.weight) <= 8.0 for c in g.connections)
        out = cppn_forward(g, rng.uniform(-1, 1, size=4))
        assert out.shape == (1,)


def test_innovation_numbers_monotone(rng):
    reg = InnovationRegistry()
    params = EvolutionParams(node_add_rate=1.0, conn_add_rate=1.0)
    g = minimal_genome(4, 1, rng=rng, registry=reg)
    seen = reg.counter
    for _ in range(30):
        reg.new_generation()
        g = mutate(g, params, reg, rng)
        assert reg.counter >= seen
        seen = reg.counter
        assert max(c.innovation for c in g.connections) < reg.counter


# construction and serialization ---------------------------------------------


def test_minimal_genome_topology(rng):
    g = minimal_genome(4, 1, rng=rng)
    assert g.complexity() == (4, 0)
    assert g.n_inputs == 4 and g.n_outputs == 1
    g2 = minimal_genome(4, 2, rng=rng)
    assert g2.complexity() == (8, 0)


def test_json_round_trip_is_lossless(rng):
    reg = InnovationRegistry()
    g = minimal_genome(4, 2, rng=rng, registry=reg)
    params = EvolutionParams(node_add_rate=1.0)
    for _ in range(5):
        g = mutate(g, params, reg, rng)
    back = CppnGenome.from_json(g.to_json())
    assert back.nodes == g.nodes and back.connections == g.connections
    doc = json.loads(g.to_json())
    assert set(doc) == {"nodes", "connections"}
    assert set(doc["nodes"][0]) == {"id", "kind", "activation", "bias"}
    assert set(doc["connections"][0]) == {"innovation", "src", "dst", "weight", "enabled"}


def test_params_validation():
    with pytest.raises(ConfigurationError):
        EvolutionParams(conn_add_rate=1.5)
    with pytest.raises(ConfigurationError):
        EvolutionParams(activations=("sin", "nope"))
    p = EvolutionParams()
    assert (p.conn_add_rate, p.conn_delete_rate, p.node_add_rate, p.node_delete_rate) == (0.2, 0.1, 0.2, 0.1)
    assert (p.conn_toggle_rate, p.activation_mutate_rate) == (0.5, 0.4)
    assert (p.compatibility_threshold, p.max_stagnation, p.survival_threshold) == (3.0, 25, 0.2)
