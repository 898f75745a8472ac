"""CPPN genomes and the NEAT genetic operators.

Genomes are frozen values; every operator returns a new genome. Structural
innovations are numbered through an :class:`InnovationRegistry` owned by the
generation loop.
"""
from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass, replace

import numpy as np

from .activations import FULL_DICTIONARY, get_activation
from .errors import ConfigurationError, StructuralError

INPUT = "input"
OUTPUT = "output"
HIDDEN = "hidden"

WEIGHT_LIMIT = 8.0


@dataclass(frozen=True)
class NodeGene:
    node_id: int
    kind: str
    activation: str = "identity"
    bias: float = 0.0


@dataclass(frozen=True)
class ConnectionGene:
    innovation: int
    src: int
    dst: int
    weight: float
    enabled: bool = True


@dataclass(frozen=True)
class CppnGenome:
    nodes: tuple
    connections: tuple
    key: int = 0
    fitness: float | None = None

    @property
    def input_ids(self):
        return [n.node_id for n in self.nodes if n.kind == INPUT]

    @property
    def output_ids(self):
        return [n.node_id for n in self.nodes if n.kind == OUTPUT]

    @property
    def hidden_nodes(self):
        return [n for n in self.nodes if n.kind == HIDDEN]

    @property
    def n_inputs(self):
        return len(self.input_ids)

    @property
    def n_outputs(self):
        return len(self.output_ids)

    def node(self, node_id):
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def enabled_connections(self):
        return [c for c in self.connections if c.enabled]

    def complexity(self):
        """(enabled connections, hidden nodes)."""
        return len(self.enabled_connections()), len(self.hidden_nodes)

    def with_fitness(self, fitness):
        return replace(self, fitness=fitness)

    # serialization -------------------------------------------------------

    def to_dict(self):
        return {
            "nodes": [
                {"id": n.node_id, "kind": n.kind, "activation": n.activation, "bias": n.bias}
                for n in self.nodes
            ],
            "connections": [
                {
                    "innovation": c.innovation,
                    "src": c.src,
                    "dst": c.dst,
                    "weight": c.weight,
                    "enabled": c.enabled,
                }
                for c in self.connections
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data, key=0):
        nodes = tuple(
            NodeGene(int(n["id"]), n["kind"], n["activation"], float(n["bias"]))
            for n in data["nodes"]
        )
        conns = tuple(
            ConnectionGene(
                int(c["innovation"]), int(c["src"]), int(c["dst"]), float(c["weight"]), bool(c["enabled"])
            )
            for c in data["connections"]
        )
        return cls(nodes, conns, key=key)

    @classmethod
    def from_json(cls, text, key=0):
        return cls.from_dict(json.loads(text), key=key)


@dataclass
class EvolutionParams:
    """Evolution settings; defaults are the standard CPPN evolution settings."""

    population_size: int = 50
    generations: int = 200
    compatibility_threshold: float = 3.0
    excess_coefficient: float = 1.0
    disjoint_coefficient: float = 1.0
    weight_coefficient: float = 0.5
    max_stagnation: int = 25
    survival_threshold: float = 0.2
    elitism_min_size: int = 4
    activation_mutate_rate: float = 0.4
    conn_add_rate: float = 0.2
    conn_delete_rate: float = 0.1
    conn_toggle_rate: float = 0.5
    node_add_rate: float = 0.2
    node_delete_rate: float = 0.1
    weight_perturb_rate: float = 0.8
    weight_replace_rate: float = 0.1
    weight_perturb_sigma: float = 0.5
    weight_init_sigma: float = 1.0
    activations: tuple = FULL_DICTIONARY

    def __post_init__(self):
        rates = (
            self.activation_mutate_rate,
            self.conn_add_rate,
            self.conn_delete_rate,
            self.conn_toggle_rate,
            self.node_add_rate,
            self.node_delete_rate,
            self.weight_perturb_rate,
            self.weight_replace_rate,
            self.survival_threshold,
        )
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ConfigurationError("rates must lie in [0, 1]")
        if self.weight_perturb_rate + self.weight_replace_rate > 1.0:
            raise ConfigurationError("weight perturb + replace rates exceed 1")
        if self.population_size < 1 or self.generations < 1:
            raise ConfigurationError("population_size and generations must be >= 1")
        self.activations = tuple(self.activations)
        for name in self.activations:
            get_activation(name)

    @classmethod
    def frozen_structure(cls, **kw):
        """Params with every mutation switched off (identity mutate)."""
        base = dict(
            activation_mutate_rate=0.0,
            conn_add_rate=0.0,
            conn_delete_rate=0.0,
            conn_toggle_rate=0.0,
            node_add_rate=0.0,
            node_delete_rate=0.0,
            weight_perturb_rate=0.0,
            weight_replace_rate=0.0,
        )
        base.update(kw)
        return cls(**base)


class InnovationRegistry:
    """Hands out innovation numbers and hidden-node ids.

    Identical structural mutations within one generation share their numbers;
    call :meth:`new_generation` between generations to clear the memo.
    """

    def __init__(self, next_innovation=0, next_node_id=0):
        self.counter = next_innovation
        self.next_node_id = next_node_id
        self._conn_memo = {}
        self._split_memo = {}

    def connection(self, src, dst):
        key = (src, dst)
        if key not in self._conn_memo:
            self._conn_memo[key] = self.counter
            self.counter += 1
        return self._conn_memo[key]

    def split(self, innovation):
        """(new node id, innovation of src->new, innovation of new->dst)."""
        if innovation not in self._split_memo:
            node_id = self.next_node_id
            self.next_node_id += 1
            self._split_memo[innovation] = (node_id, self.counter, self.counter + 1)
            self.counter += 2
        return self._split_memo[innovation]

    def new_generation(self):
        self._conn_memo.clear()
        self._split_memo.clear()


def minimal_genome(n_inputs, n_outputs, rng=None, registry=None, key=0, activations=None,
                   weight_sigma=1.0, output_activation=None):
    """Inputs fully connected to outputs, no hidden nodes.

    With ``rng`` the weights are drawn from N(0, weight_sigma) and the output
    activations from ``activations``; without it weights are 1 and outputs use
    ``output_activation`` (identity by default).
    """
    activations = tuple(activations or FULL_DICTIONARY)
    nodes = [NodeGene(i, INPUT) for i in range(n_inputs)]
    for j in range(n_outputs):
        if output_activation is not None:
            act = output_activation
        elif rng is not None:
            act = activations[int(rng.integers(len(activations)))]
        else:
            act = "identity"
        nodes.append(NodeGene(n_inputs + j, OUTPUT, act, 0.0))
    conns = []
    for j in range(n_outputs):
        dst = n_inputs + j
        for i in range(n_inputs):
            innov = registry.connection(i, dst) if registry is not None else j * n_inputs + i
            w = float(np.clip(rng.normal(0.0, weight_sigma), -WEIGHT_LIMIT, WEIGHT_LIMIT)) if rng is not None else 1.0
            conns.append(ConnectionGene(innov, i, dst, w, True))
    if registry is not None:
        registry.next_node_id = max(registry.next_node_id, n_inputs + n_outputs)
    return CppnGenome(tuple(nodes), tuple(conns), key=key)


# feed-forward evaluation ----------------------------------------------------


def topological_order(genome):
    """Non-input node ids in evaluation order (ties broken by node id)."""
    ids = [n.node_id for n in genome.nodes]
    indeg = {i: 0 for i in ids}
    succ = {i: [] for i in ids}
    for c in genome.connections:
        if c.enabled:
            if c.src not in indeg or c.dst not in indeg:
                raise StructuralError(f"connection {c.innovation} references a missing node")
            succ[c.src].append(c.dst)
            indeg[c.dst] += 1
    heap = [i for i in ids if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        i = heapq.heappop(heap)
        order.append(i)
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, j)
    if len(order) != len(ids):
        raise StructuralError("enabled connections contain a cycle")
    inputs = set(genome.input_ids)
    return [i for i in order if i not in inputs]


class CppnNetwork:
    """Evaluation plan compiled from a genome.

    ``activate`` accepts one input vector or a batch of shape (n, n_inputs).
    """

    def __init__(self, genome):
        self.input_ids = genome.input_ids
        self.output_ids = genome.output_ids
        incoming = {}
        for c in genome.connections:
            if c.enabled:
                incoming.setdefault(c.dst, []).append((c.src, c.weight))
        nodes = {n.node_id: n for n in genome.nodes}
        self.plan = [
            (i, get_activation(nodes[i].activation), nodes[i].bias, incoming.get(i, []))
            for i in topological_order(genome)
        ]

    def activate(self, inputs):
        x = np.asarray(inputs, dtype=float)
        if x.shape[-1] != len(self.input_ids):
            raise ConfigurationError(f"expected {len(self.input_ids)} inputs, got {x.shape[-1]}")
        values = {nid: x[..., k] for k, nid in enumerate(self.input_ids)}
        zero = np.zeros(x.shape[:-1])
        with np.errstate(all="ignore"):
            for nid, fn, bias, links in self.plan:
                s = zero + bias
                for src, w in links:
                    s = s + w * values[src]
                values[nid] = fn(s)
            return np.stack([values[o] + zero for o in self.output_ids], axis=-1)


def cppn_forward(genome, inputs):
    """Outputs of ``genome`` for one input vector (or a batch)."""
    return CppnNetwork(genome).activate(inputs)


# compatibility -----------------------------------------------------------------


def compatibility_distance(a, b, c1=1.0, c2=1.0, c3=0.5, small_genome=20):
    """Excess/disjoint/weight compatibility between two genomes.

    N is the larger connection-gene count, replaced by 1 when both genomes have
    fewer than ``small_genome`` genes. With no matching genes the weight term
    is 0.
    """
    ga = {c.innovation: c.weight for c in a.connections}
    gb = {c.innovation: c.weight for c in b.connections}
    if not ga and not gb:
        return 0.0
    max_a = max(ga) if ga else -1
    max_b = max(gb) if gb else -1
    cutoff = min(max_a, max_b)
    excess = disjoint = 0
    wsum = 0.0
    matching = 0
    for innov in sorted(ga.keys() | gb.keys()):
        if innov in ga and innov in gb:
            matching += 1
            wsum += abs(ga[innov] - gb[innov])
        elif innov > cutoff:
            excess += 1
        else:
            disjoint += 1
    n = max(len(ga), len(gb))
    if len(ga) < small_genome and len(gb) < small_genome:
        n = 1
    wbar = wsum / matching if matching else 0.0
    return c1 * excess / n + c2 * disjoint / n + c3 * wbar


# crossover --------------------------------------------------------------------


def crossover(a, b, rng, key=0):
    """Child of two evaluated parents.

    Matching genes come from either parent with equal probability; disjoint
    and excess genes come from the fitter parent (a random one on a tie).
    """
    if a.fitness is None or b.fitness is None:
        raise ConfigurationError("crossover needs evaluated parents")
    if a.fitness > b.fitness:
        fit, other = a, b
    elif b.fitness > a.fitness:
        fit, other = b, a
    else:
        fit, other = (a, b) if rng.random() < 0.5 else (b, a)
    other_conns = {c.innovation: c for c in other.connections}
    conns = []
    for c in fit.connections:
        m = other_conns.get(c.innovation)
        if m is not None and rng.random() >= 0.5:
            conns.append(m)
        else:
            conns.append(c)
    other_nodes = {n.node_id: n for n in other.nodes}
    nodes = []
    for n in fit.nodes:
        m = other_nodes.get(n.node_id)
        if n.kind != INPUT and m is not None and m.kind == n.kind and rng.random() >= 0.5:
            nodes.append(m)
        else:
            nodes.append(n)
    return CppnGenome(tuple(nodes), tuple(conns), key=key)


# mutation ---------------------------------------------------------------------


def _reaches(conns, start, goal):
    succ = {}
    for c in conns:
        succ.setdefault(c.src, []).append(c.dst)
    stack, seen = [start], {start}
    while stack:
        i = stack.pop()
        if i == goal:
            return True
        for j in succ.get(i, ()):
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return False


def creates_cycle(connections, src, dst):
    """Would adding src->dst close a directed cycle (over all genes)?"""
    return src == dst or _reaches(connections, dst, src)


def _perturb(value, params, rng):
    r = rng.random()
    if r < params.weight_perturb_rate:
        value = value + rng.normal(0.0, params.weight_perturb_sigma)
        return float(min(max(value, -WEIGHT_LIMIT), WEIGHT_LIMIT))
    if r < params.weight_perturb_rate + params.weight_replace_rate:
        return float(rng.uniform(-WEIGHT_LIMIT, WEIGHT_LIMIT))
    return value


def mutate_add_connection(nodes, conns, registry, rng, attempts=20):
    sources = [n.node_id for n in nodes if n.kind != OUTPUT]
    targets = [n.node_id for n in nodes if n.kind != INPUT]
    existing = {(c.src, c.dst) for c in conns}
    for _ in range(attempts):
        src = sources[int(rng.integers(len(sources)))]
        dst = targets[int(rng.integers(len(targets)))]
        if (src, dst) in existing or creates_cycle(conns, src, dst):
            continue
        w = float(rng.uniform(-WEIGHT_LIMIT, WEIGHT_LIMIT) / 4.0)
        return conns + [ConnectionGene(registry.connection(src, dst), src, dst, w, True)]
    return conns


def split_connection(nodes, conns, index, registry, activation):
    """Replace conn[index] (u->v, w) by u->h (1.0) and h->v (w); the original is disabled."""
    old = conns[index]
    node_id, in_innov, out_innov = registry.split(old.innovation)
    if any(n.node_id == node_id for n in nodes):
        return nodes, conns
    conns = list(conns)
    conns[index] = replace(old, enabled=False)
    conns.append(ConnectionGene(in_innov, old.src, node_id, 1.0, True))
    conns.append(ConnectionGene(out_innov, node_id, old.dst, old.weight, True))
    nodes = list(nodes) + [NodeGene(node_id, HIDDEN, activation, 0.0)]
    return nodes, conns


def mutate(genome, params, registry, rng, key=None):
    """Apply each structural mutation with its own probability, then perturb weights."""
    nodes = list(genome.nodes)
    conns = list(genome.connections)
    acts = params.activations

    if rng.random() < params.node_add_rate:
        enabled = [i for i, c in enumerate(conns) if c.enabled]
        if enabled:
            idx = enabled[int(rng.integers(len(enabled)))]
            act = acts[int(rng.integers(len(acts)))]
            nodes, conns = split_connection(nodes, conns, idx, registry, act)

    if rng.random() < params.conn_add_rate:
        conns = mutate_add_connection(nodes, conns, registry, rng)

    if rng.random() < params.node_delete_rate:
        hidden = [n.node_id for n in nodes if n.kind == HIDDEN]
        if hidden:
            victim = hidden[int(rng.integers(len(hidden)))]
            nodes = [n for n in nodes if n.node_id != victim]
            conns = [c for c in conns if c.src != victim and c.dst != victim]

    if rng.random() < params.conn_delete_rate and conns:
        del conns[int(rng.integers(len(conns)))]

    if rng.random() < params.conn_toggle_rate and conns:
        i = int(rng.integers(len(conns)))
        conns[i] = replace(conns[i], enabled=not conns[i].enabled)

    if rng.random() < params.activation_mutate_rate:
        mutable = [i for i, n in enumerate(nodes) if n.kind != INPUT]
        if mutable:
            i = mutable[int(rng.integers(len(mutable)))]
            nodes[i] = replace(nodes[i], activation=acts[int(rng.integers(len(acts)))])

    if params.weight_perturb_rate > 0.0 or params.weight_replace_rate > 0.0:
        conns = [replace(c, weight=_perturb(c.weight, params, rng)) for c in conns]
        nodes = [n if n.kind == INPUT else replace(n, bias=_perturb(n.bias, params, rng)) for n in nodes]

    return CppnGenome(tuple(nodes), tuple(conns), key=genome.key if key is None else key)


def check_invariants(genome):
    """Raise StructuralError if the genome breaks a structural invariant."""
    innovs = [c.innovation for c in genome.connections]
    if len(set(innovs)) != len(innovs):
        raise StructuralError("duplicate innovation numbers")
    pairs = [(c.src, c.dst) for c in genome.connections if c.enabled]
    if len(set(pairs)) != len(pairs):
        raise StructuralError("duplicate enabled (src, dst) pair")
    ids = [n.node_id for n in genome.nodes]
    if len(set(ids)) != len(ids):
        raise StructuralError("duplicate node ids")
    for n in genome.nodes:
        if n.kind == INPUT and n.bias != 0.0:
            raise StructuralError("input nodes carry no bias")
    topological_order(genome)
    inputs = set(genome.input_ids)
    for c in genome.connections:
        if c.dst in inputs:
            raise StructuralError("connection into an input node")
    return True


def genome_hash(genome):
    """Stable short digest of the genome structure and parameters."""
    return hashlib.sha256(json.dumps(genome.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


__all__ = [
    "ConnectionGene",
    "CppnGenome",
    "CppnNetwork",
    "EvolutionParams",
    "InnovationRegistry",
    "NodeGene",
    "check_invariants",
    "compatibility_distance",
    "cppn_forward",
    "creates_cycle",
    "crossover",
    "minimal_genome",
    "mutate",
    "split_connection",
    "topological_order",
]
