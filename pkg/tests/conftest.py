import numpy as np
import pytest

from softneat.genome import ConnectionGene, CppnGenome, NodeGene


def make_genome(conns, n_inputs=4, n_outputs=1, hidden=(), activations=None, biases=None, key=0, fitness=None):
    """Genome from (innovation, src, dst, weight[, enabled]) tuples.

    Inputs are 0..n_inputs-1, outputs follow, hidden ids come from ``hidden``.
    """
    activations = activations or {}
    biases = biases or {}
    nodes = [NodeGene(i, "input") for i in range(n_inputs)]
    for j in range(n_outputs):
        nid = n_inputs + j
        nodes.append(NodeGene(nid, "output", activations.get(nid, "identity"), biases.get(nid, 0.0)))
    for h in hidden:
        nodes.append(NodeGene(h, "hidden", activations.get(h, "identity"), biases.get(h, 0.0)))
    genes = tuple(ConnectionGene(c[0], c[1], c[2], float(c[3]), c[4] if len(c) > 4 else True) for c in conns)
    return CppnGenome(tuple(nodes), genes, key=key, fitness=fitness)


def constant_cppn(values, n_inputs=4):
    """CPPN whose outputs ignore the inputs: identity outputs with bias = value."""
    values = list(values)
    return make_genome(
        [],
        n_inputs=n_inputs,
        n_outputs=len(values),
        biases={n_inputs + j: v for j, v in enumerate(values)},
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report a line each; the summary prints them even under capture
ACCEPTANCE = {}


def record_criterion(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
