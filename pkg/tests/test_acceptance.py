"""Acceptance criteria. Each test prints one PASS/FAIL line with its measurement.

Criteria 7 to 9 run desk-scale experiments and are marked slow; the rest take
seconds. Tolerances and time limits are pinned below.
"""
import math
import time

import numpy as np
import pytest

from softneat.genome import EvolutionParams, InnovationRegistry, compatibility_distance, minimal_genome, mutate
from softneat.harness import EvalSettings, aptitude, decode_controller, evaluate
from softneat.hyperneat import DEFAULT_LAYOUT, build_substrate
from softneat.morphology import PASSIVE, CONTRACTILE, Sam, generate_fragmented
from softneat.neat import speciate
from softneat.phase import PhaseField
from softneat.sga import sga_init
from softneat.sim import LatticeState, build_lattice, fitness_from_trace, simulate, step
from softneat.experiment import ExperimentConfig, median, run_experiment

from .conftest import record_criterion
from .test_genome import brute_force_delta, random_gene_genome

TWO_PI = 2.0 * math.pi

DISTANCE_TOL = 1e-12
PERIOD_REL_TOL = 0.02
MOMENTUM_TOL_PER_STEP = 1e-9
MIRROR_TOL = 1e-7
APTITUDE_TOL = 1e-12


def random_cppn(rng, registry, params, n_outputs, max_mutations=8, key=0):
    g = minimal_genome(4, n_outputs, rng=rng, registry=registry, key=key)
    for _ in range(int(rng.integers(0, max_mutations + 1))):
        g = mutate(g, params, registry, rng)
    return g


def test_criterion_01_distance_oracle():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        a, b = random_gene_genome(rng), random_gene_genome(rng)
        worst = max(worst, abs(compatibility_distance(a, b) - brute_force_delta(a, b)))
    secs = time.perf_counter() - t0
    ok = worst <= DISTANCE_TOL and secs < 5.0
    assert record_criterion(1, "distance oracle", ok, f"max |delta - oracle| = {worst:.1e} over 1000 pairs, {secs:.2f} s")


def test_criterion_02_speciation_partition():
    params = EvolutionParams()
    t0 = time.perf_counter()
    bad = 0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        reg = InnovationRegistry()
        size = int(rng.integers(5, 40))
        pop = [random_cppn(rng, reg, params, 1, 4, key=k) for k in range(size)]
        species = speciate(pop, [], params, rng)
        keys = sorted(k for sp in species for k in sp.member_keys)
        partition = keys == list(range(size))
        close = all(
            compatibility_distance(g, sp.representative) < params.compatibility_threshold
            for sp in species
            for g in sp.members
        )
        bad += not (partition and close)
    secs = time.perf_counter() - t0
    ok = bad == 0 and secs < 10.0
    assert record_criterion(2, "speciation partition", ok, f"{bad} violations in 200 populations, {secs:.2f} s")


def test_criterion_03_substrate_contract():
    rng = np.random.default_rng(103)
    reg, params = InnovationRegistry(), EvolutionParams()
    t0 = time.perf_counter()
    bad_w = bad_raw = bad_hidden = 0
    for _ in range(10_000):
        net = build_substrate(random_cppn(rng, reg, params, 2))
        bad_w += sum(not -3.0 <= w <= 3.0 for w in net.weights.values())
        bad_raw += sum(abs(net.raw[c]) < 0.2 for c in net.weights)
        bad_hidden += net.complexity()[1] != 13
    secs = time.perf_counter() - t0
    ok = bad_w == bad_raw == bad_hidden == 0 and DEFAULT_LAYOUT.n_hidden == 13 and secs < 30.0
    detail = f"weights out of range {bad_w}, |raw| < 0.2 kept {bad_raw}, hidden != 13 {bad_hidden}, {secs:.1f} s"
    assert record_criterion(3, "substrate contract", ok, detail)


def test_criterion_04_phase_clamping():
    rng = np.random.default_rng(104)
    reg, params = InnovationRegistry(), EvolutionParams()
    sam = generate_fragmented((10, 6, 6), 4)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(10_000):
        algo = ("neat", "hyperneat", "sga")[k % 3]
        if algo == "sga":
            ctrl = sga_init(rng, sam.dims)
            ctrl.matrix[:] *= 3.0  # push genes outside the range on purpose
        else:
            ctrl = random_cppn(rng, reg, params, 2 if algo == "hyperneat" else 1, 6)
        pf = decode_controller(algo, ctrl, sam)
        worst = max(worst, float(np.abs(pf.phases).max()))
    secs = time.perf_counter() - t0
    ok = worst <= TWO_PI and secs < 60.0
    assert record_criterion(4, "phase clamping", ok, f"max |phase| = {worst:.6f} (2pi = {TWO_PI:.6f}), {secs:.1f} s")


def test_criterion_05_simulator_physics():
    t0 = time.perf_counter()
    # (a) one free node on one spring
    k, m = 100.0, 0.01
    st = LatticeState(
        pos=np.array([[0.0, 0.0, 0.0], [0.011, 0.0, 0.0]]), vel=np.zeros((2, 3)), mass=np.array([m, m]),
        damping=np.zeros(2), fixed=np.array([True, False]), spring_a=np.array([0]), spring_b=np.array([1]),
        rest0=np.array([0.01]), stiffness=np.array([k]), coef_sin=np.zeros(1), coef_cos=np.zeros(1),
        probe=np.array([1]),
    )
    dt = st.stable_dt() / 50
    xs = []
    for _ in range(400):
        st = step(st, dt, 50)
        xs.append(st.pos[1, 0] - 0.01)
    x = np.array(xs)
    t = (np.arange(len(x)) + 1) * 50 * dt
    i = np.flatnonzero((x[:-1] < 0) & (x[1:] >= 0))
    cross = t[i] - x[i] * (t[i + 1] - t[i]) / (x[i + 1] - x[i])
    expected = 2 * math.pi * math.sqrt(m / k)
    period_err = abs(float(np.mean(np.diff(cross))) / expected - 1.0)

    # (b) free, undamped, unactuated lattice
    rng = np.random.default_rng(105)
    lat = build_lattice(Sam(np.full((3, 2, 2), PASSIVE, dtype=np.int8)), anchor=False)
    lat.damping = np.zeros_like(lat.damping)
    lat.pos = lat.pos + rng.normal(0, 1e-4, lat.pos.shape)
    lat.vel = rng.normal(0, 1e-2, lat.vel.shape)
    p0 = lat.momentum()
    n = 10_000
    drift = float(np.abs(step(lat, lat.default_dt(), n).momentum() - p0).max()) / n

    # (c) reflect SAM and phases across the y mid-plane
    v = np.zeros((4, 3, 2), dtype=np.int8)
    v[:, 0, 0] = CONTRACTILE
    v[:, 1:, :] = PASSIVE
    v[3, 0, 1] = CONTRACTILE
    v[1, 2, 0] = CONTRACTILE
    sam = Sam(v)
    pf = PhaseField.for_sam(sam, rng.uniform(-TWO_PI, TWO_PI, sam.voxel_count))
    a = simulate(sam, pf, duration=0.1).displacement
    b = simulate(Sam(v[:, ::-1, :].copy()), pf.mirrored_y(), duration=0.1).displacement
    mirror_err = max(float(np.abs(a[:, 1] + b[:, 1]).max()), float(np.abs(a[:, 2] - b[:, 2]).max()))

    # (d) all-passive SAM
    passive = Sam(np.full((5, 2, 2), PASSIVE, dtype=np.int8))
    passive_fit = fitness_from_trace(simulate(passive, PhaseField.uniform(passive, 1.0), duration=0.1))
    secs = time.perf_counter() - t0

    ok = (
        period_err <= PERIOD_REL_TOL
        and drift <= MOMENTUM_TOL_PER_STEP
        and mirror_err <= MIRROR_TOL
        and passive_fit == 0.0
        and secs < 60.0
    )
    detail = (
        f"period error {period_err:.3%}, momentum drift {drift:.1e}/step, "
        f"mirror error {mirror_err:.1e}, passive fitness {passive_fit}, {secs:.1f} s"
    )
    assert record_criterion(5, "simulator physics", ok, detail)


def test_criterion_06_aptitude_is_mean():
    rng = np.random.default_rng(106)
    reg, params = InnovationRegistry(), EvolutionParams()
    settings = EvalSettings.desk(duration=0.02)
    worst = 0.0
    for draw in range(50):
        algo = ("neat", "hyperneat", "sga")[draw % 3]
        seeds = rng.integers(0, 2**31, 9)
        sams = [generate_fragmented((5, 4, 4), int(s)) for s in seeds]
        if algo == "sga":
            ctrl = sga_init(rng, (5, 4, 4))
        else:
            ctrl = random_cppn(rng, reg, params, 2 if algo == "hyperneat" else 1, 6)
        independent = [evaluate(algo, ctrl, s, settings) for s in sams]
        worst = max(worst, abs(aptitude(algo, ctrl, sams, settings) - sum(independent) / 9.0))
    ok = worst <= APTITUDE_TOL
    assert record_criterion(6, "aptitude equals nine-SAM mean", ok, f"max deviation {worst:.1e} over 50 draws")


DESK = dict(sam_set="nf", sam_dims="10x4x4", sam_limit=1, preset="desk", dictionary="fd", master_seed=0)


@pytest.mark.slow
def test_criterion_07_determinism(tmp_path):
    cfg = dict(DESK, algorithm="neat", runs=3, generations=20, population=12)
    t0 = time.perf_counter()
    texts = []
    for tag, workers in (("w1", 1), ("w1_repeat", 1), ("w4", 4)):
        run_experiment(ExperimentConfig(**cfg, workers=workers), out=tmp_path / tag)
        texts.append((tmp_path / tag / "metrics.csv").read_bytes())
    secs = time.perf_counter() - t0
    same = texts[0] == texts[1] == texts[2]
    ok = same and secs < 600.0
    detail = f"metrics byte-identical for workers 1, 1 (repeat), 4: {same}, {secs:.0f} s"
    assert record_criterion(7, "determinism", ok, detail)


@pytest.fixture(scope="module")
def benchmark():
    """Desk-scale benchmark shared by criteria 8 and 9: 5 seeds, 30 generations, population 20."""
    t0 = time.perf_counter()
    out = {}
    for algo in ("neat", "hyperneat", "sga"):
        cfg = ExperimentConfig(**DESK, algorithm=algo, runs=5, generations=30, population=20, aptitude=False)
        bundle, _ = run_experiment(cfg)
        out[algo] = bundle
    out["seconds"] = time.perf_counter() - t0
    return out


@pytest.mark.slow
def test_criterion_08_ranking(benchmark):
    fin = {a: benchmark[a].final_best() for a in ("neat", "hyperneat", "sga")}
    med = {a: median(v) for a, v in fin.items()}
    wins = sum(n > s for n, s in zip(fin["neat"], fin["sga"]))
    secs = benchmark["seconds"]
    ok = med["neat"] >= med["sga"] and med["neat"] >= med["hyperneat"] and wins >= 4 and secs < 1800.0
    detail = (
        f"median final best (mm) NEAT {med['neat'] * 1e3:.4f}, HyperNEAT {med['hyperneat'] * 1e3:.4f}, "
        f"SGA {med['sga'] * 1e3:.4f}; NEAT > SGA in {wins}/5 seeds, {secs:.0f} s"
    )
    assert record_criterion(8, "ranking NEAT >= HyperNEAT, SGA", ok, detail)


@pytest.mark.slow
def test_criterion_09_complexity(benchmark):
    def mean_of(algo, col):
        return float(np.mean([row[col] for row in benchmark[algo].champions]))

    neat_c, hyper_c = mean_of("neat", "connections"), mean_of("hyperneat", "connections")
    neat_h = mean_of("neat", "hidden_nodes")
    ok = neat_c < hyper_c and neat_h < 13
    detail = f"mean connections NEAT {neat_c:.1f} vs HyperNEAT {hyper_c:.1f}; NEAT hidden nodes {neat_h:.1f} < 13"
    assert record_criterion(9, "complexity direction", ok, detail)


def test_criterion_10_minimal_start():
    cfg = ExperimentConfig(
        algorithm="neat", sam_dims="5x4x4", sam_limit=1, runs=5, generations=1, population=10,
        preset="desk", duration=0.05, aptitude=False,
    )
    _, records = run_experiment(cfg)
    got = {(r.generations[0].best_connections, r.generations[0].best_hidden_nodes) for r in records}
    got |= {r.initial_champion.complexity() for r in records}
    ok = got == {(4, 0)}
    assert record_criterion(10, "minimal-topology start", ok, f"generation-0 champion (connections, hidden) = {sorted(got)}")
