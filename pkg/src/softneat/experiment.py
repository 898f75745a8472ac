"""Replicated evolutionary runs with pooled evaluation and CSV/SVG output.

All runs of an experiment advance in lockstep: each generation the pending
controllers of every run are gathered into one batch, evaluated (in-process or
by a process pool), and merged back by (run, key). Evaluation is a pure
function of the controller, so the worker count cannot change any result.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import morphology
from .activations import get_dictionary, validate_dictionary
from .errors import ConfigurationError
from .genome import EvolutionParams
from .harness import (
    APTITUDE_SET_SIZE,
    PRESETS,
    activation_histogram,
    check_algorithm,
    ci95,
    complexity_report,
    cppn_outputs,
    evaluate_set,
    set_fitness,
)
from .hyperneat import build_substrate, hyperneat_complexity
from .neat import NeatRun, RunRecord
from .report import write_svg
from .sga import SgaParams, SgaRun


def _parse_dims(value):
    if isinstance(value, str):
        parts = value.replace("x", ",").replace("X", ",").split(",")
        value = [p for p in (s.strip() for s in parts) if p]
    dims = tuple(int(v) for v in value)
    if len(dims) != 3 or min(dims) < 1:
        raise ConfigurationError(f"sam_dims must be three positive integers, got {value!r}")
    return dims


@dataclass
class ExperimentConfig:
    algorithm: str = "neat"
    dictionary: str = "fd"
    sam_set: object = "nf"  # "nf", "nw" or a list of .sam paths
    sam_dims: tuple = morphology.CANVAS
    sam_limit: int | None = None
    runs: int = 20
    generations: int = 200
    population: int = 50
    preset: str = "full"
    duration: float | None = None
    master_seed: int = 0
    workers: int = 1
    aptitude: bool = True
    out: str | None = None

    def __post_init__(self):
        self.algorithm = check_algorithm(self.algorithm)
        self.dictionary = str(self.dictionary).lower()
        validate_dictionary(get_dictionary(self.dictionary))
        if isinstance(self.sam_set, str) and "," in self.sam_set:
            self.sam_set = [p.strip() for p in self.sam_set.split(",") if p.strip()]
        if isinstance(self.sam_set, str):
            self.sam_set = self.sam_set.lower()
            if self.sam_set not in morphology.SAM_SETS:
                self.sam_set = [self.sam_set]
        else:
            self.sam_set = [str(p) for p in self.sam_set]
        self.sam_dims = _parse_dims(self.sam_dims)
        if self.sam_limit is not None and int(self.sam_limit) < 1:
            raise ConfigurationError("sam_limit must be >= 1")
        for name in ("runs", "generations", "population", "workers"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.preset not in PRESETS:
            raise ConfigurationError(f"unknown preset {self.preset!r}; expected one of {sorted(PRESETS)}")

    # key-value text ---------------------------------------------------------
    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "sam_dims":
                v = "x".join(str(d) for d in v)
            elif isinstance(v, list):
                v = ",".join(v)
            lines.append(f"{f.name} = {'' if v is None else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, **overrides):
        """Parse ``key = value`` lines (``#`` comments); keyword overrides win."""
        known = {f.name: f for f in fields(cls)}
        values = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"config line {n}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            k = k.replace("-", "_")
            if k not in known:
                raise ConfigurationError(f"config line {n}: unknown key {k!r}")
            values[k] = v
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**_coerce(values))

    @classmethod
    def load(cls, path, **overrides):
        return cls.from_text(Path(path).read_text(), **overrides)

    # derived ----------------------------------------------------------------
    def run_seed(self, run_index):
        return int(np.random.SeedSequence([int(self.master_seed), int(run_index)]).generate_state(1)[0])

    def settings(self):
        kw = {} if self.duration is None else {"duration": float(self.duration)}
        return PRESETS[self.preset](**kw)

    def sams(self):
        if isinstance(self.sam_set, str):
            sams = morphology.SAM_SETS[self.sam_set](self.sam_dims)
        else:
            sams = [morphology.load(p) for p in self.sam_set]
        if self.sam_limit is not None:
            sams = sams[: int(self.sam_limit)]
        return sams

    def aptitude_sams(self):
        """Nine SAMs for aptitude: the named set at full size, or nine custom files."""
        if isinstance(self.sam_set, str):
            return morphology.SAM_SETS[self.sam_set](self.sam_dims)
        sams = [morphology.load(p) for p in self.sam_set]
        return sams if len(sams) == APTITUDE_SET_SIZE else None


_INT_KEYS = {"sam_limit", "runs", "generations", "population", "master_seed", "workers"}


def _coerce(values):
    out = {}
    for k, v in values.items():
        if isinstance(v, str):
            s = v.strip()
            if k in _INT_KEYS:
                v = None if s in ("", "none", "None") else int(s)
            elif k == "duration":
                v = None if s in ("", "none", "None") else float(s)
            elif k == "aptitude":
                v = s.lower() in ("1", "true", "yes", "on")
            elif k == "out":
                v = s or None
        out[k] = v
    return out


# pooled evaluation ----------------------------------------------------------

_WORKER = {}


def _init_worker(algorithm, sams, settings):
    _WORKER["algorithm"] = algorithm
    _WORKER["sams"] = sams
    _WORKER["settings"] = settings


def _eval_task(task):
    tag, controller = task
    results = evaluate_set(_WORKER["algorithm"], controller, _WORKER["sams"], _WORKER["settings"])
    return tag, set_fitness(results), sum(r.diverged for r in results)


class Evaluator:
    """Maps a batch of (tag, controller) to {tag: (fitness, diverged count)}."""

    def __init__(self, algorithm, sams, settings, workers=1):
        self.args = (algorithm, sams, settings)
        self.workers = int(workers)
        self._pool = None
        if self.workers > 1:
            self._pool = ProcessPoolExecutor(self.workers, initializer=_init_worker, initargs=self.args)
        else:
            _init_worker(*self.args)

    def __call__(self, tasks):
        if not tasks:
            return {}
        if self._pool is None:
            results = map(_eval_task, tasks)
        else:
            chunk = max(1, len(tasks) // (4 * self.workers))
            results = self._pool.map(_eval_task, tasks, chunksize=chunk)
        return {tag: (fit, div) for tag, fit, div in results}

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make_run(config, run_index):
    seed = config.run_seed(run_index)
    if config.algorithm == "sga":
        params = SgaParams(population_size=config.population, generations=config.generations)
        return SgaRun(params, seed, config.sam_dims)
    params = EvolutionParams(
        population_size=config.population,
        generations=config.generations,
        activations=get_dictionary(config.dictionary),
    )
    complexity = hyperneat_complexity if config.algorithm == "hyperneat" else None
    return NeatRun(params, seed, 4, cppn_outputs(config.algorithm), complexity=complexity, algorithm=config.algorithm)


# artifacts ------------------------------------------------------------------


@dataclass
class MetricsBundle:
    generations: list
    best_mean: np.ndarray
    best_ci: np.ndarray | None
    so_far_mean: np.ndarray
    so_far_ci: np.ndarray | None
    champions: list = field(default_factory=list)  # dict rows
    histogram: dict | None = None

    def final_best(self):
        return [row["champion_fitness"] for row in self.champions]

    def metrics_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["generation", "mean_best", "ci95_best", "mean_best_so_far", "ci95_best_so_far"])
        for i, g in enumerate(self.generations):
            w.writerow([
                g,
                repr(float(self.best_mean[i])),
                "" if self.best_ci is None else repr(float(self.best_ci[i])),
                repr(float(self.so_far_mean[i])),
                "" if self.so_far_ci is None else repr(float(self.so_far_ci[i])),
            ])
        return out.getvalue()

    def champions_csv(self):
        out = io.StringIO()
        cols = ["run", "seed", "champion_fitness", "connections", "hidden_nodes", "aptitude"]
        w = csv.writer(out, lineterminator="\n")
        w.writerow(cols)
        for row in self.champions:
            w.writerow([repr(v) if isinstance(v, float) else ("" if v is None else v) for v in (row[c] for c in cols)])
        return out.getvalue()

    def histogram_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["activation", "percent"])
        for k, v in (self.histogram or {}).items():
            w.writerow([k, repr(float(v))])
        return out.getvalue()


def curve_stats(records):
    """Mean and CI (None for a single run) of per-generation best and best-so-far."""
    best = np.array([r.best_curve for r in records], dtype=float)
    so_far = np.array([r.best_so_far_curve for r in records], dtype=float)
    if len(records) >= 2:
        bm, bc = ci95(best)
        sm, sc = ci95(so_far)
    else:
        bm, bc, sm, sc = best[0], None, so_far[0], None
    gens = [g.generation for g in records[0].generations]
    return gens, bm, bc, sm, sc


def champion_payload(algorithm, champion, layout):
    if algorithm == "sga":
        return champion.to_csv(), "csv"
    data = {"algorithm": algorithm, "fitness": champion.fitness, "genome": champion.to_dict()}
    if algorithm == "hyperneat":
        data["substrate"] = build_substrate(champion, layout).to_dict()
    return json.dumps(data, indent=1, sort_keys=True) + "\n", "json"


def check_writable(out):
    """Create ``out`` and prove it is writable, before any run starts."""
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
        fd, probe = tempfile.mkstemp(dir=path, prefix=".probe")
        os.close(fd)
        os.unlink(probe)
    except OSError as exc:
        raise OSError(f"output directory {str(out)!r} is not writable: {exc}") from exc
    return path


def run_experiment(config, out=None, progress=None):
    """Execute every run of ``config``; write artifacts when ``out`` is set.

    Returns (MetricsBundle, list of RunRecord).
    """
    out = out or config.out
    path = check_writable(out) if out else None
    sams = config.sams()
    settings = config.settings()
    runs = [make_run(config, i) for i in range(config.runs)]

    with Evaluator(config.algorithm, sams, settings, config.workers) as evaluate:
        while not all(r.done for r in runs):
            tasks = []
            for i, r in enumerate(runs):
                if not r.done:
                    tasks.extend(((i, ind.key), ind) for ind in r.pending())
            results = evaluate(tasks)
            for i, r in enumerate(runs):
                if not r.done:
                    r.tell({key: results[(i, key)][0] for (j, key), _ in tasks if j == i})
            if progress:
                progress(runs)

        records = [r.record for r in runs]
        ap_sams = config.aptitude_sams() if config.aptitude else None
        ap_tasks = [((i, "apt"), rec.champion) for i, rec in enumerate(records)] if ap_sams else []

    apt = {}
    if ap_tasks:
        # aptitude runs over a different SAM set, so it gets its own evaluator
        with Evaluator(config.algorithm, ap_sams, settings, config.workers) as ev:
            apt = {tag[0]: v[0] for tag, v in ev(ap_tasks).items()}

    gens, bm, bc, sm, sc = curve_stats(records)
    champions = []
    for i, rec in enumerate(records):
        conns, hidden = complexity_report(config.algorithm, rec.champion, settings.layout)
        champions.append({
            "run": i,
            "seed": rec.seed,
            "champion_fitness": float(rec.champion_fitness),
            "connections": int(conns),
            "hidden_nodes": int(hidden),
            # the pooled set fitness over the nine SAMs is their mean, i.e. the aptitude
            "aptitude": apt.get(i),
        })
    hist = None
    if config.algorithm != "sga":
        hist = activation_histogram([rec.champion for rec in records], config.dictionary)
    bundle = MetricsBundle(gens, bm, bc, sm, sc, champions, hist)

    if path is not None:
        write_artifacts(path, config, records, bundle, settings)
    return bundle, records


def write_artifacts(path, config, records, bundle, settings):
    (path / "runs").mkdir(exist_ok=True)
    (path / "champions").mkdir(exist_ok=True)
    for i, rec in enumerate(records):
        (path / "runs" / f"run_{i:03d}.csv").write_text(rec.to_csv())
        text, ext = champion_payload(config.algorithm, rec.champion, settings.layout)
        (path / "champions" / f"run_{i:03d}.{ext}").write_text(text)
    (path / "config.txt").write_text(config.to_text())
    (path / "metrics.csv").write_text(bundle.metrics_csv())
    (path / "champions.csv").write_text(bundle.champions_csv())
    if bundle.histogram is not None:
        (path / "activation.csv").write_text(bundle.histogram_csv())
    title = f"{config.algorithm.upper()} {config.dictionary.upper()} ({config.runs} runs)"
    write_svg(
        path / "fitness.svg",
        [(config.algorithm, bundle.generations, bundle.so_far_mean, bundle.so_far_ci)],
        title=title + ", best so far",
    )
    write_svg(
        path / "fitness_per_generation.svg",
        [(config.algorithm, bundle.generations, bundle.best_mean, bundle.best_ci)],
        title=title + ", best per generation",
    )


def load_records(path):
    """RunRecords from ``path/runs/*.csv`` in run order."""
    records = []
    for f in sorted(Path(path, "runs").glob("run_*.csv")):
        gens = RunRecord.read_csv(f.read_text())
        best = gens[-1].best_so_far if gens else -math.inf
        records.append(RunRecord("", 0, gens, champion_fitness=best))
    return records


def median(values):
    vals = sorted(float(v) for v in values)
    if not vals:
        return math.nan
    return float(np.median(vals))


__all__ = [
    "Evaluator",
    "ExperimentConfig",
    "MetricsBundle",
    "check_writable",
    "curve_stats",
    "load_records",
    "make_run",
    "median",
    "run_experiment",
    "write_artifacts",
]
