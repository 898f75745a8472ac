"""Compiled vs numpy integrator on generated SAMs.

    python3 benchmarks/bench_kernel.py [--steps 2000] [--repeat 3]

Both backends run the same lattice for the same number of steps; the script
reports steps per second, the speedup, and whether the end states agree bit
for bit.
"""
import argparse
import time

import numpy as np

from softneat.morphology import generate_fragmented, generate_pyramidal, nf_like_set
from softneat.phase import PhaseField
from softneat.sim import COMPILED_AVAILABLE, MaterialParams, build_lattice
from softneat.sim.backend import get


def run(state, backend, n_steps):
    pos, vel = state.pos.copy(), state.vel.copy()
    dt = state.default_dt()
    t0 = time.perf_counter()
    get(backend)(
        pos, vel, 1.0 / state.mass, state.damping, state.free_idx, state.spring_a, state.spring_b,
        state.rest0, state.stiffness, state.coef_sin, state.coef_cos, state.strain, state.omega,
        state.gravity_z, dt, n_steps, 0, n_steps + 1, state.probe,
    )
    return time.perf_counter() - t0, pos


def cases():
    yield "striped 20x8x8", nf_like_set()[0]
    yield "pyramidal 20x8x8", generate_pyramidal()
    yield "fragmented 20x8x8", generate_fragmented(seed=1)
    yield "striped 10x4x4", nf_like_set((10, 4, 4))[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not COMPILED_AVAILABLE:
        raise SystemExit("compiled kernel not built: pip install -e . --no-build-isolation")

    rng = np.random.default_rng(0)
    print(f"{'case':<20} {'nodes':>6} {'springs':>8} {'compiled/s':>12} {'python/s':>10} {'speedup':>8}  identical")
    for name, sam in cases():
        pf = PhaseField.for_sam(sam, rng.uniform(-6.0, 6.0, sam.voxel_count))
        state = build_lattice(sam, MaterialParams.desk(), pf)
        best = {}
        ends = {}
        for backend in ("compiled", "python"):
            times = []
            for _ in range(args.repeat):
                secs, ends[backend] = run(state, backend, args.steps)
                times.append(secs)
            best[backend] = min(times)
        same = ends["compiled"].tobytes() == ends["python"].tobytes()
        rate = {k: args.steps / v for k, v in best.items()}
        print(
            f"{name:<20} {state.n_nodes:>6} {state.n_springs:>8} {rate['compiled']:>12.0f} "
            f"{rate['python']:>10.0f} {best['python'] / best['compiled']:>7.1f}x  {same}"
        )


if __name__ == "__main__":
    main()
