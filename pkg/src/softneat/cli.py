"""Command line entry point: ``softneat {evolve,simulate,gen-sam,report}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import morphology
from .errors import SoftNeatError


def _dims(text):
    from .experiment import _parse_dims

    return _parse_dims(text)


def cmd_evolve(args):
    from .experiment import ExperimentConfig, run_experiment

    overrides = {
        "algorithm": args.algorithm,
        "dictionary": args.dictionary,
        "sam_set": args.sam_set,
        "sam_dims": args.sam_dims,
        "sam_limit": args.sam_limit,
        "runs": args.runs,
        "generations": args.generations,
        "population": args.population,
        "preset": args.preset,
        "duration": args.duration,
        "master_seed": args.seed,
        "workers": args.workers,
        "out": args.out,
    }
    if args.no_aptitude:
        overrides["aptitude"] = False
    if args.config:
        config = ExperimentConfig.load(args.config, **overrides)
    else:
        config = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    if not config.out:
        raise SystemExit("evolve: --out is required (flag or config file)")

    def progress(runs):
        if not args.quiet:
            g = max(r.generation for r in runs)
            best = max(r.best_so_far for r in runs)
            print(f"generation {g}/{config.generations}  best so far {best * 1e3:.4f} mm", file=sys.stderr)

    bundle, _ = run_experiment(config, progress=progress)
    finals = bundle.final_best()
    print(f"{config.algorithm}: {len(finals)} runs, final best (mm): " + " ".join(f"{f * 1e3:.4f}" for f in finals))
    print(f"artifacts in {config.out}")
    return 0


def cmd_simulate(args):
    from .harness import PRESETS
    from .phase import PhaseField
    from .sim import fitness_from_trace, simulate

    sam = morphology.load(args.sam)
    phases = PhaseField.load(args.phases, sam) if args.phases else PhaseField.uniform(sam, 0.0)
    settings = PRESETS[args.preset]()
    trace = simulate(sam, phases, settings.material, duration=args.duration, params=settings.sim)
    trace.save(args.out)
    print(f"fitness {fitness_from_trace(trace) * 1e3:.6f} mm over {len(trace)} samples -> {args.out}")
    return 0


def cmd_gen_sam(args):
    dims = args.dims
    if args.kind == "striped":
        sam = morphology.generate_striped_diagonal(dims, args.seed)
    elif args.kind == "pyramidal":
        sam = morphology.generate_pyramidal(dims, trim=args.trim)
    else:
        sam = morphology.generate_fragmented(dims, args.seed)
    morphology.save(sam, args.out)
    print(f"{args.kind} SAM {'x'.join(map(str, sam.dims))}, {sam.voxel_count} voxels -> {args.out}")
    return 0


def cmd_report(args):
    from .report import report

    rows = report(args.in_dir, args.out)
    for row in rows:
        print(
            f"{row['experiment']}: {row['algorithm']} median final best "
            f"{row['median_final_best'] * 1e3:.4f} mm, connections {row['mean_connections']:.2f}, "
            f"hidden {row['mean_hidden_nodes']:.2f}"
        )
    print(f"report in {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="softneat", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("evolve", help="run replicated evolutionary experiments")
    e.add_argument("--config", type=Path, help="key = value file; flags override it")
    e.add_argument("--algorithm", choices=("neat", "hyperneat", "sga"))
    e.add_argument("--dictionary", type=str.lower, choices=("fd", "rd"))
    e.add_argument("--sam-set", help="nf, nw, or comma-separated .sam files")
    e.add_argument("--sam-dims", help="generator dims for named sets, e.g. 10x4x4")
    e.add_argument("--sam-limit", type=int, help="use only the first N SAMs of the set")
    e.add_argument("--runs", type=int)
    e.add_argument("--generations", type=int)
    e.add_argument("--population", type=int)
    e.add_argument("--seed", type=int, help="master seed")
    e.add_argument("--workers", type=int)
    e.add_argument("--preset", choices=("full", "desk"))
    e.add_argument("--duration", type=float, help="simulated seconds per evaluation")
    e.add_argument("--no-aptitude", action="store_true", help="skip the nine-SAM aptitude pass")
    e.add_argument("--out")
    e.add_argument("--quiet", action="store_true")
    e.set_defaults(func=cmd_evolve)

    s = sub.add_parser("simulate", help="simulate one SAM with a phase file")
    s.add_argument("--sam", required=True)
    s.add_argument("--phases", help="CSV x,y,z,phase (default all zero)")
    s.add_argument("--duration", type=float, default=1.0)
    s.add_argument("--preset", choices=("full", "desk"), default="full")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gen-sam", help="write a generated SAM file")
    g.add_argument("--kind", choices=("striped", "pyramidal", "fragmented"), required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--trim", type=int, default=0, help="pyramidal: shorten along x")
    g.add_argument("--dims", type=_dims, default=morphology.CANVAS)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_sam)

    r = sub.add_parser("report", help="rebuild metrics and charts from run directories")
    r.add_argument("--in", dest="in_dir", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SoftNeatError, OSError) as exc:
        print(f"softneat {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
