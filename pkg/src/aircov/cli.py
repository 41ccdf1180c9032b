"""Command-line front end for the experiment harness."""

import argparse
import os
import sys
from dataclasses import replace

from . import harness, model
from .baselines import Scheme, brute_force_scalar
from .covertness import covert_roots
from .solver import run as solve_run


def _cmd_run(args):
    if args.preset:
        spec = harness.preset(args.preset, trials=args.trials,
                              seed=args.seed,
                              schemes=args.schemes,
                              output_dir=args.out or "results")
    elif args.config:
        spec = harness.load_spec(args.config)
        if args.trials is not None:
            spec = replace(spec, trials=args.trials)
        if args.seed is not None:
            spec = replace(
                spec, base=replace(spec.base, seed=args.seed))
        if args.schemes is not None:
            spec = replace(spec, schemes=tuple(args.schemes))
        if args.out:
            spec = replace(spec, output_dir=args.out)
    else:
        raise ValueError("run needs --preset or --config")

    out_dir = os.environ.get("AIRCOV_OUTPUT_DIR", spec.output_dir)
    os.makedirs(out_dir, exist_ok=True)
    records = harness.run_experiment(spec, workers=args.workers)
    name = args.preset or "experiment"
    path = os.path.join(out_dir, f"{name}_records.csv")
    harness.write_csv(records, path)
    print(f"wrote {len(records)} records to {path}")
    for (value, scheme), s in sorted(harness.summarize(records).items()):
        print(f"  {spec.sweep_name}={value:g} {scheme:>10}: "
              f"{s.mean:.4f} +/- {s.stderr:.4f}  (n={s.n})")
    return 0


def _cmd_roots(args):
    b = covert_roots(args.epsilon)
    print(f"epsilon     {b.epsilon:.6g}")
    print(f"x1          {b.x1:.12g}")
    print(f"x2          {b.x2:.12g}")
    print(f"cap factor  {b.cap_factor:.12g}")
    return 0


def _cmd_oracle(args):
    cfg = model.SystemConfig(n_s=1, n_t=1, n_r=1, k=1, p_sensor=10.0,
                             p_ap=1000.0, seed=args.seed)
    worst = 0.0
    for t in range(args.trials):
        ch = model.sample_channels(cfg, t)
        ref, w, v = brute_force_scalar(ch, cfg)
        got = solve_run(ch, cfg).mse
        rel = abs(got - ref) / max(ref, 1e-12)
        worst = max(worst, rel)
        print(f"trial {t}: search {ref:.6f} (|w|={w:.4f} |v|={v:.4f})  "
              f"solver {got:.6f}  rel {rel:.2e}")
    print(f"worst relative difference: {worst:.2e}")
    return 0 if worst <= 0.02 else 1


def _schemes(text):
    return [Scheme(s.strip()) for s in text.split(",") if s.strip()]


def main(argv=None):
    ap = argparse.ArgumentParser(prog="aircov")
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a Monte-Carlo sweep")
    runp.add_argument("--config", help="JSON experiment description")
    runp.add_argument("--out", help="output directory")
    runp.add_argument("--seed", type=int)
    runp.add_argument("--trials", type=int)
    runp.add_argument("--schemes", type=_schemes)
    runp.add_argument("--preset", choices=("fig1", "fig2", "fig3", "fig4"))
    runp.add_argument("--workers", type=int, default=1)
    runp.set_defaults(func=_cmd_run)

    rootsp = sub.add_parser("roots", help="covertness equation roots")
    rootsp.add_argument("--epsilon", type=float, required=True)
    rootsp.set_defaults(func=_cmd_roots)

    orp = sub.add_parser("oracle",
                         help="scalar brute-force search vs the solver")
    orp.add_argument("--seed", type=int, default=0)
    orp.add_argument("--trials", type=int, default=5)
    orp.set_defaults(func=_cmd_oracle)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:          # fatal errors exit nonzero
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
