"""Command-line entry point: ``gtn {run, check, equiv, compress, synth}``."""

import argparse
import json
import os
import sys
import time

from gtn.tt import TensorizationPlan, compression, dense_param_count, tt_param_count_for


def _ints(text):
    return [int(v) for v in text.replace("x", ",").split(",") if v.strip()]


def cmd_compress(args):
    rows = _ints(args.plan)
    cols = _ints(args.col_plan) if args.col_plan else rows
    plan = TensorizationPlan(args.rows, args.cols, rows, cols)
    ranks = _ints(args.ranks)
    if len(ranks) == 1:
        ranks = [1] + ranks * (plan.order - 1) + [1]
    elif len(ranks) == plan.order - 1:
        ranks = [1] + ranks + [1]
    dense = dense_param_count(plan)
    tt = tt_param_count_for(plan, ranks)
    print(f"dense={dense:,}")
    print(f"TT={tt:,}")
    print(f"compression={100 * compression(plan, ranks):.2f}%")
    return 0


def cmd_equiv(args):
    from gtn.equivalence import run_equivalence_suite

    start = time.perf_counter()
    results = run_equivalence_suite(seed=args.seed)
    for r in results:
        print(r.line())
    print(f"elapsed {time.perf_counter() - start:.2f}s")
    return 0 if all(r.passed for r in results) else 1


def cmd_check(args):
    if not args.grad:
        print("nothing to check; pass --grad", file=sys.stderr)
        return 2
    from gtn.harness.checks import gradient_suite

    ok = True
    worst = 0.0
    for label, report in gradient_suite(seed=args.seed, h=args.h, tolerance=args.tol):
        ok &= report.passed
        worst = max(worst, report.max_rel_error)
        print(f"[{label}]")
        for line in report.lines():
            print("  " + line)
    print(f"overall max rel error {worst:.3e}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_run(args):
    from gtn.harness.config import ExperimentConfig
    from gtn.harness.runner import format_table, run_experiment

    config = ExperimentConfig.from_json(args.config)
    families = args.families.split(",") if args.families else [config.family]
    reports = [run_experiment(config, family) for family in families]
    print(format_table(reports))
    if args.out:
        payload = [r.to_dict() for r in reports]
        with open(args.out, "w") as fh:
            json.dump(payload if len(payload) > 1 else payload[0], fh, indent=2)
    return 0


def cmd_synth(args):
    from gtn.harness.config import synthetic_spec_from_json
    from gtn.harness.data import write_data_tensor, write_grid
    from gtn.harness.synth import synth_generate

    import numpy as np

    spec = synthetic_spec_from_json(args.spec)
    d = synth_generate(spec)
    os.makedirs(args.out, exist_ok=True)
    x = np.concatenate([d.train_x, d.test_x])
    t = np.concatenate([d.train_t, d.test_t])
    write_data_tensor(os.path.join(args.out, "inputs.csv"), x)
    write_grid(os.path.join(args.out, "targets.csv"), t)
    write_grid(os.path.join(args.out, "adjacency.csv"), d.adjacency)
    meta = {
        "time_steps": spec.time_steps,
        "nodes": spec.nodes,
        "features": spec.features,
        "samples": int(x.shape[0]),
        "train_samples": int(d.train_x.shape[0]),
    }
    with open(os.path.join(args.out, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    print(f"wrote {x.shape[0]} samples of shape {x.shape[1:]} to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="gtn", description="Graph tensor network toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train and evaluate from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--families", help="comma-separated families to run instead of config.family")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="finite-difference gradient checks")
    p.add_argument("--grad", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("equiv", help="classical-layer equivalence checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("compress", help="dense vs TT parameter counts")
    p.add_argument("--rows", type=int, required=True, help="K, output size")
    p.add_argument("--cols", type=int, required=True, help="J, input size")
    p.add_argument("--plan", required=True, help="row factors, e.g. 2,2,2,2")
    p.add_argument("--col-plan", help="column factors; defaults to --plan")
    p.add_argument("--ranks", required=True, help="one rank for every bond, or the internal ranks")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"gtn {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
