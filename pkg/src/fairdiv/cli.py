"""Command-line entry points.

Exit codes: 0 success, 1 cross-check mismatch, 2 configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .assignment import greedy_assignment, ode_z
from .distributions import parse_distribution
from .harness import (
    ALLOCATORS,
    ConfigError,
    parse_config,
    run_experiment,
    write_csv,
)
from .matching import WeightedAssignmentProblem, max_weight_assignment
from .model import allocation_to_dict, fairness_report, report_to_dict, sample_instance, sample_profile
from .oracle import brute_max_weight, exists_ef_assignment_bruteforce
from .rng import RngStream, derive_seed


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairdiv")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment from a JSON config")
    run.add_argument("--config", required=True, help="JSON config file")
    run.add_argument("--experiment", help="override the preset name")
    run.add_argument("--trials", type=int, help="override the trial count")
    run.add_argument("--seed", type=int, help="override master_seed")
    run.add_argument("--threads", type=int, help="override worker thread count")
    run.add_argument("--out", help="override out_path (default: stdout)")

    alloc = sub.add_parser("alloc", help="allocate one sampled instance, print JSON")
    alloc.add_argument("--n", type=int, required=True)
    alloc.add_argument("--m", type=int, required=True)
    alloc.add_argument("--dist", default="uniform")
    alloc.add_argument("--algo", default="efx-auto", choices=sorted(ALLOCATORS))
    alloc.add_argument("--seed", type=int, required=True)

    ode = sub.add_parser("ode", help="tabulate the fluid-limit curve")
    ode.add_argument("--points", type=int, required=True)

    oracle = sub.add_parser("oracle", help="cross-validate fast paths against brute force")
    oracle.add_argument("--suite", default="tiny", choices=["tiny"])
    oracle.add_argument("--trials", type=int, default=1000)
    return parser


def _cmd_run(args) -> int:
    overrides = {
        "experiment": args.experiment,
        "trials": args.trials,
        "master_seed": args.seed,
        "threads": args.threads,
        "out_path": args.out,
    }
    cfg = parse_config(args.config, overrides)
    rows = run_experiment(cfg)
    text = write_csv(rows, cfg.out_path)
    if cfg.out_path is None:
        sys.stdout.write(text)
    return 0


def _cmd_alloc(args) -> int:
    if args.n < 1 or args.m < 1:
        raise ConfigError("n", "need n >= 1 and m >= 1")
    try:
        dist = parse_distribution(args.dist)
    except ValueError as e:
        raise ConfigError("dist", str(e)) from e
    rng = RngStream(args.seed)
    inst = sample_instance(args.n, args.m, dist, rng)
    try:
        result = ALLOCATORS[args.algo](inst, dist.alpha)
    except ValueError as e:
        raise ConfigError("algo", f"{args.algo} rejected n={args.n}, m={args.m}: {e}") from e
    doc = {
        "n": args.n,
        "m": args.m,
        "distribution": args.dist,
        "algorithm": result.algorithm_tag,
        "seed": args.seed,
        "fallback_used": result.fallback_used,
        "allocation": None,
        "fairness": None,
    }
    if result.allocation is not None:
        doc["allocation"] = allocation_to_dict(result.allocation)
        doc["fairness"] = report_to_dict(fairness_report(inst, result.allocation))
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_ode(args) -> int:
    if args.points < 1:
        raise ConfigError("points", "need at least one point")
    s = np.linspace(0.0, 1.0, args.points, endpoint=False)
    z = np.atleast_1d(ode_z(s))
    y = z * np.log(1.0 / (2.0 * z))
    sys.stdout.write("s\tz\ty\n")
    for row in zip(s, z, y):
        sys.stdout.write("\t".join(f"{v:.12g}" for v in row) + "\n")
    return 0


def _cmd_oracle(args) -> int:
    if args.trials < 1:
        raise ConfigError("trials", "need at least one trial")
    failures = 0

    greedy_ok = 0
    for k in range(args.trials):
        rng = RngStream(derive_seed(0xFA1D, 0, k))
        n = 1 + rng.next_uint64() % 4
        m = n + rng.next_uint64() % (8 - n)
        profile = sample_profile(int(n), int(m), rng)
        fast = greedy_assignment(profile)[0] is not None
        slow = exists_ef_assignment_bruteforce(profile)[0]
        greedy_ok += fast == slow
    failures += args.trials - greedy_ok
    print(f"greedy-vs-bruteforce: {greedy_ok}/{args.trials} agree")

    weight_ok = 0
    for k in range(args.trials):
        rng = RngStream(derive_seed(0xFA1D, 1, k))
        w = rng.uniforms(5 * 6).reshape(5, 6)
        allowed = rng.uniforms(5 * 6).reshape(5, 6) < 0.8
        problem = WeightedAssignmentProblem(w, allowed)
        fast = max_weight_assignment(problem)
        slow = brute_max_weight(problem)
        if (fast is None) == (slow is None) and (
            fast is None or abs(fast[1] - slow[1]) <= 1e-12
        ):
            weight_ok += 1
    failures += args.trials - weight_ok
    print(f"assignment-vs-bruteforce: {weight_ok}/{args.trials} agree")

    return 1 if failures else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "alloc":
            return _cmd_alloc(args)
        if args.command == "ode":
            return _cmd_ode(args)
        return _cmd_oracle(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
