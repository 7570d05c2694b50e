"""Command-line entry point for config-driven experiments."""

import argparse
import json
import sys

from .config import ConfigError, ExperimentConfig
from .runner import provision_kappa, run_experiment, sweep


def _add_common(parser):
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--samples", type=int, help="override n_samples")
    parser.add_argument("--steps", type=int, help="override n_steps")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--dump-paths", action="store_true",
                        help="also write a binary dump of sample paths")
    parser.add_argument("--workers", type=int, help="worker-pool size "
                        "(default: HARNACK_LAB_THREADS or cpu count)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="harnack-lab",
        description="Simulate couplings for singular-drift SDEs and verify "
                    "Harnack-type inequalities with explicit constants.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("run", "run hypotheses, kappa provisioning and every configured check"),
        ("hypotheses", "evaluate the drift/diffusion hypothesis report only"),
        ("estimate-kappa", "estimate the Krylov constant and print it"),
        ("verify", "run a single named check from the config"),
        ("sweep", "sweep one parameter across a grid of values"),
    ):
        p = sub.add_parser(name, help=desc)
        _add_common(p)
        if name == "verify":
            p.add_argument("check_name", help="check name as in the config")
        if name == "sweep":
            p.add_argument("--parameter", required=True,
                           choices=["displacement", "p", "T"])
            p.add_argument("--values", required=True,
                           help="comma-separated grid of values")
    return parser


def _load(args):
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
        config.raw["seed"] = args.seed
    if args.samples is not None:
        config.n_samples = args.samples
        config.raw["n_samples"] = args.samples
    if args.steps is not None:
        config.n_steps = args.steps
        config.raw["n_steps"] = args.steps
    if args.out is not None:
        config.out_dir = args.out
    if args.dump_paths:
        config.dump_paths = True
    return config


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "run":
            status, _ = run_experiment(config, workers=args.workers)
            return status
        if args.command == "hypotheses":
            from .model import check_hypotheses
            import numpy as np

            report = check_hypotheses(
                config.drift, config.diffusion, config.T,
                [np.full(config.drift.dim_d, v) for v in (0.05, 0.1, 0.2, 0.5)],
            )
            from .runner import _hypotheses_dict

            print(json.dumps(_hypotheses_dict(report), sort_keys=True, indent=2))
            return 0
        if args.command == "estimate-kappa":
            kappa, source = provision_kappa(config)
            print(json.dumps({"kappa": kappa, "source": source}))
            return 0
        if args.command == "verify":
            wanted = [c for c in config.checks if c["check"] == args.check_name]
            if not wanted:
                print(f"error: no configured check named {args.check_name!r}",
                      file=sys.stderr)
                return 2
            config.checks = wanted
            status, report = run_experiment(config, workers=args.workers)
            print(json.dumps(report["checks"], sort_keys=True, indent=2))
            return status
        if args.command == "sweep":
            values = [float(v) for v in args.values.split(",") if v]
            csv_path, svg_path = sweep(config, args.parameter, values,
                                       workers=args.workers)
            print(csv_path)
            print(svg_path)
            return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
