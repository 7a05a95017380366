"""Command-line front end.

Exit status: 0 all checks passed, 1 at least one check failed,
2 usage or configuration error.
"""

import argparse
import sys
from dataclasses import replace

from .config import ExperimentConfig, load_config
from .errors import ConfigError, ValidationError
from .experiments import run_experiment

SUBCOMMANDS = {
    "simulate": "simulate",
    "blowup": "blowup_criterion",
    "decay": "small_data_decay",
    "kernel": "kernel_constants",
    "lplq": "lp_lq_suite",
    "sweep-theta": "theta_sweep",
    "scaling": "scaling_check",
    "verify": "verify",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nlheat",
        description="Experiment suites for the mean-conserving semilinear heat flow",
    )
    parser.add_argument("--config", metavar="PATH", help="sectioned key-value config file")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    parser.add_argument("--jobs", type=int, default=None, metavar="N", help="parallel workers for independent checks")
    parser.add_argument("--seed", type=int, default=None, metavar="U64", help="base seed (overrides config)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="|".join(SUBCOMMANDS))
    for name in SUBCOMMANDS:
        sub.add_parser(name)
    return parser


def _config_for(args):
    kind = SUBCOMMANDS[args.command]
    if args.config:
        cfg = load_config(args.config)
        if cfg.kind != kind:
            raise ValidationError(f"config kind {cfg.kind!r} does not match subcommand {args.command!r}")
    else:
        cfg = ExperimentConfig(kind=kind)
    updates = {}
    if args.out:
        updates["output_dir"] = args.out
    if args.seed is not None:
        updates["seeds"] = tuple(args.seed + i for i in range(len(cfg.seeds)))
    if args.jobs is not None:
        updates["jobs"] = args.jobs
    return replace(cfg, **updates) if updates else cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_for(args)
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(report.render())
    if args.command == "kernel":
        import os

        path = os.path.join(cfg.output_dir, "kernel_constants.txt")
        with open(path) as fh:
            sys.stdout.write(fh.read())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
