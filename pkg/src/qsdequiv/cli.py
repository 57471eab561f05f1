"""Command-line entry point: ``qsdequiv --config run.yaml [overrides]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, parse_config, with_overrides
from .experiment import EXIT_CONFIG, EXIT_IO, run_experiment_safe


def build_parser():
    p = argparse.ArgumentParser(prog="qsdequiv", description=__doc__)
    p.add_argument("--config", required=True, help="YAML experiment file")
    p.add_argument("--seed", type=int, help="override base_seed")
    p.add_argument("--ntraj", type=int, help="override n_traj")
    p.add_argument("--out", help="override output_path (directory)")
    p.add_argument("--mode", help="override mode")
    p.add_argument("--dump-paths", action="store_true", help="write per-trajectory noise increments")
    p.add_argument("--dump-states", action="store_true", help="write per-trajectory state amplitudes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = with_overrides(parse_config(text), base_seed=args.seed, n_traj=args.ntraj,
                             output_path=args.out, mode=args.mode)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run_experiment_safe(cfg, dump_paths=args.dump_paths, dump_states=args.dump_states)
    for path in result.files[:1]:
        print(path)
    if "error" in result.summary:
        print(f"error: {result.summary['error']}", file=sys.stderr)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
