"""``psidel-lab`` command line: ``run --config <path>`` and ``list``."""
from __future__ import annotations

import argparse
import sys

from .experiments import ConfigError, list_experiments, load_config, run


def _parser():
    ap = argparse.ArgumentParser(prog="psidel-lab",
                                 description="Verification experiments for Bernstein functions of the Laplacian.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("--config", required=True, help="path to the JSON configuration")
    r.add_argument("--seed", type=int, default=None, help="override the configured seed")
    r.add_argument("--out", default=None, help="output directory (overrides the config)")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for Monte Carlo (never changes results)")
    sub.add_parser("list", help="list the experiments")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "list":
        for line in list_experiments():
            print(line)
        return 0
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    rep = run(cfg, jobs=args.jobs)
    for c in rep.criteria:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}  ({c.anchor})")
    print(f"{rep.experiment}: {'passed' if rep.passed else 'FAILED'} in {rep.wall_clock:.1f}s -> {cfg['out']}")
    if not rep.passed:
        print("failing criteria: " + "; ".join(rep.failed), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
