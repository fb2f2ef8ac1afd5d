"""Command-line entry point: ``bench <experiment> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .config import load_config
from .results import emit_results
from .runner import run_experiment

log = logging.getLogger("gpssm.bench")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bench", description="Run an online GP state-space learning experiment.")
    p.add_argument("experiment", choices=["kink", "tvparam", "custom"])
    p.add_argument("--matcher", choices=["ekf", "ukf", "adf"])
    p.add_argument("--noise", type=float, nargs="+", help="measurement noise variance(s)")
    p.add_argument("--seeds", type=int, help="number of seeds")
    p.add_argument("--budget", type=int, help="inducing-point budget")
    p.add_argument("--horizon", type=int, help="number of measurements")
    p.add_argument("--eps-tol", type=float, dest="eps_tol")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--config", type=Path, help="YAML or JSON config file")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _summary(results) -> str:
    groups = defaultdict(list)
    for res in results:
        if res.ok:
            for j, value in enumerate(res.primary_nmse()):
                groups[(res.noise, j)].append(value)
    lines = [f"{'noise':>8} {'out':>3} {'median nMSE':>12} {'runs':>4}"]
    for (noise, j), values in sorted(groups.items()):
        lines.append(f"{noise:8.4g} {j:3d} {np.median(values):12.4g} {len(values):4d}")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    base = args.config if args.config is not None else {}
    try:
        cfg = load_config(
            base,
            experiment=args.experiment,
            matcher=args.matcher,
            noise=args.noise,
            seeds=args.seeds,
            budget=args.budget,
            horizon=args.horizon,
            eps_tol=args.eps_tol,
            workers=args.workers,
        )
    except ConfigError as exc:
        print(f"bench: invalid config: {exc}", file=sys.stderr)
        return 2

    results = run_experiment(cfg)
    paths = emit_results(results, cfg, args.out)
    print(_summary(results))
    print(f"results written to {paths['csv'].parent}")
    failed = [r for r in results if not r.ok]
    for r in failed:
        print(f"seed {r.seed} (noise {r.noise:g}) failed: {r.failure}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
