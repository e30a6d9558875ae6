"""Command line entry point: ``python -m nmps`` or ``nmps``.

::

    nmps list-variants
    nmps run   [--config FILE] [--variant V] [--rho R] [--seed S] [--steps N] [--env E] [--out DIR]
    nmps sweep  --config FILE  [same overrides] [--workers W]
    nmps report --in DIR

``run`` executes one (variant, rho, seed): the first entry of each list in
the config unless overridden. ``sweep`` executes the full product of
variants x rhos x seeds. Both finish by writing the report for ``--out``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, EnvConfig, RunConfig, load_config
from .harness import execute_all, expand, report
from .variants import BASELINES, VARIANT_NAMES

__all__ = ["build_parser", "main"]

ENV_CHOICES = {
    "fourrooms": ("fourrooms", "classic"),
    "fourrooms-open": ("fourrooms", "open"),
    "pointmass": ("pointmass", "classic"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nmps", description="Non-monolithic exploration pre-training experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list-variants", help="print the variant and baseline names")

    def overrides(sp):
        sp.add_argument("--variant", action="append", help="variant or baseline name (repeatable)")
        sp.add_argument("--rho", type=float, action="append", help="homeostasis target rate (repeatable)")
        sp.add_argument("--seed", type=int, action="append", help="seed (repeatable)")
        sp.add_argument("--steps", type=int, help="pre-training steps")
        sp.add_argument("--env", choices=sorted(ENV_CHOICES))
        sp.add_argument("--out", help="output directory (default: config 'out', $NMPS_OUT, ./runs)")
        sp.add_argument("-v", "--verbose", action="store_true")

    run = sub.add_parser("run", help="execute a single run")
    run.add_argument("--config", type=Path)
    overrides(run)
    sweep = sub.add_parser("sweep", help="execute every (variant, rho, seed) combination")
    sweep.add_argument("--config", type=Path, required=True)
    sweep.add_argument("--workers", type=int, default=1)
    overrides(sweep)
    rep = sub.add_parser("report", help="summarise a directory of runs")
    rep.add_argument("--in", dest="indir", type=Path, required=True)
    return p


def _apply(cfg: RunConfig, args) -> RunConfig:
    if args.variant:
        cfg = replace(cfg, variants=tuple(args.variant))
    if args.rho:
        cfg = replace(cfg, rhos=tuple(args.rho))
    if args.seed:
        cfg = replace(cfg, seeds=tuple(args.seed))
    if args.steps is not None:
        cfg = replace(cfg, pretrain=replace(cfg.pretrain, total_steps=args.steps))
    if args.env:
        kind, layout = ENV_CHOICES[args.env]
        cfg = replace(cfg, env=replace(cfg.env, kind=kind, layout=layout))
    if args.out:
        cfg = replace(cfg, out=args.out)
    # re-validate the merged result
    from .config import dump_config, load_echo
    return load_echo(dump_config(cfg))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-variants":
        for name in VARIANT_NAMES + BASELINES:
            print(name)
        return 0
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            res = report(args.indir)
            print((args.indir / "report" / "ranking.txt").read_text(), end="")
            return 0 if res["runs"] else 1
        cfg = load_config(args.config) if args.config else RunConfig(env=EnvConfig())
        cfg = _apply(cfg, args)
        specs = expand(cfg, first_only=args.command == "run")
        out = cfg.out_dir
        workers = getattr(args, "workers", 1)
        for summary in execute_all(specs, out, workers):
            print(f"done {summary['variant']} rho={summary['rho']} seed={summary['seed']} "
                  f"steps={summary['steps']} final_return={summary['final_return']:.4f}")
        res = report(out, cfg.finetune.final_window)
        print((out / "report" / "ranking.txt").read_text(), end="")
        return 0
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, FloatingPointError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
