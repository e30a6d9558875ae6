"""Run orchestration, CSV logs and the summary report.

Layout of an output directory::

    <out>/<variant-slug>/rho=<rho>/seed=<seed>/
        config.toml         resolved single-run config (re-runnable as is)
        steps.csv           one row per pre-training step
        evals.csv           one row per fine-tune evaluation
        snapshot.json       exploiter snapshot used for fine-tuning
        final_snapshot.json exploiter at the end of pre-training
        summary.json        written last; marks the run complete
    <out>/report/
        summary.csv         one row per completed run
        curves.csv          per-variant mean/std eval curve at the best rho
        ranking.txt         variants ordered by final-window mean return

CSV schema version 1. ``steps.csv`` columns are ``STEP_COLUMNS``;
``evals.csv`` columns are ``step,mean_return,std``. Floats are written with
``repr`` so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import RunConfig, dump_config, load_echo
from .envs import make_env
from .pipeline import LOG_COLUMNS, BaselineKind, finetune, pretrain, run_baseline
from .snapshot import save

__all__ = ["CSV_SCHEMA_VERSION", "RunSpec", "STEP_COLUMNS", "execute", "expand", "report", "run_dir", "slug"]

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
STEP_COLUMNS = LOG_COLUMNS
EVAL_COLUMNS = ("step", "mean_return", "std")


@dataclass(frozen=True)
class RunSpec:
    variant: str
    rho: float | None
    seed: int
    cfg: RunConfig


def slug(variant: str) -> str:
    return variant.replace("^", "-").replace("*", "star")


def run_dir(out: Path, spec: RunSpec) -> Path:
    rho = "none" if spec.rho is None else repr(spec.rho)
    return Path(out) / slug(spec.variant) / f"rho={rho}" / f"seed={spec.seed}"


def expand(cfg: RunConfig, first_only: bool = False) -> list[RunSpec]:
    """Cartesian product of variants, rhos and seeds (baselines ignore rho)."""
    specs = []
    variants = cfg.variants[:1] if first_only else cfg.variants
    rhos = cfg.rhos[:1] if first_only else cfg.rhos
    seeds = cfg.seeds[:1] if first_only else cfg.seeds
    for v in variants:
        is_base = v in BaselineKind.ALIASES
        for rho in ([None] if is_base else rhos):
            for seed in seeds:
                single = replace(cfg, variants=(v,), rhos=(rho,) if rho is not None else cfg.rhos[:1],
                                 seeds=(seed,))
                specs.append(RunSpec(v, rho, seed, single))
    return specs


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def execute(spec: RunSpec, out: Path) -> dict:
    """Run one (variant, rho, seed); returns its summary."""
    cfg = spec.cfg
    d = run_dir(out, spec)
    d.mkdir(parents=True, exist_ok=True)
    (d / "summary.json").unlink(missing_ok=True)
    (d / "config.toml").write_text(dump_config(cfg))
    e = cfg.env
    env = make_env(e.kind, e.layout, e.horizon or None, e.task)

    if spec.variant in BaselineKind.ALIASES:
        result = run_baseline(spec.variant, env, cfg.pretrain.total_steps, spec.seed, cfg.pretrain,
                              num_skills=cfg.num_skills)
    else:
        result = pretrain(spec.variant, env, spec.rho, spec.seed, cfg.pretrain)
    logs = result.log
    _write_csv(d / "steps.csv", STEP_COLUMNS, zip(*(logs[c] for c in STEP_COLUMNS)))
    snapshot = result.snapshot or result.final_snapshot
    save(snapshot, d / "snapshot.json")
    save(result.final_snapshot, d / "final_snapshot.json")

    curve = []
    if cfg.finetune_enabled:
        ft = finetune(snapshot, env, cfg.finetune, spec.seed)
        curve = ft.curve
    _write_csv(d / "evals.csv", EVAL_COLUMNS, curve)

    window = cfg.finetune.final_window
    final = float(np.mean([c[1] for c in curve[-window:]])) if curve else float("nan")
    stats = {k: v for k, v in result.stats.items() if isinstance(v, (int, float))}
    summary = {"variant": spec.variant, "rho": spec.rho, "seed": spec.seed, "steps": len(logs["step"]),
               "final_return": final, "schema_version": CSV_SCHEMA_VERSION, **stats}
    (d / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    return summary


def _execute_star(args):
    return execute(*args)


def execute_all(specs: list[RunSpec], out: Path, workers: int = 1) -> list[dict]:
    jobs = [(s, Path(out)) for s in specs]
    if workers <= 1 or len(jobs) <= 1:
        return [execute(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute_star, jobs))


def rerun_from_echo(run_path: Path, out: Path) -> dict:
    """Re-execute a run from its config echo into ``out``."""
    cfg = load_echo((Path(run_path) / "config.toml").read_text())
    spec = expand(cfg, first_only=True)[0]
    return execute(spec, out)


# ----------------------------------------------------------------------------- report

def _read_evals(path: Path) -> list[tuple[int, float, float]]:
    with path.open() as f:
        return [(int(r["step"]), float(r["mean_return"]), float(r["std"])) for r in csv.DictReader(f)]


def _scan(root: Path):
    complete, incomplete = [], []
    for cfg_path in sorted(root.rglob("config.toml")):
        d = cfg_path.parent
        if d.parent.name == "report":
            continue
        summary = d / "summary.json"
        if not summary.is_file() or not (d / "evals.csv").is_file():
            incomplete.append(d)
            continue
        s = json.loads(summary.read_text())
        s["curve"] = _read_evals(d / "evals.csv")
        s["dir"] = d
        complete.append(s)
    return complete, incomplete


def _sample_std(x) -> float:
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


def _final(run: dict, window: int) -> float:
    pts = [c[1] for c in run["curve"][-window:]]
    return float(np.mean(pts)) if pts else float("nan")


def report(root, final_window: int = 5) -> dict:
    """Aggregate every completed run under ``root`` into ``root/report``.

    For each variant the best rho is the one with the highest mean (over
    seeds) final-window return; its eval curve is averaged point-wise over
    seeds with the sample standard deviation. The ranking orders variants by
    that best mean, descending, ties broken by name.
    """
    root = Path(root)
    runs, incomplete = _scan(root)
    for d in incomplete:
        log.warning("skipping incomplete run %s", d)
    if not runs:
        raise FileNotFoundError(f"no completed runs under {root}")

    by_variant: dict[str, dict] = {}
    for r in runs:
        by_variant.setdefault(r["variant"], {}).setdefault(r["rho"], []).append(r)

    table, curves = [], []
    for variant in sorted(by_variant):
        best_rho, best_score, best_runs = None, -math.inf, None
        for rho, group in sorted(by_variant[variant].items(), key=lambda kv: (kv[0] is None, kv[0] or 0)):
            finals = [_final(r, final_window) for r in group]
            score = float(np.mean(finals)) if not any(map(math.isnan, finals)) else -math.inf
            if best_runs is None or score > best_score:
                best_rho, best_score, best_runs = rho, score, group
        finals = [_final(r, final_window) for r in best_runs]
        table.append({"variant": variant, "best_rho": best_rho, "seeds": len(best_runs),
                      "final_mean": float(np.mean(finals)), "final_std": _sample_std(finals),
                      "coverage_mean": float(np.mean([r.get("coverage", float("nan")) for r in best_runs]))})
        steps = sorted({c[0] for r in best_runs for c in r["curve"]})
        for step in steps:
            vals = [c[1] for r in best_runs for c in r["curve"] if c[0] == step]
            curves.append((variant, best_rho, step, float(np.mean(vals)), _sample_std(vals), len(vals)))

    ranking = sorted(table, key=lambda row: (-_key(row["final_mean"]), row["variant"]))
    out = root / "report"
    out.mkdir(exist_ok=True)
    _write_csv(out / "summary.csv", ("variant", "rho", "seed", "steps", "coverage", "final_return"),
               [(r["variant"], r["rho"], r["seed"], r["steps"], r.get("coverage"), r["final_return"])
                for r in sorted(runs, key=lambda r: (r["variant"], str(r["rho"]), r["seed"]))])
    _write_csv(out / "curves.csv", ("variant", "rho", "step", "mean_return", "std", "n"), curves)
    lines = [f"{'rank':>4}  {'variant':<24} {'best_rho':>9} {'seeds':>5} {'final_mean':>11} {'final_std':>10}"]
    for i, row in enumerate(ranking, 1):
        rho = "-" if row["best_rho"] is None else f"{row['best_rho']:g}"
        lines.append(f"{i:>4}  {row['variant']:<24} {rho:>9} {row['seeds']:>5} "
                     f"{row['final_mean']:>11.4f} {row['final_std']:>10.4f}")
    if incomplete:
        lines.append("")
        lines.append("skipped incomplete runs:")
        lines.extend(f"  {d.relative_to(root)}" for d in incomplete)
    (out / "ranking.txt").write_text("\n".join(lines) + "\n")
    return {"ranking": ranking, "curves": curves, "incomplete": incomplete, "runs": len(runs)}


def _key(x: float) -> float:
    return -math.inf if math.isnan(x) else x
