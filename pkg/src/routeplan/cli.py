"""Command line entry point: ``routeplan {plan,sweep,check} CONFIG``.

Exit status: 0 success, 1 configuration or validation error, 2 no feasible
plan (``plan``) or no retained setup (``sweep``).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import PlannerConfig, load_config
from .errors import PlannerError
from .latency import load_profiles, model_loads
from .routing import RoutingContext
from .setup_search import (
    SearchContext,
    ffd_place,
    load_memory_table,
    retained_setups,
    select_setup,
    shard_memory_list,
    write_sweep_csv,
)
from .workload import ScoreMatrix, load_scores, synth_scores

log = logging.getLogger("routeplan")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2
PLAN_FILE, SWEEP_FILE, CHECK_FILE = "plan.json", "sweep.csv", "check.json"


def load_workload(cfg: PlannerConfig) -> ScoreMatrix:
    if cfg.scores_path is not None:
        return load_scores(cfg.scores_path, cfg.models)
    syn = cfg.synthetic
    shapes = [syn["beta_shapes"][m] for m in cfg.models]
    return synth_scores(int(syn["n_prompts"]), shapes, cfg.seed, models=cfg.models)


def build_context(cfg: PlannerConfig) -> SearchContext:
    scores = load_workload(cfg)
    lib = load_profiles(cfg.profiles_path)
    mem = load_memory_table(cfg.memory_path)
    routing = RoutingContext(scores, lib, cfg.arrival_rate, cfg.latency_target, cfg.metric,
                             float(cfg.optimizer["kappa"]))
    return SearchContext(cfg.gpu_count, cfg.rho_min, mem, routing)


def _num(x):
    return None if x is None or not np.isfinite(x) else float(x)


def plan_document(cfg: PlannerConfig, ctx: SearchContext, plan) -> dict:
    doc = {
        "status": "FEASIBLE" if plan.feasible else "INFEASIBLE",
        "gpu_count": cfg.gpu_count,
        "arrival_rate_rps": cfg.arrival_rate,
        "latency_target_ms": cfg.latency_target,
        "metric": cfg.metric,
        "rho_min": cfg.rho_min,
        "seed": cfg.seed,
        "enumerated_count": plan.enumerated_count,
        "retained_count": plan.retained_count,
        "evaluated_count": plan.evaluated_count,
        "reject_counts": plan.reject_counts,
    }
    if not plan.feasible:
        return doc
    shards = shard_memory_list(plan.setup, ctx.mem)
    placement = ffd_place(shards, ctx.n_gpus)
    gpus_of = {m: [] for m in plan.setup.models}
    for g, members in enumerate(placement):
        for k in members:
            gpus_of[shards[k][0]].append(g)
    loads = model_loads(plan.w, cfg.arrival_rate)
    doc.update({
        "setup": [
            {"model": ms.model, "tp": ms.tp, "rho": ms.rho,
             "mem_fraction": ctx.mem[(ms.model, ms.tp)], "gpus": sorted(gpus_of[ms.model])}
            for ms in plan.setup
        ],
        "routing_fractions": {m: float(v) for m, v in zip(plan.setup.models, plan.w)},
        "beta": _num(plan.beta),
        "score": _num(plan.score),
        "latency_ms": _num(plan.latency),
        "model_loads_rps": {m: float(v) for m, v in zip(plan.setup.models, loads)},
        "out_of_range": {m: bool(v) for m, v in zip(plan.setup.models, plan.out_of_range)},
    })
    return doc


def _prepare(config_path, out_dir, parallelism, seed):
    cfg = load_config(config_path, seed=seed, parallelism=parallelism)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _workers(cfg: PlannerConfig) -> int:
    return int(cfg.parallelism) if cfg.parallelism else (os.cpu_count() or 1)


def run_plan(config_path, out_dir=".", parallelism=None, seed=None) -> int:
    try:
        cfg, out = _prepare(config_path, out_dir, parallelism, seed)
        ctx = build_context(cfg)
        plan, _ = select_setup(cfg.space, ctx, cfg.beta_params(), parallelism=_workers(cfg))
    except PlannerError as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    doc = plan_document(cfg, ctx, plan)
    path = out / PLAN_FILE
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    log.info("%s: %s, %d/%d setups retained", path, doc["status"], plan.retained_count, plan.enumerated_count)
    return EXIT_OK if plan.feasible else EXIT_INFEASIBLE


def run_sweep(config_path, out_dir=".", parallelism=None, seed=None) -> int:
    try:
        cfg, out = _prepare(config_path, out_dir, parallelism, seed)
        ctx = build_context(cfg)
        plan, records = select_setup(cfg.space, ctx, cfg.beta_params(), parallelism=_workers(cfg))
    except PlannerError as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    path = out / SWEEP_FILE
    write_sweep_csv(records, cfg.models, path)
    log.info("%s: %d retained setups, %d feasible", path, len(records), sum(r.feasible for r in records))
    return EXIT_OK if records else EXIT_INFEASIBLE


def run_check(config_path, out_dir=".", parallelism=None, seed=None) -> int:
    """Validate config, profiles, memory table and scores without optimising."""
    report: dict = {"config": str(config_path), "errors": []}
    errors = report["errors"]
    try:
        cfg, out = _prepare(config_path, out_dir, parallelism, seed)
    except PlannerError as exc:
        log.error("%s", exc)
        return EXIT_ERROR

    lib = mem = None
    for label, loader in (("profiles", lambda: load_profiles(cfg.profiles_path)),
                          ("memory", lambda: load_memory_table(cfg.memory_path))):
        try:
            value = loader()
        except PlannerError as exc:
            errors.append(f"{label}: {exc}")
            continue
        if label == "profiles":
            lib = value
        else:
            mem = value
    try:
        scores = load_workload(cfg)
        report["scores"] = {
            "n_prompts": scores.n_prompts,
            "models": {
                m: {"mean": float(col.mean()), "min": float(col.min()), "max": float(col.max())}
                for m, col in zip(scores.models, scores.scores.T)
            },
        }
    except PlannerError as exc:
        errors.append(f"scores: {exc}")

    report["enumerated_count"] = cfg.space.size
    if mem is not None:
        try:
            kept, total, rejects = retained_setups(cfg.space, cfg.gpu_count, cfg.rho_min, mem)
        except PlannerError as exc:
            errors.append(f"memory: {exc}")
            kept = []
        else:
            report["retained_count"] = len(kept)
            report["reject_counts"] = {r.value: k for r, k in rejects.items()}
        if lib is not None:
            needed = sorted({(ms.model, ms.tp, ms.rho, cfg.metric) for s in kept for ms in s})
            missing = [k for k in needed if lib.make_key(*k) not in lib]
            report["profile_keys_needed"] = len(needed)
            report["profile_keys_missing"] = [list(k) for k in missing]
            errors.extend(f"profiles: missing profile model={k[0]} tp={k[1]} rho={k[2]} metric={k[3]}"
                          for k in missing)

    path = out / CHECK_FILE
    path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    for e in errors:
        log.error("%s", e)
    log.info("%s: %d enumerated, %s retained, %d problems", path, report["enumerated_count"],
             report.get("retained_count", "?"), len(errors))
    return EXIT_ERROR if errors else EXIT_OK


COMMANDS = {"plan": run_plan, "sweep": run_sweep, "check": run_check}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="planner config (YAML)")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--parallelism", type=int, default=None, help="worker processes")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="routeplan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("plan", parents=[common], help="select the best setup and routing split")
    sub.add_parser("sweep", parents=[common], help="score/latency of every retained setup (CSV)")
    sub.add_parser("check", parents=[common], help="validate inputs without optimising")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return COMMANDS[args.command](args.config, args.out, args.parallelism, args.seed)


if __name__ == "__main__":
    sys.exit(main())
