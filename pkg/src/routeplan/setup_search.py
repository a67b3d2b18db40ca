"""Setup-space enumeration, pruning, FFD deployability and setup selection."""
from __future__ import annotations

import csv
import enum
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, ValidationError
from .latency import rho_key
from .routing import BetaParams, RoutingContext, optimize_beta

# slack for float sums of compute fractions and shard memory
DEMAND_ATOL = 1e-9
GPU_CAPACITY = 1.0


@dataclass(frozen=True, order=True)
class ModelSetup:
    model: str
    tp: int
    rho: float

    def __post_init__(self):
        if int(self.tp) < 1:
            raise ValidationError(f"{self.model}: tp must be >= 1, got {self.tp}")
        if not 0 < self.rho <= 1:
            raise ValidationError(f"{self.model}: rho must lie in (0, 1], got {self.rho}")
        object.__setattr__(self, "tp", int(self.tp))
        object.__setattr__(self, "rho", rho_key(self.rho))


@dataclass(frozen=True)
class SystemSetup:
    per_model: tuple[ModelSetup, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_model", tuple(self.per_model))

    def __iter__(self):
        return iter(self.per_model)

    def __len__(self):
        return len(self.per_model)

    def __getitem__(self, i):
        return self.per_model[i]

    @property
    def models(self) -> tuple[str, ...]:
        return tuple(ms.model for ms in self.per_model)

    @property
    def encoding(self) -> tuple:
        """``((tp, rho), ...)`` in model order; used for deterministic tie-breaks."""
        return tuple((ms.tp, ms.rho) for ms in self.per_model)

    def label(self) -> str:
        return " ".join(f"{ms.model}:tp{ms.tp}/rho{ms.rho:g}" for ms in self.per_model)


class MemoryTable(Mapping):
    """Per-shard memory fraction ``m_i(tp)`` keyed by ``(model, tp)``."""

    def __init__(self, entries: Mapping | None = None):
        table = {}
        for (model, tp), frac in dict(entries or {}).items():
            frac = float(frac)
            if not 0 < frac <= 1:
                raise ValidationError(f"memory fraction for ({model}, tp={tp}) must lie in (0, 1], got {frac}")
            table[(str(model), int(tp))] = frac
        self._table = table

    def __getitem__(self, key):
        model, tp = key
        try:
            return self._table[(str(model), int(tp))]
        except KeyError:
            raise ConfigurationError(f"no memory entry for model={model!r} tp={tp}") from None

    def __iter__(self):
        return iter(self._table)

    def __len__(self):
        return len(self._table)


def load_memory_table(path) -> MemoryTable:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"memory table not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for col in ("model", "tp", "mem_fraction"):
            if reader.fieldnames is None or col not in reader.fieldnames:
                raise ConfigurationError(f"{path}: missing column {col!r}")
        entries = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                key = (row["model"], int(row["tp"]))
                frac = float(row["mem_fraction"])
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            if key in entries:
                raise ValidationError(f"{path}:{lineno}: duplicate memory entry {key}")
            entries[key] = frac
    return MemoryTable(entries)


def compute_demand(setup) -> float:
    return float(sum(ms.tp * ms.rho for ms in setup))


def shard_memory_list(setup, mem: Mapping) -> list[tuple[str, float]]:
    """One ``(model, m_i(tp_i))`` entry per tensor-parallel shard."""
    shards = []
    for ms in setup:
        frac = mem[(ms.model, ms.tp)]
        shards.extend([(ms.model, frac)] * ms.tp)
    return shards


def ffd_place(shards: Sequence[tuple[str, float]], n_gpus: int):
    """First-fit decreasing with same-model anti-affinity.

    Returns one list of shard indices per GPU, or None if some shard does not
    fit.  Shards are taken by size descending, then model name, then input order.
    """
    if n_gpus <= 0:
        raise ValidationError(f"GPU count must be positive, got {n_gpus}")
    order = sorted(range(len(shards)), key=lambda k: (-shards[k][1], shards[k][0], k))
    free = [GPU_CAPACITY] * n_gpus
    hosted: list[set] = [set() for _ in range(n_gpus)]
    bins: list[list[int]] = [[] for _ in range(n_gpus)]
    for k in order:
        model, size = shards[k]
        if not 0 < size <= GPU_CAPACITY:
            raise ValidationError(f"shard size {size} for {model!r} outside (0, 1]")
        for g in range(n_gpus):
            if model not in hosted[g] and free[g] >= size - DEMAND_ATOL:
                free[g] -= size
                hosted[g].add(model)
                bins[g].append(k)
                break
        else:
            return None
    return bins


def ffd_feasible(shards: Sequence[tuple[str, float]], n_gpus: int) -> bool:
    return ffd_place(shards, n_gpus) is not None


@dataclass(frozen=True)
class SetupSpace:
    """Per-model discrete choices of tensor parallelism and compute fraction."""

    models: tuple[str, ...]
    tp_choices: tuple[tuple[int, ...], ...]
    rho_choices: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        m = len(self.models)
        if m == 0:
            raise ValidationError("setup space has no models")
        if len(self.tp_choices) != m or len(self.rho_choices) != m:
            raise ValidationError("need tp and rho choices for every model")
        tps, rhos = [], []
        for name, tp, rho in zip(self.models, self.tp_choices, self.rho_choices):
            if len(tp) == 0 or len(rho) == 0:
                raise ValidationError(f"empty tp or rho choice set for model {name!r}")
            tps.append(tuple(sorted({int(t) for t in tp})))
            rhos.append(tuple(sorted({rho_key(r) for r in rho})))
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "tp_choices", tuple(tps))
        object.__setattr__(self, "rho_choices", tuple(rhos))

    @classmethod
    def uniform(cls, models: Sequence[str], tp: Sequence[int], rho: Sequence[float]) -> "SetupSpace":
        return cls(tuple(models), (tuple(tp),) * len(models), (tuple(rho),) * len(models))

    def per_model_options(self) -> list[list[ModelSetup]]:
        return [
            [ModelSetup(name, t, r) for t in tp for r in rho]
            for name, tp, rho in zip(self.models, self.tp_choices, self.rho_choices)
        ]

    @property
    def size(self) -> int:
        return math.prod(len(tp) * len(rho) for tp, rho in zip(self.tp_choices, self.rho_choices))


def enumerate_setups(space: SetupSpace) -> Iterator[SystemSetup]:
    """Lexicographic walk over the Cartesian product of per-model choices."""
    for combo in itertools.product(*space.per_model_options()):
        yield SystemSetup(combo)


class RejectReason(str, enum.Enum):
    UNDER_UTILIZED = "UNDER_UTILIZED"
    OVER_BUDGET = "OVER_BUDGET"
    PLACEMENT_INFEASIBLE = "PLACEMENT_INFEASIBLE"


def retain(setup, n_gpus: int, rho_min: float, mem: Mapping) -> tuple[bool, RejectReason | None]:
    """Compute-window pruning followed by the FFD placement check."""
    demand = compute_demand(setup)
    if demand < n_gpus * rho_min - DEMAND_ATOL:
        return False, RejectReason.UNDER_UTILIZED
    if demand > n_gpus + DEMAND_ATOL:
        return False, RejectReason.OVER_BUDGET
    if not ffd_feasible(shard_memory_list(setup, mem), n_gpus):
        return False, RejectReason.PLACEMENT_INFEASIBLE
    return True, None


def retained_setups(space: SetupSpace, n_gpus: int, rho_min: float, mem: Mapping):
    """Return ``(retained, enumerated_count, reject_counts)``."""
    kept, rejects, total = [], {r: 0 for r in RejectReason}, 0
    for setup in enumerate_setups(space):
        total += 1
        ok, why = retain(setup, n_gpus, rho_min, mem)
        if ok:
            kept.append(setup)
        else:
            rejects[why] += 1
    return kept, total, rejects


@dataclass(frozen=True)
class SearchContext:
    n_gpus: int
    rho_min: float
    mem: Mapping
    routing: RoutingContext

    def __post_init__(self):
        if int(self.n_gpus) < 1:
            raise ValidationError(f"gpu_count must be >= 1, got {self.n_gpus}")
        if not 0 < self.rho_min <= 1:
            raise ValidationError(f"rho_min must lie in (0, 1], got {self.rho_min}")


@dataclass(frozen=True)
class SweepRecord:
    setup: SystemSetup
    score: float
    latency: float
    feasible: bool
    beta: float | None = None
    w: np.ndarray | None = None
    out_of_range: np.ndarray | None = None


@dataclass(frozen=True)
class PlanResult:
    setup: SystemSetup | None
    w: np.ndarray | None
    beta: float | None
    score: float
    latency: float
    retained_count: int
    evaluated_count: int
    enumerated_count: int = 0
    out_of_range: np.ndarray | None = None
    reject_counts: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.setup is not None


def evaluate_setup(setup: SystemSetup, ctx: RoutingContext, params: BetaParams) -> SweepRecord:
    res = optimize_beta(setup, ctx, params)
    if res.feasible:
        b = res.best
        return SweepRecord(setup, b.score, b.latency, True, res.beta_star, b.w, b.out_of_range)
    last = res.last
    if last is None:
        return SweepRecord(setup, math.nan, math.nan, False)
    # infeasible: report the most latency-penalised point that was tried
    return SweepRecord(setup, last.score, last.latency, False, last.beta, last.w, last.out_of_range)


def _better(a: SweepRecord, b: SweepRecord | None) -> bool:
    if b is None:
        return True
    if a.score != b.score:
        return a.score > b.score
    if a.latency != b.latency:
        return a.latency < b.latency
    return a.setup.encoding < b.setup.encoding


def select_setup(space: SetupSpace, ctx: SearchContext, params: BetaParams | None = None,
                 parallelism: int = 1):
    """Best feasible setup and routing over the retained part of ``space``.

    Returns ``(plan, sweep_records)`` with one record per retained setup in
    enumeration order.  The winner maximises score, then minimises latency,
    then has the smallest setup encoding, so the result does not depend on
    ``parallelism``.
    """
    rctx = ctx.routing
    if tuple(space.models) != tuple(rctx.scores.models):
        raise ValidationError(f"setup-space models {space.models} differ from score models {rctx.scores.models}")
    params = params or BetaParams.for_target(rctx.tau)
    kept, total, rejects = retained_setups(space, ctx.n_gpus, ctx.rho_min, ctx.mem)

    work = partial(evaluate_setup, ctx=rctx, params=params)
    workers = max(1, int(parallelism or os.cpu_count() or 1))
    if workers == 1 or len(kept) <= 1:
        records = [work(s) for s in kept]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(kept))) as pool:
            records = list(pool.map(work, kept, chunksize=max(1, len(kept) // (4 * workers))))

    best = None
    for rec in records:
        if rec.feasible and rec.latency <= rctx.tau and _better(rec, best):
            best = rec
    common = dict(
        retained_count=len(kept),
        evaluated_count=len(records),
        enumerated_count=total,
        reject_counts={r.value: k for r, k in rejects.items()},
    )
    if best is None:
        plan = PlanResult(None, None, None, math.nan, math.nan, **common)
    else:
        plan = PlanResult(best.setup, best.w, best.beta, best.score, best.latency,
                          out_of_range=best.out_of_range, **common)
    return plan, records


def sweep_header(models: Sequence[str]) -> list[str]:
    cols = ["setup_id"]
    for k in range(1, len(models) + 1):
        cols += [f"model_{k}", f"tp_{k}", f"rho_{k}"]
    return cols + ["score", "latency_ms", "feasible"]


def write_sweep_csv(records: Sequence[SweepRecord], models: Sequence[str], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(sweep_header(models))
        for sid, rec in enumerate(records):
            row = [sid]
            for ms in rec.setup:
                row += [ms.model, ms.tp, repr(ms.rho)]
            row += [repr(float(rec.score)), repr(float(rec.latency)), str(bool(rec.feasible)).lower()]
            writer.writerow(row)


def write_memory_table(mem: Mapping, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "tp", "mem_fraction"])
        for (model, tp), frac in mem.items():
            writer.writerow([model, tp, repr(float(frac))])
