"""Small synthetic planning scenarios for demos, tests and smoke runs.

Nothing here is calibrated against real hardware; the numbers only need to
produce the qualitative behaviour the planner is meant to handle.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .latency import LatencyProfile, ProfileLibrary, synth_profile, write_profiles
from .routing import RoutingContext
from .setup_search import MemoryTable, SearchContext, SetupSpace, write_memory_table
from .workload import ScoreMatrix, synth_scores, write_scores


@dataclass(frozen=True)
class Scenario:
    scores: ScoreMatrix
    profiles: ProfileLibrary
    memory: MemoryTable
    space: SetupSpace
    n_gpus: int
    arrival_rate: float
    latency_target: float
    rho_min: float = 1.0
    metric: str = "TTFT"

    def context(self, kappa: float = 1.25) -> SearchContext:
        routing = RoutingContext(self.scores, self.profiles, self.arrival_rate,
                                 self.latency_target, self.metric, kappa)
        return SearchContext(self.n_gpus, self.rho_min, self.memory, routing)

    def write(self, directory, optimizer: dict | None = None, seed: int = 0) -> Path:
        """Write score/profile/memory CSVs plus a config; returns the config path."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        write_scores(self.scores, d / "scores.csv")
        write_profiles(self.profiles, d / "profiles.csv")
        write_memory_table(self.memory, d / "memory.csv")
        doc = {
            "gpu_count": self.n_gpus,
            "arrival_rate": self.arrival_rate,
            "latency_target": self.latency_target,
            "metric": self.metric,
            "rho_min": self.rho_min,
            "seed": seed,
            "models": {
                m: {"tp": list(tp), "rho": list(rho)}
                for m, tp, rho in zip(self.space.models, self.space.tp_choices, self.space.rho_choices)
            },
            "profiles": "profiles.csv",
            "memory": "memory.csv",
            "scores": "scores.csv",
        }
        if optimizer:
            doc["optimizer"] = dict(optimizer)
        path = d / "config.yaml"
        path.write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")
        return path


def constant_profile(model, tp, rho, latency_ms, max_load, metric="TTFT") -> LatencyProfile:
    return LatencyProfile(model, tp, rho, metric, np.array([0.0, max_load]),
                          np.array([latency_ms, latency_ms]))


def toy_scenario(n_prompts: int = 40, seed: int = 3, latency_target: float = 100.0) -> Scenario:
    """Two models on two GPUs; model A scores higher on every prompt.

    Latencies are load-independent: A takes ``80 / (rho * sqrt(tp))`` ms and
    B a flat 300 ms, so only A at full compute share meets a 100 ms target.
    Of the 16 candidate setups, exactly 4 use the full compute budget.
    """
    rng = np.random.default_rng(seed)
    a = rng.beta(8.0, 2.0, size=n_prompts)
    b = a * rng.uniform(0.4, 0.9, size=n_prompts)
    scores = ScoreMatrix(tuple(f"p{j}" for j in range(n_prompts)), ("A", "B"), np.column_stack([a, b]))
    tps, rhos = (1, 2), (0.5, 1.0)
    profiles = []
    for tp in tps:
        for rho in rhos:
            profiles.append(constant_profile("A", tp, rho, 80.0 / (rho * np.sqrt(tp)), 20.0))
            profiles.append(constant_profile("B", tp, rho, 300.0, 20.0))
    memory = MemoryTable({("A", 1): 0.5, ("A", 2): 0.3, ("B", 1): 0.4, ("B", 2): 0.2})
    space = SetupSpace.uniform(("A", "B"), tps, rhos)
    return Scenario(scores, ProfileLibrary(profiles), memory, space, n_gpus=2,
                    arrival_rate=10.0, latency_target=latency_target)


def heterogeneous_scenario(n_prompts: int = 100, seed: int = 0, n_gpus: int = 4,
                           arrival_rate: float = 30.0, latency_target: float = 200.0,
                           tp_choices=(1, 2, 4), rho_choices=(0.25, 0.5, 0.75, 1.0)) -> Scenario:
    """Three models of increasing size and quality with load-dependent latency."""
    models = ("small", "mid", "large")
    scores = synth_scores(n_prompts, [(2, 5), (4, 4), (6, 2)], seed, models=models)
    capacity = {"small": 40.0, "mid": 20.0, "large": 8.0}
    base = {"small": 30.0, "mid": 60.0, "large": 150.0}
    mem_by_tp = {"small": (0.3, 0.2, 0.1), "mid": (0.6, 0.35, 0.2), "large": (1.0, 0.7, 0.4)}
    profiles = [
        synth_profile(m, tp, rho, base_ms=base[m], capacity_rps=capacity[m], max_load=2 * arrival_rate)
        for m in models for tp in tp_choices for rho in rho_choices
    ]
    memory = MemoryTable({
        (m, tp): frac for m in models for tp, frac in zip((1, 2, 4), mem_by_tp[m]) if tp in tp_choices
    })
    space = SetupSpace.uniform(models, tp_choices, rho_choices)
    return Scenario(scores, ProfileLibrary(profiles), memory, space, n_gpus=n_gpus,
                    arrival_rate=arrival_rate, latency_target=latency_target)
