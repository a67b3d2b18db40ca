"""Planner configuration: one YAML document drives plan, sweep and check.

Example::

    gpu_count: 2
    arrival_rate: 10.0        # requests/s
    latency_target: 150.0     # ms
    metric: TTFT
    rho_min: 1.0
    seed: 0
    models:
      A: {tp: [1, 2], rho: [0.5, 1.0]}
      B: {tp: [1, 2], rho: [0.5, 1.0]}
    profiles: profiles.csv    # paths are relative to this file
    memory: memory.csv
    scores: scores.csv        # or a `synthetic:` block instead
    optimizer: {pga_iters: 200, kappa: 1.25}

A ``synthetic`` block (``n_prompts`` plus ``beta_shapes: {model: [a, b]}``)
replaces ``scores`` when no score file is available.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigurationError, ValidationError
from .latency import DEFAULT_KAPPA, METRICS
from .routing import BetaParams, PGAParams
from .score_dual import SubgradientParams
from .setup_search import SetupSpace

OPTIMIZER_DEFAULTS = {
    "dual_step0": 1.0,
    "dual_iters": 500,
    "pga_step": 0.05,
    "pga_iters": 200,
    "beta_min": 0.0,
    "beta_max": None,
    "epsilon": None,
    "kappa": DEFAULT_KAPPA,
}


@dataclass(frozen=True)
class PlannerConfig:
    gpu_count: int
    arrival_rate: float
    latency_target: float
    metric: str
    rho_min: float
    space: SetupSpace
    profiles_path: Path
    memory_path: Path
    scores_path: Path | None = None
    synthetic: dict | None = None
    optimizer: dict = field(default_factory=lambda: dict(OPTIMIZER_DEFAULTS))
    seed: int = 0
    parallelism: int | None = None

    @property
    def models(self) -> tuple[str, ...]:
        return self.space.models

    def beta_params(self) -> BetaParams:
        opt = self.optimizer
        dual = SubgradientParams(step0=float(opt["dual_step0"]), max_iter=int(opt["dual_iters"]))
        pga = PGAParams(step=float(opt["pga_step"]), max_iter=int(opt["pga_iters"]), dual=dual)
        beta_min = float(opt["beta_min"])
        beta_max = opt["beta_max"]
        beta_max = 10.0 / self.latency_target if beta_max is None else float(beta_max)
        eps = opt["epsilon"]
        eps = (beta_max - beta_min) / 2**10 if eps is None else float(eps)
        return BetaParams(beta_min, beta_max, eps, pga)


def _require(doc: dict, key: str, src: Path):
    if key not in doc:
        raise ConfigurationError(f"{src}: missing required field {key!r}")
    return doc[key]


def _number(doc, key, src, cast=float):
    value = _require(doc, key, src)
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{src}: field {key!r} must be a number, got {value!r}") from None


def load_config(path, seed: int | None = None, parallelism: int | None = None) -> PlannerConfig:
    src = Path(path)
    if not src.exists():
        raise ConfigurationError(f"config file not found: {src}")
    try:
        doc = yaml.safe_load(src.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ValidationError(f"{src}: not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"{src}: top level must be a mapping")
    base = src.parent

    gpus = _number(doc, "gpu_count", src, int)
    lam = _number(doc, "arrival_rate", src)
    tau = _number(doc, "latency_target", src)
    rho_min = float(doc.get("rho_min", 1.0))
    metric = str(doc.get("metric", "TTFT")).upper()
    if gpus < 1:
        raise ValidationError(f"{src}: gpu_count must be >= 1, got {gpus}")
    if not lam > 0:
        raise ValidationError(f"{src}: arrival_rate must be > 0, got {lam}")
    if not tau > 0:
        raise ValidationError(f"{src}: latency_target must be > 0, got {tau}")
    if not 0 < rho_min <= 1:
        raise ValidationError(f"{src}: rho_min must lie in (0, 1], got {rho_min}")
    if metric not in METRICS:
        raise ValidationError(f"{src}: metric must be one of {METRICS}, got {metric!r}")

    models = _require(doc, "models", src)
    if not isinstance(models, dict) or not models:
        raise ValidationError(f"{src}: 'models' must map model names to tp/rho choices")
    names, tps, rhos = [], [], []
    for name, choice in models.items():
        if not isinstance(choice, dict) or "tp" not in choice or "rho" not in choice:
            raise ConfigurationError(f"{src}: model {name!r} needs 'tp' and 'rho' lists")
        names.append(str(name))
        tps.append(tuple(int(t) for t in choice["tp"]))
        rhos.append(tuple(float(r) for r in choice["rho"]))
    try:
        space = SetupSpace(tuple(names), tuple(tps), tuple(rhos))
    except ValidationError as exc:
        raise ValidationError(f"{src}: {exc}") from None

    scores_path = doc.get("scores")
    synthetic = doc.get("synthetic")
    if scores_path is None and synthetic is None:
        raise ConfigurationError(f"{src}: give either 'scores' or a 'synthetic' block")
    if synthetic is not None:
        shapes = synthetic.get("beta_shapes", {})
        missing = [m for m in names if m not in shapes]
        if missing:
            raise ConfigurationError(f"{src}: synthetic.beta_shapes lacks model {missing[0]!r}")
        if "n_prompts" not in synthetic:
            raise ConfigurationError(f"{src}: synthetic block needs 'n_prompts'")

    unknown = set(doc.get("optimizer") or {}) - set(OPTIMIZER_DEFAULTS)
    if unknown:
        raise ValidationError(f"{src}: unknown optimizer field {sorted(unknown)[0]!r}")
    optimizer = {**OPTIMIZER_DEFAULTS, **(doc.get("optimizer") or {})}

    return PlannerConfig(
        gpu_count=gpus,
        arrival_rate=lam,
        latency_target=tau,
        metric=metric,
        rho_min=rho_min,
        space=space,
        profiles_path=base / str(_require(doc, "profiles", src)),
        memory_path=base / str(_require(doc, "memory", src)),
        scores_path=None if scores_path is None else base / str(scores_path),
        synthetic=synthetic,
        optimizer=optimizer,
        seed=int(doc.get("seed", 0)) if seed is None else int(seed),
        parallelism=parallelism if parallelism is not None else doc.get("parallelism"),
    )
