"""Routing fractions for a fixed system setup.

``optimize_fractions`` runs projected gradient ascent on the simplex for the
relaxed objective ``S(w) - beta * (L(w) - tau)``; the score gradient is the
optimal dual price vector.  ``optimize_beta`` bisects the latency multiplier
until the bracket is narrower than ``epsilon``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .latency import DEFAULT_KAPPA, ProfileLibrary, out_of_range, system_latency, system_latency_grad
from .score_dual import SubgradientParams, solve_dual
from .workload import ScoreMatrix

SIMPLEX_ATOL = 1e-9


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-and-threshold)."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size < 1:
        raise ValidationError("cannot project an empty vector")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"non-finite entries in {v.tolist()}")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    k = ks[u - css / ks > 0][-1]
    theta = css[k - 1] / k
    w = np.maximum(v - theta, 0.0)
    return w / w.sum()


def check_fractions(w, m: int | None = None) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if m is not None and w.size != m:
        raise ValidationError(f"expected {m} routing fractions, got {w.size}")
    if np.any(w < -SIMPLEX_ATOL) or abs(w.sum() - 1.0) > SIMPLEX_ATOL:
        raise ValidationError(f"routing fractions {w.tolist()} are not on the simplex")
    return w


@dataclass(frozen=True)
class RoutingContext:
    """Everything a routing solve needs besides the setup itself."""

    scores: ScoreMatrix
    lib: ProfileLibrary
    lam: float
    tau: float
    metric: str = "TTFT"
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError(f"arrival rate must be > 0, got {self.lam}")
        if not self.tau > 0:
            raise ValidationError(f"latency target must be > 0, got {self.tau}")


@dataclass(frozen=True)
class PGAParams:
    step: float = 0.05
    max_iter: int = 200
    dual: SubgradientParams = field(default_factory=SubgradientParams)


@dataclass(frozen=True)
class BetaParams:
    beta_min: float
    beta_max: float
    epsilon: float
    pga: PGAParams = field(default_factory=PGAParams)

    def __post_init__(self):
        if not 0 <= self.beta_min < self.beta_max:
            raise ValidationError(f"need 0 <= beta_min < beta_max, got [{self.beta_min}, {self.beta_max}]")
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be > 0, got {self.epsilon}")

    @classmethod
    def for_target(cls, tau: float, pga: PGAParams | None = None, steps: int = 10) -> "BetaParams":
        """Default bracket ``[0, 10 / tau]`` split down to ``2 ** -steps`` of its width."""
        beta_max = 10.0 / tau
        return cls(0.0, beta_max, beta_max / 2**steps, pga or PGAParams())

    @property
    def n_steps(self) -> int:
        ratio = (self.beta_max - self.beta_min) / self.epsilon
        if ratio <= 1.0:
            return 0
        return math.ceil(math.log2(ratio) - 1e-12)


@dataclass(frozen=True)
class RelaxedSolveResult:
    w: np.ndarray
    objective: float
    score: float
    latency: float
    iterations: int
    converged: bool
    beta: float = 0.0
    out_of_range: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def in_range(self) -> bool:
        return not bool(np.any(self.out_of_range))


@dataclass(frozen=True)
class BetaStep:
    beta: float
    latency: float
    score: float
    feasible: bool
    # bracket the midpoint was taken from
    lower: float = math.nan
    upper: float = math.nan


@dataclass(frozen=True)
class BetaSearchResult:
    w_star: np.ndarray | None
    beta_star: float | None
    feasible: bool
    trace: list
    best: RelaxedSolveResult | None = None
    last: RelaxedSolveResult | None = None

    @property
    def score(self) -> float:
        return self.best.score if self.best is not None else math.nan

    @property
    def latency(self) -> float:
        return self.best.latency if self.best is not None else math.nan


def _penalised(score, latency, beta, tau):
    if beta == 0.0:
        return score
    return score - beta * (latency - tau)


def optimize_fractions(setup, beta: float, ctx: RoutingContext, params: PGAParams | None = None,
                       callback=None) -> RelaxedSolveResult:
    """Projected gradient ascent on the relaxed objective for one ``beta``.

    Starts from the uniform split and returns the iterate with the best
    objective, with score and latency re-evaluated there.  ``callback(t, w,
    score, latency)`` is invoked for every iterate.
    """
    params = params or PGAParams()
    if beta < 0:
        raise ValidationError(f"beta must be >= 0, got {beta}")
    setup = list(setup)
    s = ctx.scores.scores
    n, m = s.shape
    if len(setup) != m:
        raise ValidationError(f"setup has {len(setup)} models, score matrix has {m}")

    w = np.full(m, 1.0 / m)
    alpha = None
    best_val, best_w = -math.inf, w
    converged = False
    it = 0
    for it in range(params.max_iter + 1):
        sol = solve_dual(s, n * w, params.dual, alpha0=alpha)
        alpha = sol.alpha_star
        lat = system_latency(ctx.lib, setup, w, ctx.lam, ctx.metric)
        if callback is not None:
            callback(it, w, sol.score, lat)
        # tau shifts every iterate equally, so it is left out of the ranking
        val = sol.score - beta * lat if beta else sol.score
        if val > best_val:
            best_val, best_w = val, w
        if it == params.max_iter:
            break
        grad = alpha - beta * system_latency_grad(ctx.lib, setup, w, ctx.lam, ctx.metric)
        w_next = project_simplex(w + params.step * grad)
        if np.array_equal(w_next, w):
            converged = True
            break
        w = w_next

    score = solve_dual(s, n * best_w, params.dual).score
    lat = system_latency(ctx.lib, setup, best_w, ctx.lam, ctx.metric)
    return RelaxedSolveResult(
        w=best_w,
        objective=_penalised(score, lat, beta, ctx.tau),
        score=score,
        latency=lat,
        iterations=it,
        converged=converged,
        beta=beta,
        out_of_range=out_of_range(ctx.lib, setup, best_w, ctx.lam, ctx.metric, ctx.kappa),
    )


def optimize_beta(setup, ctx: RoutingContext, params: BetaParams | None = None) -> BetaSearchResult:
    """Bisection on the latency multiplier.

    A step is acceptable when the latency meets ``tau`` and no model runs past
    ``kappa`` times its profiled load range.  Acceptable steps shrink
    ``beta_max`` and are recorded; others raise ``beta_min``.
    """
    params = params or BetaParams.for_target(ctx.tau)
    lo, hi = params.beta_min, params.beta_max
    w_star, beta_star, best, last = None, None, None, None
    trace = []
    for _ in range(params.n_steps):
        beta = 0.5 * (lo + hi)
        res = optimize_fractions(setup, beta, ctx, params.pga)
        ok = res.latency <= ctx.tau and res.in_range
        trace.append(BetaStep(beta, res.latency, res.score, ok, lo, hi))
        last = res
        if not ok:
            lo = beta
        else:
            hi = beta
            w_star, beta_star, best = res.w, beta, res
    return BetaSearchResult(
        w_star=w_star,
        beta_star=beta_star,
        feasible=w_star is not None,
        trace=trace,
        best=best,
        last=last,
    )
