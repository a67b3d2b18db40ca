"""Maximum achievable average score under target routing counts.

The count-constrained assignment problem

    max (1/N) sum_j sum_i z_ji s_i(x_j)   s.t.  sum_i z_ji = 1,  sum_j z_ji = c_i

is solved through its price dual

    g(alpha) = (1/N) [ sum_j max_i (s_i(x_j) - alpha_i) + sum_i alpha_i c_i ],

minimised by a subgradient method.  The subgradient iterate is then turned
into an exactly optimal primal/dual pair by a repair pass: counts are matched
by moving the cheapest prompts, and any remaining improving cyclic exchange
between models is cancelled.  Prices are read off the optimal assignment as
shortest-path potentials, so the returned ``alpha_star`` is an exact dual
optimum and ``score`` is the exact optimal value (LP value for fractional
counts, integer optimum for integral counts).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .workload import ScoreMatrix

COUNT_ATOL = 1e-9
_MASS_EPS = 1e-12
_CYCLE_TOL = 1e-12


@dataclass(frozen=True)
class SubgradientParams:
    """Step schedule ``step0 / sqrt(t + 1)`` run for at most ``max_iter`` steps.

    Iteration stops early once every count ``n_i(alpha)`` is within
    ``count_tol`` prompts of its target.
    """

    step0: float = 1.0
    max_iter: int = 500
    count_tol: float = 1.0

    def __post_init__(self):
        if not self.step0 > 0:
            raise ValidationError(f"step0 must be > 0, got {self.step0}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.count_tol > 0:
            raise ValidationError(f"count_tol must be > 0, got {self.count_tol}")


@dataclass(frozen=True)
class DualSolution:
    alpha_star: np.ndarray
    score: float
    assignment: np.ndarray
    count_residual: np.ndarray
    iterations: int
    converged: bool
    # best g reached by the subgradient iterates alone, before repair
    subgradient_bound: float = field(default=math.nan)
    integral: bool = True

    @property
    def gap(self) -> float:
        """Distance between the subgradient bound and the repaired primal value."""
        return self.subgradient_bound - self.score


def _matrix(scores) -> np.ndarray:
    if isinstance(scores, ScoreMatrix):
        return scores.scores
    s = np.asarray(scores, dtype=float)
    if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 1:
        raise ValidationError(f"scores must be a non-empty 2-D array, got shape {s.shape}")
    return s


def _alpha(alpha, m: int) -> np.ndarray:
    a = np.asarray(alpha, dtype=float).reshape(-1)
    if a.shape[0] != m:
        raise ValidationError(f"alpha has length {a.shape[0]}, expected {m}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("alpha has non-finite entries")
    return a


def target_counts(counts, n: int, m: int) -> np.ndarray:
    """Validate a target-count vector: length ``m``, nonnegative, summing to ``n``."""
    c = np.asarray(counts, dtype=float).reshape(-1)
    if c.shape[0] != m:
        raise ValidationError(f"counts has length {c.shape[0]}, expected {m}")
    if not np.all(np.isfinite(c)) or np.any(c < -COUNT_ATOL):
        raise ValidationError(f"counts must be finite and nonnegative, got {c.tolist()}")
    if abs(c.sum() - n) > COUNT_ATOL * max(1.0, n):
        raise ValidationError(f"counts sum to {c.sum()!r}, expected N={n}")
    return np.clip(c, 0.0, None)


def counts_from_fractions(w, n: int) -> np.ndarray:
    """Continuous target counts ``c_i = N w_i``."""
    return n * np.asarray(w, dtype=float)


def _argmax_rows(s: np.ndarray, alpha: np.ndarray):
    adj = s - alpha
    idx = adj.argmax(axis=1)  # first maximum, i.e. lowest model index on ties
    best = adj[np.arange(s.shape[0]), idx]
    return idx, best


def assign_prompts(scores, alpha):
    """Route every prompt to ``argmax_i (s_i(x_j) - alpha_i)``.

    Ties go to the lowest model index.  Returns ``(assignment, counts)``.
    """
    s = _matrix(scores)
    a = _alpha(alpha, s.shape[1])
    idx, _ = _argmax_rows(s, a)
    return idx, np.bincount(idx, minlength=s.shape[1])


def dual_objective(scores, counts, alpha) -> float:
    s = _matrix(scores)
    n, m = s.shape
    c = target_counts(counts, n, m)
    a = _alpha(alpha, m)
    _, best = _argmax_rows(s, a)
    return float((best.sum() + a @ c) / n)


def _repair_counts(s: np.ndarray, c: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Move prompt mass from over- to under-assigned models, cheapest first."""
    n, m = s.shape
    for _ in range(n * m + m * m):
        surplus = x.sum(axis=0) - c
        src = int(np.argmax(surplus))
        dst = int(np.argmin(surplus))
        if surplus[src] <= COUNT_ATOL:
            break
        need = min(surplus[src], -surplus[dst])
        donors = np.flatnonzero(x[:, src] > _MASS_EPS)
        regret = s[donors, src] - s[donors, dst]
        for j in donors[np.argsort(regret, kind="stable")]:
            amount = min(x[j, src], need)
            x[j, src] -= amount
            x[j, dst] += amount
            need -= amount
            if need <= _MASS_EPS:
                break
    return x


def _exchange_costs(s: np.ndarray, x: np.ndarray):
    """Cheapest per-unit loss of moving mass from model i to model k, and its prompt."""
    n, m = s.shape
    cost = np.full((m, m), np.inf)
    witness = np.full((m, m), -1, dtype=int)
    for i in range(m):
        rows = np.flatnonzero(x[:, i] > _MASS_EPS)
        if rows.size == 0:
            continue
        loss = s[rows, i][:, None] - s[rows, :]
        jmin = loss.argmin(axis=0)
        cost[i] = loss[jmin, np.arange(m)]
        witness[i] = rows[jmin]
        cost[i, i] = np.inf
        witness[i, i] = -1
    return cost, witness


def _bellman_ford(weight: np.ndarray):
    """Shortest distances from a virtual source joined to every node at cost 0.

    Returns ``(dist, cycle)`` where ``cycle`` lists the nodes of a negative
    cycle in edge order, or None when there is none.
    """
    m = weight.shape[0]
    dist = np.zeros(m)
    pred = np.full(m, -1, dtype=int)
    changed = np.zeros(m, dtype=bool)
    for _ in range(m + 1):
        cand = dist[:, None] + weight
        src = cand.argmin(axis=0)
        best = cand[src, np.arange(m)]
        changed = best < dist - _CYCLE_TOL
        if not changed.any():
            return dist, None
        dist = np.where(changed, best, dist)
        pred = np.where(changed, src, pred)
    # still relaxing after m + 1 rounds: walk back into the cycle
    v = int(np.flatnonzero(changed)[0])
    for _ in range(m):
        v = int(pred[v])
        if v < 0:
            return dist, None
    cycle = [v]
    u = int(pred[v])
    while u != v:
        if u < 0 or len(cycle) > m:
            return dist, None
        cycle.append(u)
        u = int(pred[u])
    cycle.reverse()
    return dist, cycle


def _cancel_cycles(s: np.ndarray, x: np.ndarray, max_rounds: int) -> np.ndarray:
    for _ in range(max_rounds):
        cost, witness = _exchange_costs(s, x)
        _, cycle = _bellman_ford(cost)
        if cycle is None:
            break
        edges = list(zip(cycle, cycle[1:] + cycle[:1]))
        if sum(cost[i, k] for i, k in edges) >= -_CYCLE_TOL:
            break
        amount = min(x[witness[i, k], i] for i, k in edges)
        for i, k in edges:
            j = witness[i, k]
            x[j, i] -= amount
            x[j, k] += amount
    return x


def _prices(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Prices under which every prompt's mass sits on an adjusted-score maximiser."""
    cost, _ = _exchange_costs(s, x)
    # alpha_i <= alpha_k + cost[i, k]  <=>  shortest paths along edges k -> i
    dist, _ = _bellman_ford(cost.T)
    return dist - dist.min()


def solve_dual(scores, counts, params: SubgradientParams | None = None, alpha0=None) -> DualSolution:
    """Compute the maximum average score for target counts and its optimal prices.

    ``counts`` may be fractional (continuous relaxation ``c = N w``); the
    returned ``score`` is then ``g(alpha_star)``, the LP value.  For integral
    counts the score is the average of an optimal count-respecting assignment.
    ``alpha0`` warm-starts the price iteration.
    """
    params = params or SubgradientParams()
    s = _matrix(scores)
    n, m = s.shape
    c = target_counts(counts, n, m)
    integral = bool(np.all(np.abs(c - np.round(c)) <= COUNT_ATOL))
    if integral:
        c = np.round(c)

    alpha = np.zeros(m) if alpha0 is None else _alpha(alpha0, m).copy()
    best_g, best_idx = math.inf, None
    converged = False
    it = 0
    for it in range(1, params.max_iter + 1):
        idx, top = _argmax_rows(s, alpha)
        g = (top.sum() + alpha @ c) / n
        if g < best_g:
            best_g, best_idx = g, idx
        resid = np.bincount(idx, minlength=m) - c
        if np.max(np.abs(resid)) < params.count_tol:
            converged = True
            break
        alpha = alpha + (params.step0 / math.sqrt(it)) * resid / n

    x = np.zeros((n, m))
    x[np.arange(n), best_idx] = 1.0
    x = _repair_counts(s, c, x)
    x = _cancel_cycles(s, x, max_rounds=4 * n + 16)
    alpha_star = _prices(s, x)

    if integral:
        x = np.round(x)
        assignment = x.argmax(axis=1)
        score = float(s[np.arange(n), assignment].sum() / n)
    else:
        assignment = x.argmax(axis=1)
        _, top = _argmax_rows(s, alpha_star)
        score = float((top.sum() + alpha_star @ c) / n)
    score = min(max(score, 0.0), 1.0)

    _, n_star = assign_prompts(s, alpha_star)
    return DualSolution(
        alpha_star=alpha_star,
        score=score,
        assignment=assignment,
        count_residual=(n_star - c) / n,
        iterations=it,
        converged=converged,
        subgradient_bound=float(best_g),
        integral=integral,
    )


def exact_score_oracle(scores, counts, max_prompts: int = 12) -> float:
    """Exact optimum by enumerating every assignment that meets integral counts."""
    s = _matrix(scores)
    n, m = s.shape
    if n > max_prompts:
        raise ValidationError(f"oracle limited to N <= {max_prompts}, got N={n}")
    c = target_counts(counts, n, m)
    if np.any(np.abs(c - np.round(c)) > COUNT_ATOL):
        raise ValidationError(f"oracle needs integral counts, got {c.tolist()}")
    c = [int(v) for v in np.round(c)]

    def best(remaining: tuple[int, ...], i: int) -> float:
        if i == m - 1:
            return float(s[list(remaining), i].sum())
        top = -math.inf
        for chosen in itertools.combinations(remaining, c[i]):
            rest = tuple(j for j in remaining if j not in chosen)
            top = max(top, float(s[list(chosen), i].sum()) + best(rest, i + 1))
        return top

    return best(tuple(range(n)), 0) / n
