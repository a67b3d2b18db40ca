"""Reference computations that share no code with the package under test."""
import itertools

import numpy as np
from scipy.optimize import linprog


def lp_score(scores, counts):
    """Count-constrained assignment LP value via HiGHS."""
    s = np.asarray(scores, dtype=float)
    n, m = s.shape
    a_eq = np.zeros((n + m, n * m))
    for j in range(n):
        a_eq[j, j * m:(j + 1) * m] = 1.0
    for i in range(m):
        a_eq[n + i, i::m] = 1.0
    res = linprog(-s.ravel(), A_eq=a_eq, b_eq=np.r_[np.ones(n), counts], bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return -res.fun / n


def two_model_score(scores, w0):
    """Closed form for M=2: serve the prompts where model 0 gains most from model 0."""
    s = np.asarray(scores, dtype=float)
    n = s.shape[0]
    order = np.argsort(-(s[:, 0] - s[:, 1]), kind="stable")
    share = np.clip(n * w0 - np.arange(n), 0.0, 1.0)
    x0 = np.zeros(n)
    x0[order] = share
    return float((x0 * s[:, 0] + (1 - x0) * s[:, 1]).sum() / n)


def simplex_grid(m, step):
    """All points of the simplex whose coordinates are multiples of ``step``."""
    k = int(round(1 / step))
    pts = [c for c in itertools.product(range(k + 1), repeat=m - 1) if sum(c) <= k]
    pts = np.array(pts, dtype=float)
    return np.column_stack([pts, k - pts.sum(axis=1)]) / k


def grid_projection(v, coarse=0.01, rounds=12):
    """Nearest simplex point to ``v`` by grid search, refined by zooming in."""
    v = np.asarray(v, dtype=float)
    m = v.size
    if m == 1:
        return np.ones(1)
    grid = simplex_grid(m, coarse if m > 2 else 1e-4)
    best = grid[np.argmin(((grid - v) ** 2).sum(axis=1))]
    span = coarse if m > 2 else 1e-4
    for _ in range(rounds):
        offsets = np.array(list(itertools.product(np.linspace(-span, span, 21), repeat=m - 1)))
        cand = best[None, : m - 1] + offsets
        cand = np.column_stack([cand, 1 - cand.sum(axis=1)])
        cand = cand[(cand >= 0).all(axis=1)]
        cand = np.vstack([cand, best])
        best = cand[np.argmin(((cand - v) ** 2).sum(axis=1))]
        span /= 8
    return best


def exhaustive_packable(shards, n_gpus, capacity=1.0, atol=1e-9):
    """True iff some placement respects capacity and same-model anti-affinity."""
    if not shards:
        return True
    order = sorted(range(len(shards)), key=lambda k: -shards[k][1])
    free = [capacity] * n_gpus
    hosted = [set() for _ in range(n_gpus)]

    def place(pos):
        if pos == len(order):
            return True
        model, size = shards[order[pos]]
        for g in range(n_gpus):
            if model not in hosted[g] and free[g] >= size - atol:
                free[g] -= size
                hosted[g].add(model)
                if place(pos + 1):
                    return True
                free[g] += size
                hosted[g].discard(model)
        return False

    return place(0)


def brute_force_plan(scenario, step=0.01):
    """Best (score, latency, setup) over retained setups x a w-grid, by direct evaluation.

    Latency uses numpy interpolation with end-slope extrapolation; score uses
    the LP oracle.  Ties follow the planner's documented order.
    """
    from routeplan.setup_search import retained_setups

    s = scenario.scores.scores
    n, m = s.shape
    kept, _, _ = retained_setups(scenario.space, scenario.n_gpus, scenario.rho_min, scenario.memory)
    grid = simplex_grid(m, step)
    score_cache = {}
    best = None
    for setup in kept:
        curves = [scenario.profiles.get_profile(ms.model, ms.tp, ms.rho, scenario.metric) for ms in setup]
        for w in grid:
            lat = 0.0
            for wi, p in zip(w, curves):
                load = scenario.arrival_rate * wi
                x, y = p.loads, p.latencies
                if load > x[-1]:
                    li = y[-1] + (y[-1] - y[-2]) / (x[-1] - x[-2]) * (load - x[-1])
                else:
                    li = np.interp(load, x, y)
                lat += wi * li
            if lat > scenario.latency_target:
                continue
            key = tuple(np.round(w, 6))
            if key not in score_cache:
                score_cache[key] = two_model_score(s, w[0]) if m == 2 else lp_score(s, n * w)
            cand = (score_cache[key], -lat, tuple(-np.array(setup.encoding, dtype=float).ravel()))
            if best is None or cand > best[0]:
                best = (cand, setup, w, lat)
    if best is None:
        return None
    (score, neg_lat, _), setup, w, lat = best
    return score, lat, setup, w
