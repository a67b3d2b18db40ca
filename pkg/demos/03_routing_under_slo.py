"""Choosing routing fractions for a fixed setup under a latency target.

Run with ``python demos/03_routing_under_slo.py``.
"""
# %%
# Three models: a fast weak one, a middle one and a slow strong one.  With no
# latency penalty, routing drifts towards whatever scores best.
import numpy as np

from routeplan import BetaParams, ModelSetup, ProfileLibrary, RoutingContext, SystemSetup
from routeplan import optimize_beta, optimize_fractions
from routeplan.latency import synth_profile
from routeplan.workload import synth_scores

models = ("small", "mid", "large")
scores = synth_scores(150, [(2, 5), (4, 4), (6, 2)], seed=7, models=models)
lib = ProfileLibrary([
    synth_profile("small", 1, 1.0, base_ms=30, capacity_rps=40, max_load=60),
    synth_profile("mid", 1, 1.0, base_ms=60, capacity_rps=20, max_load=60),
    synth_profile("large", 2, 1.0, base_ms=150, capacity_rps=10, max_load=60),
])
setup = SystemSetup([ModelSetup("small", 1, 1.0), ModelSetup("mid", 1, 1.0), ModelSetup("large", 2, 1.0)])
ctx = RoutingContext(scores, lib, lam=20.0, tau=120.0)

free = optimize_fractions(setup, 0.0, ctx)
print("beta = 0: w =", free.w.round(3), f"score {free.score:.4f}, latency {free.latency:.1f} ms")

# %%
# A larger latency multiplier beta trades score for latency.
for beta in (0.001, 0.005, 0.02):
    res = optimize_fractions(setup, beta, ctx)
    print(f"beta = {beta}: w = {res.w.round(3)}, score {res.score:.4f}, latency {res.latency:.1f} ms")

# %%
# Bisection finds the smallest beta (within epsilon) whose solution meets the
# 120 ms target, which is the least score we have to give up.
search = optimize_beta(setup, ctx, BetaParams.for_target(ctx.tau, steps=8))
for step in search.trace:
    print(f"  beta {step.beta:.5f}  latency {step.latency:7.2f}  {'ok' if step.feasible else 'too slow'}")
print("chosen: w =", search.w_star.round(3), f"score {search.score:.4f}, latency {search.latency:.1f} ms")
