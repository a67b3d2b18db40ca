"""Enumerating GPU setups, pruning them, and comparing what each can achieve.

Run with ``python demos/04_setup_sweep.py`` (about half a minute).
"""
# %%
# Each model picks a tensor-parallel degree and a compute fraction.  Most
# combinations either leave GPUs idle or ask for more than we have; FFD
# placement with one shard per model per GPU then filters the rest.
import numpy as np

from routeplan import BetaParams, PGAParams, compute_demand, select_setup
from routeplan.scenarios import heterogeneous_scenario
from routeplan.setup_search import retained_setups

sc = heterogeneous_scenario(n_prompts=60)
kept, total, rejects = retained_setups(sc.space, sc.n_gpus, sc.rho_min, sc.memory)
print(f"{total} candidate setups, {len(kept)} retained")
for reason, count in rejects.items():
    print(f"  {reason.value:<22}{count}")
print("first retained:", kept[0].label(), "demand", compute_demand(kept[0]))

# %%
# Every retained setup gets its own beta search.  Fewer PGA iterations keep
# the demo quick; the spread between setups is the point here.
params = BetaParams.for_target(sc.latency_target, PGAParams(max_iter=60), steps=5)
plan, records = select_setup(sc.space, sc.context(), params)
feasible = sorted((r for r in records if r.feasible), key=lambda r: -r.score)
print(f"{len(feasible)} of {len(records)} setups meet {sc.latency_target} ms")
print("best: ", feasible[0].setup.label(), f"score {feasible[0].score:.4f}")
print("worst:", feasible[-1].setup.label(), f"score {feasible[-1].score:.4f}")
print(f"best / worst = {feasible[0].score / feasible[-1].score:.2f}")

# %%
# The plan is the best feasible record; its routing split comes with it.
print("plan:", plan.setup.label())
print("w =", np.round(plan.w, 3), f"latency {plan.latency:.1f} ms")
