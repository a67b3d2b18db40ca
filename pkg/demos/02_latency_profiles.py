"""Piecewise-linear latency curves and the traffic-weighted system latency.

Run with ``python demos/02_latency_profiles.py``.
"""
# %%
# A profile is a handful of measured (load, latency) knots for one model at
# one tensor-parallel degree and compute fraction.  Between knots we
# interpolate; past the last knot we keep the final slope.
import numpy as np

from routeplan import LatencyProfile, ProfileLibrary, SystemSetup, ModelSetup
from routeplan import latency_at, latency_slope, system_latency, system_latency_grad
from routeplan.latency import out_of_range, synth_profile

small = LatencyProfile("small", 1, 1.0, "TTFT", np.array([0.0, 10, 20, 30]), np.array([30.0, 35, 45, 80]))
for load in (0, 5, 10, 25, 30, 40):
    print(f"load {load:>2} rps: {latency_at(small, load):6.1f} ms, slope {latency_slope(small, load):.2f}")

# %%
# Halving the compute fraction makes the same model slower and saturate
# earlier.  ``synth_profile`` produces such curves for illustration.
big_full = synth_profile("big", 2, 1.0, base_ms=120, capacity_rps=10)
big_half = synth_profile("big", 2, 0.5, base_ms=120, capacity_rps=10)
for load in (1, 4, 8):
    print(f"big at {load} rps: rho=1.0 {latency_at(big_full, load):6.1f} ms, rho=0.5 {latency_at(big_half, load):6.1f} ms")

# %%
# System latency averages per-model latency weighted by routing fraction,
# each model evaluated at its own share of the arrival rate.
lib = ProfileLibrary([small, big_full])
setup = SystemSetup([ModelSetup("small", 1, 1.0), ModelSetup("big", 2, 1.0)])
lam = 20.0
for w_big in (0.0, 0.25, 0.5):
    w = np.array([1 - w_big, w_big])
    print(f"w = {w}: L = {system_latency(lib, setup, w, lam, 'TTFT'):7.2f} ms, "
          f"dL/dw = {system_latency_grad(lib, setup, w, lam, 'TTFT').round(1)}, "
          f"out of range: {out_of_range(lib, setup, w, lam, 'TTFT').tolist()}")
