"""Writing a scenario to disk and driving it through the command line.

Run with ``python demos/05_cli_round_trip.py``.
"""
# %%
# The CLI reads one YAML config that points at three CSV files: scores,
# latency profiles and the per-shard memory table.
import json
import subprocess
import sys
import tempfile
from pathlib import Path

from routeplan.scenarios import toy_scenario

work = Path(tempfile.mkdtemp(prefix="routeplan-demo-"))
config = toy_scenario().write(work / "inputs")
print(config.read_text())

# %%
# ``check`` validates inputs, ``plan`` writes plan.json and ``sweep`` writes
# one CSV row per retained setup.
for cmd in ("check", "plan", "sweep"):
    done = subprocess.run([sys.executable, "-m", "routeplan", cmd, str(config), "--out", str(work / "out")],
                          capture_output=True, text=True)
    print(f"$ routeplan {cmd} -> exit {done.returncode}")
    print(done.stderr.strip())

# %%
plan = json.loads((work / "out" / "plan.json").read_text())
print(json.dumps({k: plan[k] for k in ("status", "setup", "routing_fractions", "score", "latency_ms")}, indent=2))
print((work / "out" / "sweep.csv").read_text())
