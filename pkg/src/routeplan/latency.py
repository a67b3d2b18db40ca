"""Setup-specific piecewise-linear latency models.

Each profile maps per-model load (requests/s) to a latency metric (ms) by
linear interpolation between profiled knots.  Beyond the last knot the final
segment is extended; loads past ``kappa`` times the profiled range are flagged
so callers can reject plans that lean on unprofiled regimes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigurationError, ValidationError

METRICS = ("TTFT", "TPOT", "E2E")
PROFILE_COLUMNS = ("model", "tp", "rho", "metric", "load_rps", "latency_ms")
DEFAULT_KAPPA = 1.25


def rho_key(rho: float) -> float:
    """Canonical float for compute fractions so 0.1 * 3 and 0.3 hash alike."""
    return round(float(rho), 9)


@dataclass(frozen=True)
class LatencyProfile:
    model: str
    tp: int
    rho: float
    metric: str
    loads: np.ndarray
    latencies: np.ndarray

    def __post_init__(self):
        loads = np.array(self.loads, dtype=float)
        lat = np.array(self.latencies, dtype=float)
        label = f"profile ({self.model}, tp={self.tp}, rho={self.rho}, {self.metric})"
        if loads.ndim != 1 or loads.shape != lat.shape:
            raise ValidationError(f"{label}: loads and latencies must be equal-length 1-D")
        if loads.size < 2:
            raise ValidationError(f"{label}: needs at least 2 knots, got {loads.size}")
        if not (np.all(np.isfinite(loads)) and np.all(np.isfinite(lat))):
            raise ValidationError(f"{label}: non-finite knot")
        if np.any(np.diff(loads) <= 0):
            raise ValidationError(f"{label}: knot loads must be strictly increasing")
        if loads[0] < 0 or np.any(lat < 0):
            raise ValidationError(f"{label}: loads and latencies must be nonnegative")
        if not 0 < self.rho <= 1:
            raise ValidationError(f"{label}: rho must lie in (0, 1]")
        if int(self.tp) < 1:
            raise ValidationError(f"{label}: tp must be >= 1")
        loads.setflags(write=False)
        lat.setflags(write=False)
        object.__setattr__(self, "tp", int(self.tp))
        object.__setattr__(self, "rho", rho_key(self.rho))
        object.__setattr__(self, "metric", str(self.metric).upper())
        object.__setattr__(self, "loads", loads)
        object.__setattr__(self, "latencies", lat)

    @property
    def key(self):
        return (self.model, self.tp, self.rho, self.metric)

    @property
    def max_load(self) -> float:
        return float(self.loads[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.latencies) / np.diff(self.loads)


class ProfileLibrary(Mapping):
    """Read-only mapping ``(model, tp, rho, metric) -> LatencyProfile``."""

    def __init__(self, profiles: Iterable[LatencyProfile] = ()):
        table = {}
        for p in profiles:
            if p.key in table:
                raise ValidationError(f"duplicate profile key {p.key}")
            table[p.key] = p
        self._table = table

    @staticmethod
    def make_key(model: str, tp: int, rho: float, metric: str):
        return (str(model), int(tp), rho_key(rho), str(metric).upper())

    def get_profile(self, model, tp, rho, metric) -> LatencyProfile:
        key = self.make_key(model, tp, rho, metric)
        try:
            return self._table[key]
        except KeyError:
            raise ConfigurationError(
                f"no latency profile for model={key[0]!r} tp={key[1]} rho={key[2]} metric={key[3]}"
            ) from None

    def __getitem__(self, key):
        return self._table[self.make_key(*key)]

    def __iter__(self):
        return iter(self._table)

    def __len__(self):
        return len(self._table)

    def __repr__(self):
        return f"ProfileLibrary({len(self)} profiles)"


def load_profiles(path, pad_zero: bool = True) -> ProfileLibrary:
    """Parse a profile CSV (``model,tp,rho,metric,load_rps,latency_ms``).

    Rows are grouped per key and sorted by load.  When a profile's first
    measured load is above zero and ``pad_zero`` is set, a knot at load 0
    repeating the lowest-load latency is prepended.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"profile file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValidationError(f"{path}: empty profile file")
        missing = [c for c in PROFILE_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ConfigurationError(f"{path}: missing column {missing[0]!r}")
        groups: dict[tuple, dict[float, float]] = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                key = ProfileLibrary.make_key(row["model"], int(row["tp"]), float(row["rho"]), row["metric"])
                load, lat = float(row["load_rps"]), float(row["latency_ms"])
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            knots = groups.setdefault(key, {})
            if load in knots:
                raise ValidationError(f"{path}:{lineno}: duplicate load {load} for {key}")
            knots[load] = lat

    profiles = []
    for (model, tp, rho, metric), knots in groups.items():
        if len(knots) < 2:
            raise ValidationError(f"{path}: profile {(model, tp, rho, metric)} has fewer than 2 knots")
        loads = sorted(knots)
        lats = [knots[x] for x in loads]
        if pad_zero and loads[0] > 0:
            loads.insert(0, 0.0)
            lats.insert(0, lats[0])
        profiles.append(LatencyProfile(model, tp, rho, metric, np.array(loads), np.array(lats)))
    return ProfileLibrary(profiles)


def write_profiles(lib: Iterable[LatencyProfile] | ProfileLibrary, path) -> None:
    profiles = lib.values() if isinstance(lib, ProfileLibrary) else lib
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROFILE_COLUMNS)
        for p in profiles:
            for x, y in zip(p.loads, p.latencies):
                writer.writerow([p.model, p.tp, repr(p.rho), p.metric, repr(float(x)), repr(float(y))])


def _check_load(load: float) -> float:
    load = float(load)
    if not load >= 0:
        raise ValidationError(f"load must be >= 0, got {load}")
    return load


def latency_at(profile: LatencyProfile, load: float) -> float:
    load = _check_load(load)
    x, y = profile.loads, profile.latencies
    if load <= x[0]:
        return float(y[0])
    if load >= x[-1]:
        return float(y[-1] + (y[-1] - y[-2]) / (x[-1] - x[-2]) * (load - x[-1]))
    return float(np.interp(load, x, y))


def latency_slope(profile: LatencyProfile, load: float) -> float:
    """Slope of the active segment; at a knot the segment to its right."""
    load = _check_load(load)
    x = profile.loads
    if load < x[0]:
        return 0.0
    seg = int(np.searchsorted(x, load, side="right")) - 1
    return float(profile.slopes[min(seg, x.size - 2)])


def _profiles_for(lib: ProfileLibrary, setup, metric: str):
    return [lib.get_profile(ms.model, ms.tp, ms.rho, metric) for ms in setup]


def _fractions(w, m: int) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape[0] != m:
        raise ValidationError(f"routing fractions have length {w.shape[0]}, setup has {m} models")
    return w


def system_latency(lib: ProfileLibrary, setup, w, lam: float, metric: str) -> float:
    """Traffic-weighted latency ``sum_i w_i * l_i(lam * w_i)``."""
    profiles = _profiles_for(lib, setup, metric)
    w = _fractions(w, len(profiles))
    total = 0.0
    for p, wi in zip(profiles, w):
        if wi != 0.0:
            total += wi * latency_at(p, lam * wi)
    return float(total)


def system_latency_grad(lib: ProfileLibrary, setup, w, lam: float, metric: str) -> np.ndarray:
    profiles = _profiles_for(lib, setup, metric)
    w = _fractions(w, len(profiles))
    grad = np.empty(len(profiles))
    for i, (p, wi) in enumerate(zip(profiles, w)):
        load = lam * max(wi, 0.0)
        grad[i] = latency_at(p, load) + load * latency_slope(p, load)
    return grad


def model_loads(w, lam: float) -> np.ndarray:
    return lam * np.asarray(w, dtype=float)


def out_of_range(lib: ProfileLibrary, setup, w, lam: float, metric: str, kappa: float = DEFAULT_KAPPA) -> np.ndarray:
    """Per-model flag: load exceeds ``kappa`` times the last profiled load."""
    profiles = _profiles_for(lib, setup, metric)
    loads = model_loads(_fractions(w, len(profiles)), lam)
    return np.array([load > kappa * p.max_load for p, load in zip(profiles, loads)])


def synth_profile(model: str, tp: int, rho: float, metric: str = "TTFT", *, base_ms: float,
                  capacity_rps: float, n_knots: int = 8, max_load: float | None = None,
                  tp_gain: float = 0.6) -> LatencyProfile:
    """Illustrative latency curve that rises steeply as load nears capacity.

    Capacity scales with ``rho * tp ** tp_gain`` and the idle latency with its
    inverse.  Only meant to produce plausible demo and test data.
    """
    speed = rho * tp ** tp_gain
    cap = capacity_rps * speed
    idle = base_ms / speed
    top = max_load if max_load is not None else 1.5 * cap
    loads = np.linspace(0.0, top, n_knots)
    util = np.minimum(loads / cap, 0.95)
    lat = idle / (1.0 - util)
    return LatencyProfile(model, tp, rho, metric, loads, lat)
