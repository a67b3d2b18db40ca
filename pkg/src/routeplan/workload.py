"""Prompt-score matrices: loading, writing and synthetic generation.

Row ``j``, column ``i`` of a score matrix holds the router's predicted quality
of model ``i`` on prompt ``j``, a number in ``[0, 1]``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ValidationError

PROMPT_COLUMN = "prompt_id"


@dataclass(frozen=True)
class ScoreMatrix:
    """Immutable N x M table of per-prompt, per-model quality scores."""

    prompts: tuple[str, ...]
    models: tuple[str, ...]
    scores: np.ndarray

    def __post_init__(self):
        scores = np.array(self.scores, dtype=float)
        if scores.ndim != 2:
            raise ValidationError(f"scores must be 2-D, got shape {scores.shape}")
        n, m = scores.shape
        if n < 1 or m < 1:
            raise ValidationError("score matrix needs at least one prompt and one model")
        if len(self.prompts) != n:
            raise ValidationError(f"{len(self.prompts)} prompt ids for {n} score rows")
        if len(self.models) != m:
            raise ValidationError(f"{len(self.models)} model names for {m} score columns")
        if len(set(self.models)) != m:
            raise ValidationError(f"duplicate model names in {list(self.models)}")
        bad = ~((scores >= 0.0) & (scores <= 1.0))
        if bad.any():
            j, i = np.argwhere(bad)[0]
            raise ValidationError(
                f"score {scores[j, i]!r} for model {self.models[i]!r} at row {j} "
                "is outside [0, 1]"
            )
        scores.setflags(write=False)
        object.__setattr__(self, "prompts", tuple(str(p) for p in self.prompts))
        object.__setattr__(self, "models", tuple(str(m_) for m_ in self.models))
        object.__setattr__(self, "scores", scores)

    @property
    def n_prompts(self) -> int:
        return self.scores.shape[0]

    @property
    def n_models(self) -> int:
        return self.scores.shape[1]

    def reorder(self, model_order: Sequence[str]) -> "ScoreMatrix":
        """Return a copy whose columns follow ``model_order``."""
        missing = [m for m in model_order if m not in self.models]
        if missing:
            raise ConfigurationError(f"model column {missing[0]!r} not in score matrix")
        idx = [self.models.index(m) for m in model_order]
        return ScoreMatrix(self.prompts, tuple(model_order), self.scores[:, idx])


def load_scores(path, model_order: Sequence[str]) -> ScoreMatrix:
    """Read a score CSV and return its columns in ``model_order``.

    The first column must be ``prompt_id``; every other column is a model.
    Values outside ``[0, 1]`` are rejected, never clamped.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"score file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = [r for r in reader if r]
    if not header:
        raise ValidationError(f"{path}: empty score file")
    if header[0] != PROMPT_COLUMN:
        raise ConfigurationError(f"{path}: first column must be {PROMPT_COLUMN!r}, got {header[0]!r}")
    if not rows:
        raise ValidationError(f"{path}: score file has a header but no rows")
    if len(model_order) == 0:
        raise ValidationError("model_order is empty")
    for name in model_order:
        if name not in header[1:]:
            raise ConfigurationError(f"{path}: missing model column {name!r}")
    cols = [header.index(name) for name in model_order]

    prompts, values = [], []
    for j, row in enumerate(rows):
        if len(row) != len(header):
            raise ValidationError(f"{path}: row {j} has {len(row)} fields, expected {len(header)}")
        prompts.append(row[0])
        try:
            vals = [float(row[c]) for c in cols]
        except ValueError as exc:
            raise ValidationError(f"{path}: row {j}: {exc}") from None
        for name, v in zip(model_order, vals):
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{path}: row {j}: score {v!r} for {name!r} outside [0, 1]")
        values.append(vals)
    return ScoreMatrix(tuple(prompts), tuple(model_order), np.array(values))


def write_scores(matrix: ScoreMatrix, path) -> None:
    """Write ``matrix`` in the format read by :func:`load_scores`.

    Values use the shortest repr that round-trips, so a reload is bit-identical.
    """
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([PROMPT_COLUMN, *matrix.models])
        for pid, row in zip(matrix.prompts, matrix.scores):
            writer.writerow([pid, *(repr(float(v)) for v in row)])


def synth_scores(n_prompts: int, model_params, seed: int, models: Sequence[str] | None = None) -> ScoreMatrix:
    """Draw an N x M score matrix with column ``i`` i.i.d. ``Beta(a_i, b_i)``.

    ``model_params`` is a sequence of ``(a, b)`` shape pairs, one per model.
    Output depends only on the arguments (seeded generator).
    """
    if n_prompts < 1:
        raise ValidationError(f"n_prompts must be >= 1, got {n_prompts}")
    params = [tuple(float(x) for x in p) for p in model_params]
    if not params:
        raise ValidationError("need at least one model")
    for k, (a, b) in enumerate(params):
        if not (a > 0 and b > 0):
            raise ValidationError(f"Beta shape parameters must be > 0, model {k} has ({a}, {b})")
    if models is None:
        models = [f"m{k}" for k in range(len(params))]
    if len(models) != len(params):
        raise ValidationError("models and model_params differ in length")

    rng = np.random.default_rng(seed)
    cols = [rng.beta(a, b, size=n_prompts) for a, b in params]
    prompts = tuple(f"p{j}" for j in range(n_prompts))
    return ScoreMatrix(prompts, tuple(models), np.column_stack(cols))
