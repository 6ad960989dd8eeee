"""Sparse dictionary learning and sparsity metrics.

Activations are (n, d) float arrays with one row per token. Dictionaries are
(d, m) arrays of unit columns and coefficients are dense (m, n) arrays.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from . import _core
from ._core import (
    FormatError,
    NumericalError,
    SolverConfig,
    StepRule,
    alpha_step,
    center,
    compute_metrics,
    gen_gaussian,
    gen_heavy_tailed,
    gen_rademacher,
    gen_sparse_linear,
    normalize_dictionary,
    normalize_for_loss,
    objective,
    set_log_level,
)

__all__ = [
    "FormatError",
    "NumericalError",
    "SolverConfig",
    "StepRule",
    "alpha_step",
    "center",
    "compute_metrics",
    "fit",
    "gen_gaussian",
    "gen_heavy_tailed",
    "gen_rademacher",
    "gen_sparse_linear",
    "normalize_dictionary",
    "normalize_for_loss",
    "objective",
    "read_activations",
    "run_experiment",
    "set_log_level",
    "write_activations",
]


def fit(x: np.ndarray, config: Optional[SolverConfig] = None, initial: Optional[np.ndarray] = None, **overrides: Any) -> dict:
    """Fits a dictionary to the rows of ``x``.

    Without a config the experiment defaults are used. Keyword overrides set
    config attributes by name; ``lam`` maps to ``lambda_``.
    """
    cfg = config if config is not None else SolverConfig.experiment_default()
    for key, value in overrides.items():
        attr = "lambda_" if key == "lam" else key
        if not hasattr(cfg, attr):
            raise TypeError(f"unknown solver setting '{key}'")
        setattr(cfg, attr, value)
    return _core.fit(np.ascontiguousarray(x, dtype=np.float64), cfg, initial)


def read_activations(path: str | Path) -> tuple[np.ndarray, Optional[list[str]], dict]:
    """Returns ``(x, labels, metadata)`` for an ACTV file."""
    x, labels = _core.read_activations(str(path))
    return x, labels, json.loads(_core.read_metadata_json(str(path)))


def write_activations(
    path: str | Path,
    x: np.ndarray,
    labels: Optional[Sequence[str]] = None,
    metadata: Optional[Mapping[str, Any]] = None,
) -> None:
    _core.write_activations(
        str(path),
        np.ascontiguousarray(x, dtype=np.float64),
        list(labels) if labels is not None else None,
        json.dumps(dict(metadata or {})),
    )


def run_experiment(kind: str, **settings: Any) -> dict:
    """Runs an experiment driver; settings use the config-file keys."""
    lines = []
    for key, value in settings.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return json.loads(_core.run_experiment_json(kind, "\n".join(lines)))
