"""Probabilistic sensitivity analysis of the h-index to P and C.

One covariate is swept over a grid while the other is pinned at its
median.  Every retained posterior draw is pushed through the model mean at
every grid value, so parameter uncertainty (and the correlation between
parameters) carries through to the output curve.  The sensitivity index
is ``(h_max - h_min) / h_max`` over the grid.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .dataio import Dataset, percentile
from .mcmc import Chain
from .models import ModelKind, mean_function, param_names, uses_publications

__all__ = [
    "GLOBAL_PERCENTS",
    "LOCAL_FACTORS",
    "GridMode",
    "SensitivityGrid",
    "SensitivityCurve",
    "SIResult",
    "UnsupportedCombination",
    "percentile",
    "build_global_grid",
    "build_local_grid",
    "build_grid",
    "propagate",
    "sensitivity_index",
    "progressive_si",
    "write_curve_csv",
    "read_curve_csv",
    "si_to_dict",
]

GLOBAL_PERCENTS = (5.0, 10.0, 25.0, 50.0, 75.0, 90.0, 95.0)
# -30% .. +30% of the median in 5% steps
LOCAL_FACTORS = tuple(round(0.70 + 0.05 * k, 2) for k in range(13))


class UnsupportedCombination(ValueError):
    """The requested covariate does not enter the model's mean."""


class GridMode(enum.Enum):
    Global = "global"
    Local = "local"


@dataclass(frozen=True)
class SensitivityGrid:
    varied: str  # "P" or "C"
    values: np.ndarray
    fixed_value: float
    mode: GridMode

    def __post_init__(self):
        if self.varied not in ("P", "C"):
            raise ValueError("varied must be 'P' or 'C'")
        values = np.asarray(self.values, dtype=float)
        if values.size == 0:
            raise ValueError("grid is empty")
        if np.any(np.diff(values) < 0):
            raise ValueError("grid values must be non-decreasing")
        object.__setattr__(self, "values", values)

    @property
    def fixed_name(self) -> str:
        return "C" if self.varied == "P" else "P"


def _check_varied(varied: str) -> None:
    if varied not in ("P", "C"):
        raise ValueError("varied must be 'P' or 'C'")


def build_global_grid(data: Dataset, varied: str) -> SensitivityGrid:
    """5/10/25/50/75/90/95th percentiles of ``varied``; other covariate at its median.

    A degenerate dataset (e.g. one journal) yields repeated grid values.
    """
    _check_varied(varied)
    if len(data) == 0:
        raise ValueError("dataset is empty")
    col = data.column(varied)
    other = data.column("C" if varied == "P" else "P")
    values = np.array([percentile(col, p) for p in GLOBAL_PERCENTS])
    return SensitivityGrid(varied, values, percentile(other, 50.0), GridMode.Global)


def build_local_grid(data: Dataset, varied: str) -> SensitivityGrid:
    """Median of ``varied`` scaled by 0.70, 0.75, ..., 1.30 (13 points)."""
    _check_varied(varied)
    if len(data) == 0:
        raise ValueError("dataset is empty")
    med = percentile(data.column(varied), 50.0)
    other = data.column("C" if varied == "P" else "P")
    values = med * np.array(LOCAL_FACTORS)
    return SensitivityGrid(varied, values, percentile(other, 50.0), GridMode.Local)


def build_grid(data: Dataset, varied: str, mode: Union[str, GridMode]) -> SensitivityGrid:
    mode = GridMode(mode)
    if mode is GridMode.Global:
        return build_global_grid(data, varied)
    return build_local_grid(data, varied)


@dataclass(frozen=True)
class SensitivityCurve:
    grid: SensitivityGrid
    h_mean: np.ndarray
    h_q025: np.ndarray
    h_q50: np.ndarray
    h_q975: np.ndarray
    samples: Optional[np.ndarray] = field(default=None, repr=False)  # (draws, grid points)

    def __len__(self) -> int:
        return self.h_mean.size


def propagate(
    chain: Chain,
    kind: ModelKind,
    grid: SensitivityGrid,
    max_draws: Optional[int] = 5000,
) -> SensitivityCurve:
    """Push posterior draws through the model mean at every grid value.

    ``max_draws`` evenly thins the chain first; ``None`` uses every draw.

    Raises
    ------
    UnsupportedCombination
        If P is varied for a model whose mean depends on C only.
    """
    if grid.varied == "P" and not uses_publications(kind):
        raise UnsupportedCombination(f"{kind.label} does not depend on P; vary C instead")
    sub = chain.subsample(max_draws)
    params = [sub.values(name)[:, None] for name in param_names(kind)]
    g = grid.values[None, :]
    fixed = np.full_like(g, grid.fixed_value)
    P, C = (g, fixed) if grid.varied == "P" else (fixed, g)
    samples = mean_function(kind)(P, C, *params)
    q025, q50, q975 = np.quantile(samples, [0.025, 0.5, 0.975], axis=0)
    return SensitivityCurve(grid, samples.mean(axis=0), q025, q50, q975, samples)


def _si(h):
    h = np.asarray(h, dtype=float)
    h_max = float(np.max(h))
    h_min = float(np.min(h))
    if not h_max > 0:
        raise ValueError("h_max must be positive")
    return (h_max - h_min) / h_max, h_max, h_min


def progressive_si(h) -> list[float]:
    """SI over the first 1, 2, ..., n points of an ordered curve.

    A prefix that is still all zero has no spread and counts as 0.
    """
    h = np.asarray(h, dtype=float)
    running_max = np.maximum.accumulate(h)
    running_min = np.minimum.accumulate(h)
    with np.errstate(divide="ignore", invalid="ignore"):
        prog = np.where(running_max > 0, (running_max - running_min) / running_max, 0.0)
    return prog.tolist()


@dataclass(frozen=True)
class SIResult:
    si: float
    h_max: float
    h_min: float
    progressive: list[float]
    si_q025: Optional[float] = None
    si_q975: Optional[float] = None


def sensitivity_index(curve: Union[SensitivityCurve, np.ndarray, list]) -> SIResult:
    """SI over the per-grid-point posterior means.

    When the curve carries per-draw samples, the 2.5/97.5% band of the
    per-draw SI is reported as well.
    """
    h = curve.h_mean if isinstance(curve, SensitivityCurve) else np.asarray(curve, dtype=float)
    si, h_max, h_min = _si(h)
    band = (None, None)
    samples = getattr(curve, "samples", None)
    if samples is not None:
        hi = samples.max(axis=1)
        lo = samples.min(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            per_draw = np.where(hi > 0, (hi - lo) / hi, 0.0)
        a, b = np.quantile(per_draw, [0.025, 0.975])
        band = (float(a), float(b))
    return SIResult(si, h_max, h_min, progressive_si(h), *band)


def write_curve_csv(curve: SensitivityCurve, path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["grid_value", "h_mean", "h_q025", "h_q50", "h_q975"])
        for row in zip(curve.grid.values, curve.h_mean, curve.h_q025, curve.h_q50, curve.h_q975):
            writer.writerow([repr(float(v)) for v in row])


def read_curve_csv(path: Union[str, Path]) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    cols = ("grid_value", "h_mean", "h_q025", "h_q50", "h_q975")
    if not rows or any(c not in rows[0] for c in cols):
        raise ValueError(f"{path}: expected columns {','.join(cols)}")
    return {c: np.array([float(r[c]) for r in rows]) for c in cols}


def si_to_dict(result: SIResult, kind: ModelKind, likelihood: str, grid: SensitivityGrid) -> dict:
    out = {
        "model": kind.value,
        "likelihood": likelihood,
        "varied": grid.varied,
        "mode": grid.mode.value,
        "si": result.si,
        "h_max": result.h_max,
        "h_min": result.h_min,
        "progressive": list(result.progressive),
    }
    if result.si_q025 is not None:
        out["si_draws_q025"] = result.si_q025
        out["si_draws_q975"] = result.si_q975
    return out


def write_si_json(result: SIResult, kind: ModelKind, likelihood: str, grid: SensitivityGrid,
                  path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(si_to_dict(result, kind, likelihood, grid), indent=2) + "\n")
