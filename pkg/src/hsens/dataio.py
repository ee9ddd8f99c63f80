"""Journal (h, P, C) datasets: CSV ingestion, descriptive tables, synthesis."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.special import ndtr

from .likelihood import ObsKind, ObservationModel
from .models import Covariates, ModelKind, ParamVector, evaluate_mean

log = logging.getLogger(__name__)

HEADER = ("journal", "h", "P", "C")

SUMMARY_ROWS = ("min", "5%", "10%", "25%", "median", "75%", "90%", "95%", "max")
SUMMARY_PERCENTS = (0.0, 5.0, 10.0, 25.0, 50.0, 75.0, 90.0, 95.0, 100.0)


class DataError(ValueError):
    """Base class for dataset validation failures."""


class MissingColumnError(DataError):
    pass


class NonNumericError(DataError):
    pass


class RangeError(DataError):
    pass


class DuplicateNameError(DataError):
    pass


class DataWarning(UserWarning):
    pass


@dataclass(frozen=True)
class JournalRecord:
    name: str
    h: float
    P: float
    C: float


@dataclass(frozen=True)
class Dataset:
    records: tuple[JournalRecord, ...]
    field_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        names = [r.name for r in self.records]
        if len(set(names)) != len(names):
            seen = set()
            for i, n in enumerate(names, start=1):
                if n in seen:
                    raise DuplicateNameError(f"duplicate journal name {n!r} at row {i}")
                seen.add(n)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def h(self) -> np.ndarray:
        return np.array([r.h for r in self.records], dtype=float)

    @property
    def P(self) -> np.ndarray:
        return np.array([r.P for r in self.records], dtype=float)

    @property
    def C(self) -> np.ndarray:
        return np.array([r.C for r in self.records], dtype=float)

    @property
    def h_is_integral(self) -> bool:
        h = self.h
        return bool(np.all(h == np.rint(h)))

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def sha256(self) -> str:
        return hashlib.sha256(to_csv_text(self).encode("utf-8")).hexdigest()

    def union(self, other: "Dataset") -> "Dataset":
        return Dataset(self.records + other.records, self.field_label)


def _format_number(x: float) -> str:
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def to_csv_text(data: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in data.records:
        writer.writerow([r.name, _format_number(r.h), _format_number(r.P), _format_number(r.C)])
    return buf.getvalue()


def save_csv(data: Dataset, path: Union[str, Path]) -> None:
    Path(path).write_text(to_csv_text(data), encoding="utf-8")


def _parse_number(text: str, column: str, row: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonNumericError(f"non-numeric {column} {text!r} at row {row}") from None
    if not math.isfinite(value):
        raise NonNumericError(f"non-finite {column} {text!r} at row {row}")
    return value


def check_record(rec: JournalRecord, row: int) -> list[str]:
    """Raise on impossible values; return soft warnings for dubious ones."""
    if rec.h < 0:
        raise RangeError(f"negative h at row {row}")
    if rec.C < 0:
        raise RangeError(f"negative C at row {row}")
    if rec.P < 1:
        raise RangeError(f"P < 1 at row {row}")
    if rec.h > rec.P:
        raise RangeError(f"h exceeds P at row {row}")
    if rec.h >= 1 and rec.C < rec.h**2:
        return [f"C < h^2 at row {row} ({rec.name})"]
    return []


def parse_csv_text(text: str, field_label: str = "") -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MissingColumnError("empty file: header `journal,h,P,C` required") from None
    missing = [c for c in HEADER if c not in header]
    if missing:
        raise MissingColumnError(f"missing column(s) {', '.join(missing)} in header")
    idx = {c: header.index(c) for c in HEADER}

    records = []
    seen = set()
    soft = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise MissingColumnError(f"row {row_no} has {len(row)} cells, expected {len(header)}")
        name = row[idx["journal"]].strip()
        values = {c: _parse_number(row[idx[c]].strip(), c, row_no) for c in ("h", "P", "C")}
        rec = JournalRecord(name, values["h"], values["P"], values["C"])
        soft.extend(check_record(rec, row_no))
        if name in seen:
            raise DuplicateNameError(f"duplicate journal name {name!r} at row {row_no}")
        seen.add(name)
        records.append(rec)
    if soft:
        more = f" (+{len(soft) - 5} more)" if len(soft) > 5 else ""
        warnings.warn("; ".join(soft[:5]) + more, DataWarning, stacklevel=3)
    return Dataset(tuple(records), field_label)


def load_csv(path: Union[str, Path], field_label: str = "") -> Dataset:
    """Read a ``journal,h,P,C`` CSV.  Row order is preserved."""
    path = Path(path)
    return parse_csv_text(path.read_text(encoding="utf-8"), field_label or path.stem)


def percentile(values, p: float) -> float:
    """Type-7 percentile: linear interpolation between order statistics."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("percentile of an empty sequence")
    if not 0.0 <= p <= 100.0:
        raise ValueError("p must lie in [0, 100]")
    pos = (n - 1) * p / 100.0
    lo = int(math.floor(pos))
    hi = min(lo + 1, n - 1)
    return float(x[lo] + (pos - lo) * (x[hi] - x[lo]))


@dataclass(frozen=True)
class SummaryTable:
    """Percentile table laid out like the published descriptive statistics."""

    values: np.ndarray  # (9, 3): rows SUMMARY_ROWS, columns h, P, C
    rows: tuple[str, ...] = SUMMARY_ROWS
    columns: tuple[str, ...] = ("h", "P", "C")

    def to_dict(self) -> dict:
        return {
            col: {row: float(self.values[i, j]) for i, row in enumerate(self.rows)}
            for j, col in enumerate(self.columns)
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        cells = [["", *self.columns]]
        for i, row in enumerate(self.rows):
            cells.append([row, *(f"{v:g}" for v in self.values[i])])
        widths = [max(len(r[k]) for r in cells) for k in range(len(cells[0]))]
        lines = []
        for r in cells:
            lines.append("  ".join(c.ljust(widths[0]) if k == 0 else c.rjust(widths[k])
                                   for k, c in enumerate(r)))
        return "\n".join(lines)


def summarize(data: Dataset) -> SummaryTable:
    if len(data) == 0:
        raise ValueError("cannot summarize an empty dataset")
    cols = [data.h, data.P, data.C]
    values = np.array([[percentile(c, p) for c in cols] for p in SUMMARY_PERCENTS])
    return SummaryTable(values)


# Published descriptive statistics (min, 5, 10, 25, 50, 75, 90, 95, max).
ECOLOGY_TABLE = {
    "h": (2, 7, 11.9, 25.25, 45.5, 83.75, 122, 153.3, 246),
    "P": (48, 145.4, 215, 565, 1351, 2875.5, 4631.8, 6560.6, 8678),
    "C": (19, 291, 754.6, 3651.5, 14917.5, 46843, 143452.1, 193911.8, 456498),
}
FORESTRY_TABLE = {
    "h": (1, 2, 3, 4.25, 19, 39, 73.7, 85.8, 101),
    "P": (18, 46.9, 69, 173.25, 405.5, 1616, 3173.5, 6116, 8374),
    "C": (3, 20.65, 51.6, 122.5, 2435, 13743.75, 44343.2, 63350.15, 135245),
}


@dataclass(frozen=True)
class LogUniformCovariates:
    """Independent log-uniform P and C within fixed ranges."""

    P_min: float
    P_max: float
    C_min: float
    C_max: float

    def __post_init__(self):
        if not (0 < self.P_min <= self.P_max) or not (0 < self.C_min <= self.C_max):
            raise ValueError("invalid covariate ranges")
        if self.P_min < 1:
            raise ValueError("P_min must be at least 1")

    @classmethod
    def from_table(cls, table: dict) -> "LogUniformCovariates":
        return cls(table["P"][0], table["P"][-1], table["C"][0], table["C"][-1])

    @property
    def bounds(self):
        return (self.P_min, self.P_max, self.C_min, self.C_max)

    def draw(self, rng: np.random.Generator, n: int):
        P = np.exp(rng.uniform(np.log(self.P_min), np.log(self.P_max), n))
        C = np.exp(rng.uniform(np.log(self.C_min), np.log(self.C_max), n))
        return P, C


@dataclass(frozen=True)
class QuantileCovariates:
    """P and C drawn from piecewise log-linear quantile functions.

    Knots are a percentile table (as in ``ECOLOGY_TABLE``); the two
    covariates are coupled through a Gaussian copula with correlation
    ``rho`` so that large journals tend to be highly cited.
    """

    P_knots: Sequence[float]
    C_knots: Sequence[float]
    rho: float = 0.8
    percents: Sequence[float] = SUMMARY_PERCENTS

    def __post_init__(self):
        for knots in (self.P_knots, self.C_knots):
            if len(knots) != len(self.percents) or np.any(np.diff(knots) < 0) or knots[0] <= 0:
                raise ValueError("knots must be positive, non-decreasing, one per percent")
        if self.P_knots[0] < 1:
            raise ValueError("P knots must be at least 1")
        if not -1 < self.rho < 1:
            raise ValueError("rho must lie in (-1, 1)")

    @classmethod
    def from_table(cls, table: dict, rho: float = 0.8) -> "QuantileCovariates":
        return cls(tuple(table["P"]), tuple(table["C"]), rho)

    @property
    def bounds(self):
        return (self.P_knots[0], self.P_knots[-1], self.C_knots[0], self.C_knots[-1])

    def draw(self, rng: np.random.Generator, n: int):
        z1 = rng.standard_normal(n)
        z2 = self.rho * z1 + math.sqrt(1.0 - self.rho**2) * rng.standard_normal(n)
        q = np.asarray(self.percents) / 100.0
        P = np.exp(np.interp(ndtr(z1), q, np.log(self.P_knots)))
        C = np.exp(np.interp(ndtr(z2), q, np.log(self.C_knots)))
        return P, C


def _draw_h(rng, mu, obs: ObservationModel):
    if obs.kind is ObsKind.TruncGaussian:
        # inverse-cdf draw from N(mu, sigma) truncated to [0, inf)
        from scipy.special import ndtri

        lo = ndtr(-mu / obs.sigma)
        u = lo + (1.0 - lo) * rng.random(mu.shape)
        x = mu + obs.sigma * ndtri(np.clip(u, 1e-300, 1.0 - 1e-16))
        return np.rint(np.maximum(x, 0.0))
    q = obs.r / (obs.r + mu)
    return rng.negative_binomial(obs.r, q).astype(float)


def synthesize(
    kind: ModelKind,
    params: ParamVector,
    obs: ObservationModel,
    n: int,
    cov_gen,
    seed: int,
    field_label: str = "synthetic",
    max_tries: int = 1000,
) -> Dataset:
    """Simulate ``n`` journals from a fitted-model configuration.

    Covariate pairs whose model mean exceeds P are redrawn, and h draws
    above P are redrawn, so every record satisfies ``h <= P``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    params.validate(kind)
    rng = np.random.default_rng(seed)
    P_out = np.empty(0)
    C_out = np.empty(0)
    mu_out = np.empty(0)
    for _ in range(max_tries):
        P, C = cov_gen.draw(rng, n)
        mu = np.asarray(evaluate_mean(kind, params, Covariates(P, C)), dtype=float)
        ok = mu <= P
        P_out = np.concatenate([P_out, P[ok]])
        C_out = np.concatenate([C_out, C[ok]])
        mu_out = np.concatenate([mu_out, mu[ok]])
        if P_out.size >= n:
            break
    else:
        raise ValueError("could not draw covariates with model mean <= P")
    P, C, mu = P_out[:n], C_out[:n], mu_out[:n]

    h = _draw_h(rng, mu, obs)
    for _ in range(max_tries):
        bad = h > P
        if not bad.any():
            break
        h[bad] = _draw_h(rng, mu[bad], obs)
    else:
        raise ValueError("could not draw h <= P")

    width = len(str(n))
    records = tuple(
        JournalRecord(f"J{i + 1:0{width}d}", float(h[i]), float(P[i]), float(C[i])) for i in range(n)
    )
    return Dataset(records, field_label)
