"""Theoretical h-index mean functions of publications (P) and citations (C).

Four model kinds are supported.  The two Hirsch kinds share one mean
function and differ only in the observation model they are paired with.

    Egghe-Rousseau   h = ((alpha - 2)/(alpha - 1) * C/(alpha - 2)) ** (1/alpha)
    Glanzel-Schubert h = c * P**(1/(alpha + 1)) * (C/P)**(alpha/(alpha + 1))
    Hirsch (3-par.)  h = (C/alpha) ** (1/(a*b))

All functions broadcast over numpy arrays so that a whole posterior sample
can be pushed through a model in one call.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ModelKind",
    "ParamVector",
    "Covariates",
    "DomainError",
    "evaluate_mean",
    "param_bounds",
    "param_names",
    "mean_function",
    "uses_publications",
]


class DomainError(ValueError):
    """Raised when parameters or covariates fall outside a model's support."""


class ModelKind(enum.Enum):
    EggheRousseau = "er"
    GlanzelSchubert = "gs"
    HirschGaussian = "h-gaussian"
    HirschNB = "h-nb"

    @property
    def family(self) -> str:
        """Mean-function family: ``"er"``, ``"gs"`` or ``"h"``."""
        return "h" if self in (ModelKind.HirschGaussian, ModelKind.HirschNB) else self.value

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_family(cls, family: str, likelihood: str) -> "ModelKind":
        """Resolve a CLI-style ``(family, likelihood)`` pair to a kind."""
        family = family.lower()
        if family == "er":
            return cls.EggheRousseau
        if family == "gs":
            return cls.GlanzelSchubert
        if family == "h":
            return cls.HirschNB if likelihood == "nb" else cls.HirschGaussian
        raise ValueError(f"unknown model family {family!r}")


_LABELS = {
    ModelKind.EggheRousseau: "Egghe-Rousseau",
    ModelKind.GlanzelSchubert: "Glanzel-Schubert",
    ModelKind.HirschGaussian: "Three-parameter Hirsch (Gaussian)",
    ModelKind.HirschNB: "Three-parameter Hirsch (NB)",
}

_BOUNDS = {
    ModelKind.EggheRousseau: [("alpha", 2.0)],
    ModelKind.GlanzelSchubert: [("alpha", 1.0), ("c", 0.0)],
    ModelKind.HirschGaussian: [("alpha", 0.0), ("a", 0.0), ("b", 0.0)],
    ModelKind.HirschNB: [("alpha", 0.0), ("a", 0.0), ("b", 0.0)],
}


def param_bounds(kind: ModelKind) -> list[tuple[str, float]]:
    """Lower truncation bound of every mean-function parameter, in order."""
    return list(_BOUNDS[kind])


def param_names(kind: ModelKind) -> list[str]:
    return [name for name, _ in _BOUNDS[kind]]


def uses_publications(kind: ModelKind) -> bool:
    """Only Glanzel-Schubert depends on P; the others are functions of C alone."""
    return kind is ModelKind.GlanzelSchubert


@dataclass(frozen=True)
class ParamVector:
    """Mean-function parameters.  Entries unused by a model kind stay ``None``.

    Fields may hold scalars or equally shaped arrays (one entry per
    posterior draw).
    """

    alpha: float
    c: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None

    @classmethod
    def from_mapping(cls, kind: ModelKind, values) -> "ParamVector":
        return cls(**{name: values[name] for name in param_names(kind)})

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    def validate(self, kind: ModelKind) -> None:
        names = set(param_names(kind))
        for field in ("alpha", "c", "a", "b"):
            value = getattr(self, field)
            if field in names and value is None:
                raise DomainError(f"{kind.label} requires parameter {field}")
            if field not in names and value is not None:
                raise DomainError(f"{kind.label} does not use parameter {field}")
        for name, lower in _BOUNDS[kind]:
            value = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(value)) or np.any(value <= lower):
                raise DomainError(f"{kind.label}: {name} must exceed {lower:g}")


@dataclass(frozen=True)
class Covariates:
    P: float
    C: float

    def validate(self) -> None:
        P = np.asarray(self.P, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if np.any(~(P > 0)):
            raise DomainError("publications P must be positive")
        if np.any(~(C >= 0)):
            raise DomainError("citations C must be non-negative")


def _er(P, C, alpha):
    # A = C/(alpha - 2) is folded in; the factor (alpha - 2) cancels.
    return (C / (alpha - 1.0)) ** (1.0 / alpha)


def _gs(P, C, alpha, c):
    return c * P ** (1.0 / (alpha + 1.0)) * (C / P) ** (alpha / (alpha + 1.0))


def _hirsch(P, C, alpha, a, b):
    return (C / alpha) ** (1.0 / (a * b))


_MEANS: dict[ModelKind, Callable] = {
    ModelKind.EggheRousseau: _er,
    ModelKind.GlanzelSchubert: _gs,
    ModelKind.HirschGaussian: _hirsch,
    ModelKind.HirschNB: _hirsch,
}


def mean_function(kind: ModelKind) -> Callable:
    """Unchecked ``f(P, C, *params)`` in :func:`param_names` order.

    Used in sampler hot loops where range checks are done elsewhere.
    """
    return _MEANS[kind]


def evaluate_mean(kind: ModelKind, params: ParamVector, cov: Covariates):
    """Model mean h-index for the given parameters and covariates.

    Parameters and covariates broadcast against each other.  Returns a
    Python float when every input is scalar.

    Raises
    ------
    DomainError
        If a parameter is outside the model's range or the covariates are
        invalid (P <= 0 or C < 0).
    """
    params.validate(kind)
    cov.validate()
    P = np.asarray(cov.P, dtype=float)
    C = np.asarray(cov.C, dtype=float)
    args = [np.asarray(getattr(params, name), dtype=float) for name in param_names(kind)]
    mu = _MEANS[kind](P, C, *args)
    if np.ndim(mu) == 0:
        return float(mu)
    return mu
