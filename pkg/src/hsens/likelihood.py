"""Observation models linking a model mean to the observed h-index."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln, log_ndtr

from .models import Covariates, DomainError, ModelKind, ParamVector, evaluate_mean

__all__ = [
    "ObsKind",
    "ObservationModel",
    "log_density_trunc_gaussian",
    "log_pmf_negbinom",
    "log_likelihood_terms",
    "deviance",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class ObsKind(enum.Enum):
    TruncGaussian = "gaussian"
    NegBinomial = "nb"

    @property
    def param_name(self) -> str:
        """Name of the noise parameter sampled alongside the mean parameters."""
        return "tau" if self is ObsKind.TruncGaussian else "r"


@dataclass(frozen=True)
class ObservationModel:
    kind: ObsKind
    sigma: Optional[float] = None
    r: Optional[float] = None

    def __post_init__(self):
        if self.kind is ObsKind.TruncGaussian:
            if self.sigma is None or self.r is not None:
                raise ValueError("TruncGaussian needs sigma and no r")
            if not self.sigma > 0:
                raise DomainError("sigma must be positive")
        else:
            if self.r is None or self.sigma is not None:
                raise ValueError("NegBinomial needs r and no sigma")
            if not self.r > 0:
                raise DomainError("r must be positive")

    @classmethod
    def gaussian(cls, sigma: float) -> "ObservationModel":
        return cls(ObsKind.TruncGaussian, sigma=sigma)

    @classmethod
    def negbinom(cls, r: float) -> "ObservationModel":
        return cls(ObsKind.NegBinomial, r=r)

    @classmethod
    def from_noise_param(cls, kind: ObsKind, value: float) -> "ObservationModel":
        """Build from the sampled noise parameter (precision tau, or r)."""
        if kind is ObsKind.TruncGaussian:
            return cls.gaussian(1.0 / math.sqrt(value))
        return cls.negbinom(value)

    @property
    def tau(self) -> Optional[float]:
        return None if self.sigma is None else 1.0 / self.sigma**2

    @property
    def noise_param(self) -> float:
        return self.tau if self.kind is ObsKind.TruncGaussian else self.r


def _trunc_gaussian(h, mu, sigma):
    z = (h - mu) / sigma
    return -0.5 * z * z - _LOG_SQRT_2PI - np.log(sigma) - log_ndtr(mu / sigma)


def _negbinom(h, mu, r, log_h_factorial=None):
    if log_h_factorial is None:
        log_h_factorial = gammaln(h + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_q = np.log(r) - np.log(r + mu)
        log_1mq = np.log(mu) - np.log(r + mu)
        out = gammaln(h + r) - gammaln(r) - log_h_factorial + r * log_q + h * log_1mq
    # mu == 0 is a point mass at zero
    return np.where(mu > 0, out, np.where(h == 0, 0.0, -np.inf))


def log_density_trunc_gaussian(h, mu, sigma):
    """Log density of a Gaussian(mu, sigma) truncated below at zero.

    ``log(phi((h - mu)/sigma)/sigma) - log(1 - Phi(-mu/sigma))``.  The
    complement is evaluated as ``Phi(mu/sigma)`` through ``log_ndtr`` so
    that it stays accurate deep in the tail.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0)):
        raise DomainError("sigma must be positive")
    out = _trunc_gaussian(np.asarray(h, dtype=float), np.asarray(mu, dtype=float), sigma)
    return float(out) if np.ndim(out) == 0 else out


def log_pmf_negbinom(h, mu, r):
    """Negative-binomial log pmf in mean/dispersion form.

    With ``q = r/(r + mu)`` the mean ``r(1 - q)/q`` equals ``mu`` and the
    variance is ``mu + mu**2/r``.
    """
    h = np.asarray(h, dtype=float)
    mu = np.asarray(mu, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(h < 0) or np.any(h != np.floor(h)):
        raise DomainError("h must be a non-negative integer")
    if np.any(~(mu > 0)):
        raise DomainError("mu must be positive")
    if np.any(~(r > 0)):
        raise DomainError("r must be positive")
    out = _negbinom(h, mu, r)
    return float(out) if np.ndim(out) == 0 else out


def log_likelihood_terms(mu, h, obs: ObservationModel):
    """Per-record log-likelihood for means ``mu`` and observations ``h``."""
    h = np.asarray(h, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if obs.kind is ObsKind.TruncGaussian:
        return _trunc_gaussian(h, mu, obs.sigma)
    return _negbinom(np.rint(h), mu, obs.r)


def deviance(kind: ModelKind, params: ParamVector, obs: ObservationModel, data) -> float:
    """``-2 * sum(log p(h_i | mu_i))`` over every record of ``data``.

    Returns ``inf`` when the data are impossible under the parameters (a
    zero NB mean with a positive observed h).  An empty dataset has
    deviance zero.
    """
    if len(data) == 0:
        return 0.0
    mu = evaluate_mean(kind, params, Covariates(data.P, data.C))
    total = float(np.sum(log_likelihood_terms(mu, data.h, obs)))
    return -2.0 * total
