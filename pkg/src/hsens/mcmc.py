"""Posterior sampling for the h-index models.

The sampler is a component-wise (Metropolis-within-Gibbs) random-walk
Metropolis scheme.  Each parameter is updated in turn on the unconstrained
coordinate ``z = log(theta - lower)``, with a per-component proposal scale
tuned by Robbins-Monro towards a target acceptance rate during burn-in and
frozen afterwards.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from scipy.special import gammaln, log_ndtr

from .diagnostics import effective_sample_size, geweke_z, split_rhat
from .likelihood import ObsKind
from .models import ModelKind, mean_function, param_bounds, param_names

__all__ = [
    "TruncNormal",
    "Gamma",
    "SamplerConfig",
    "Chain",
    "ParamSummary",
    "PosteriorSummary",
    "OracleResult",
    "InitializationError",
    "default_priors",
    "default_inits",
    "log_posterior",
    "MetropolisWithinGibbs",
    "run_chain",
    "run_chains",
    "summarize",
    "mean_deviance",
    "grid_posterior_oracle",
    "export_trace",
    "write_chain_csv",
    "read_chain_csv",
    "infer_model",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class InitializationError(ValueError):
    """Initial values have zero posterior density."""


@dataclass(frozen=True)
class TruncNormal:
    """Normal(mean, variance) restricted to ``(lower, inf)``."""

    mean: float
    variance: float
    lower: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("variance must be positive")
        if not math.isfinite(self.lower):
            raise ValueError("lower bound must be finite")

    def logpdf(self, x: float) -> float:
        if not x > self.lower or not math.isfinite(x):
            return -math.inf
        sd = math.sqrt(self.variance)
        z = (x - self.mean) / sd
        return -0.5 * z * z - _LOG_SQRT_2PI - math.log(sd) - float(log_ndtr((self.mean - self.lower) / sd))

    def to_dict(self) -> dict:
        return {"dist": "TruncNormal", **asdict(self)}


@dataclass(frozen=True)
class Gamma:
    """Gamma(shape, rate) on ``(0, inf)``."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("shape and rate must be positive")

    @property
    def lower(self) -> float:
        return 0.0

    def logpdf(self, x: float) -> float:
        if not x > 0 or not math.isfinite(x):
            return -math.inf
        return (self.shape * math.log(self.rate) - math.lgamma(self.shape)
                + (self.shape - 1.0) * math.log(x) - self.rate * x)

    def to_dict(self) -> dict:
        return {"dist": "Gamma", **asdict(self)}


PriorSpec = Union[TruncNormal, Gamma]


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int = 50_000
    burn_in: int = 5_000
    seed: int = 0
    target_acceptance: float = 0.44
    thin: int = 1
    initial_scale: float = 0.5

    def __post_init__(self):
        if self.iterations < 1000:
            raise ValueError("iterations must be at least 1000")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if not 0 < self.target_acceptance < 1:
            raise ValueError("target_acceptance must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return asdict(self)


def default_priors(kind: ModelKind, obs_kind: ObsKind) -> dict[str, PriorSpec]:
    """Vague priors: Normal(mean, 100) truncated to each parameter's range,
    and Gamma(0.001, 0.001) on the Gaussian precision or NB dispersion."""
    means = {"alpha": 1.0, "c": 0.0, "a": 1.0, "b": 1.0}
    priors: dict[str, PriorSpec] = {
        name: TruncNormal(means[name], 100.0, lower) for name, lower in param_bounds(kind)
    }
    priors[obs_kind.param_name] = Gamma(0.001, 0.001)
    return priors


def default_inits(kind: ModelKind, obs_kind: ObsKind) -> dict[str, float]:
    inits = {name: lower + 1.0 for name, lower in param_bounds(kind)}
    inits[obs_kind.param_name] = 1.0
    return inits


def all_param_names(kind: ModelKind, obs_kind: ObsKind) -> list[str]:
    return param_names(kind) + [obs_kind.param_name]


class _Target:
    """Log-likelihood and log-prior pieces with data arrays cached."""

    def __init__(self, kind: ModelKind, obs_kind: ObsKind, data, priors: Mapping[str, PriorSpec]):
        self.kind = kind
        self.obs_kind = obs_kind
        self.names = all_param_names(kind, obs_kind)
        self.n_mean = len(self.names) - 1
        self.lowers = np.array([lo for _, lo in param_bounds(kind)] + [0.0])
        self.priors = [priors.get(name) for name in self.names]
        self.P = data.P
        self.C = data.C
        h = data.h
        self.n = h.size
        if obs_kind is ObsKind.NegBinomial:
            h = np.rint(h)
            self.lgh = float(np.sum(gammaln(h + 1.0)))
        self.h = h
        self._mean = mean_function(kind)

    def mu(self, theta) -> np.ndarray:
        return self._mean(self.P, self.C, *theta[: self.n_mean])

    def loglik(self, mu, noise: float) -> float:
        if self.n == 0:
            return 0.0
        h = self.h
        with np.errstate(all="ignore"):
            if self.obs_kind is ObsKind.TruncGaussian:
                tau = noise
                d = h - mu
                out = (-0.5 * tau * float(d @ d) + self.n * (0.5 * math.log(tau) - _LOG_SQRT_2PI)
                       - float(np.sum(log_ndtr(mu * math.sqrt(tau)))))
            else:
                r = noise
                log_rmu = np.log(r + mu)
                hp = h > 0
                if np.any(hp & ~(mu > 0)):
                    return -math.inf
                tail = np.where(hp, h * (np.log(mu) - log_rmu), 0.0)
                out = (float(np.sum(gammaln(h + r))) - self.n * math.lgamma(r) - self.lgh
                       + float(np.sum(r * (math.log(r) - log_rmu) + tail)))
        return out if math.isfinite(out) else -math.inf

    def logprior(self, j: int, value: float) -> float:
        prior = self.priors[j]
        if prior is None:
            return 0.0
        return prior.logpdf(value)

    def in_bounds(self, theta) -> bool:
        return bool(np.all(np.asarray(theta) > self.lowers)) and bool(np.all(np.isfinite(theta)))


def log_posterior(
    kind: ModelKind,
    obs_kind: ObsKind,
    theta: Mapping[str, float],
    priors: Mapping[str, PriorSpec],
    data,
) -> float:
    """Unnormalised log posterior: sum of log priors plus log likelihood.

    ``theta`` holds every mean parameter and the noise parameter (``tau``
    or ``r``).  Parameters without an entry in ``priors`` are treated as
    fixed and contribute no prior term.  Out-of-range values give ``-inf``.
    """
    target = _Target(kind, obs_kind, data, priors)
    vec = np.array([float(theta[name]) for name in target.names])
    if not target.in_bounds(vec):
        return -math.inf
    lp = sum(target.logprior(j, vec[j]) for j in range(len(vec)))
    if lp == -math.inf:
        return lp
    return lp + target.loglik(target.mu(vec), vec[-1])


@dataclass
class Chain:
    draws: np.ndarray  # (kept, n_params)
    deviance_draws: np.ndarray
    param_names: list[str]
    accept_rates: dict[str, float]
    config: Optional[SamplerConfig]
    iterations: np.ndarray
    kind: Optional[ModelKind] = None
    obs_kind: Optional[ObsKind] = None
    proposal_scales: dict[str, float] = field(default_factory=dict)
    fixed: dict[str, float] = field(default_factory=dict)

    def __len__(self) -> int:
        return self.draws.shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.draws[:, self.param_names.index(name)]
        except ValueError:
            raise KeyError(f"unknown parameter {name!r}; chain has {self.param_names}") from None

    def values(self, name: str) -> np.ndarray:
        """Draws of ``name``, or a constant column if it was held fixed."""
        if name in self.param_names:
            return self[name]
        if name in self.fixed:
            return np.full(len(self), self.fixed[name])
        raise KeyError(f"unknown parameter {name!r}")

    def subsample(self, max_draws: Optional[int]) -> "Chain":
        """Evenly spaced subset of at most ``max_draws`` kept draws."""
        n = len(self)
        if max_draws is None or n <= max_draws:
            return self
        idx = np.linspace(0, n - 1, max_draws).round().astype(int)
        return replace(self, draws=self.draws[idx], deviance_draws=self.deviance_draws[idx],
                       iterations=self.iterations[idx])


class MetropolisWithinGibbs:
    """Adaptive component-wise random-walk Metropolis on log-shifted coordinates.

    ``step()`` performs one sweep over the free components.  While
    ``adapting`` is true the log proposal scale of component j moves by
    ``t**-0.6 * (accepted - target)`` after each proposal.
    """

    def __init__(self, target: _Target, theta0, free: Sequence[int], config: SamplerConfig,
                 rng: np.random.Generator):
        self.target = target
        self.theta = np.array(theta0, dtype=float)
        self.free = list(free)
        self.config = config
        self.rng = rng
        self.log_scales = np.full(len(self.theta), math.log(config.initial_scale))
        self.adapting = True
        self.t = 0
        self.accepted = np.zeros(len(self.theta), dtype=np.int64)
        self.proposed = np.zeros(len(self.theta), dtype=np.int64)

        if not target.in_bounds(self.theta):
            raise InitializationError("initial values outside parameter bounds")
        self.lp = np.array([target.logprior(j, self.theta[j]) for j in range(len(self.theta))])
        self.mu = target.mu(self.theta)
        self.ll = target.loglik(self.mu, self.theta[-1])
        if not (np.all(np.isfinite(self.lp)) and math.isfinite(self.ll)):
            raise InitializationError("log posterior is -inf at the initial values")

    @property
    def scales(self) -> np.ndarray:
        return np.exp(self.log_scales)

    def reset_counters(self) -> None:
        self.accepted[:] = 0
        self.proposed[:] = 0

    def step(self) -> None:
        tgt = self.target
        theta = self.theta
        lowers = tgt.lowers
        noise_idx = len(theta) - 1
        k = len(self.free)
        normals = self.rng.standard_normal(k)
        log_u = np.log(self.rng.random(k))
        self.t += 1
        gain = self.t ** -0.6
        for i, j in enumerate(self.free):
            z_old = math.log(theta[j] - lowers[j])
            z_new = z_old + math.exp(self.log_scales[j]) * normals[i]
            accepted = False
            if z_new < 700.0:
                value = lowers[j] + math.exp(z_new)
                lp_new = tgt.logprior(j, value) if value > lowers[j] else -math.inf
                if lp_new > -math.inf:
                    old = theta[j]
                    theta[j] = value
                    if j == noise_idx:
                        mu_new = self.mu
                    else:
                        mu_new = tgt.mu(theta)
                    ll_new = tgt.loglik(mu_new, theta[noise_idx])
                    log_ratio = (ll_new + lp_new + z_new) - (self.ll + self.lp[j] + z_old)
                    if ll_new > -math.inf and log_u[i] < log_ratio:
                        accepted = True
                        self.mu = mu_new
                        self.ll = ll_new
                        self.lp[j] = lp_new
                    else:
                        theta[j] = old
            self.proposed[j] += 1
            self.accepted[j] += accepted
            if self.adapting:
                self.log_scales[j] += gain * (float(accepted) - self.config.target_acceptance)

    @property
    def deviance(self) -> float:
        return -2.0 * self.ll


def _prepare(kind, obs_kind, data, priors, inits, fixed):
    if obs_kind is ObsKind.TruncGaussian and kind is ModelKind.HirschNB:
        raise ValueError("HirschNB must be paired with the negative-binomial likelihood")
    if obs_kind is ObsKind.NegBinomial and kind is ModelKind.HirschGaussian:
        raise ValueError("HirschGaussian must be paired with the Gaussian likelihood")
    names = all_param_names(kind, obs_kind)
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(names)
    if unknown:
        raise KeyError(f"cannot fix unknown parameter(s) {sorted(unknown)}")
    priors = dict(default_priors(kind, obs_kind) if priors is None else priors)
    for name in fixed:
        priors.pop(name, None)
    start = default_inits(kind, obs_kind)
    start.update(inits or {})
    start.update(fixed)
    theta0 = [float(start[name]) for name in names]
    free = [j for j, name in enumerate(names) if name not in fixed]
    return names, priors, theta0, free, fixed


def run_chain(
    config: SamplerConfig,
    kind: ModelKind,
    obs_kind: ObsKind,
    data,
    priors: Optional[Mapping[str, PriorSpec]] = None,
    inits: Optional[Mapping[str, float]] = None,
    fixed: Optional[Mapping[str, float]] = None,
) -> Chain:
    """Draw ``config.iterations // config.thin`` posterior samples.

    ``fixed`` pins parameters to constants; they are excluded from the
    returned draws and recorded on ``Chain.fixed``.  The chain is fully
    determined by ``config.seed``.

    Raises
    ------
    InitializationError
        If the log posterior is ``-inf`` at the initial values.
    """
    if len(data) == 0:
        raise ValueError("cannot fit an empty dataset")
    names, priors, theta0, free, fixed = _prepare(kind, obs_kind, data, priors, inits, fixed)
    if not free:
        raise ValueError("every parameter is fixed")
    target = _Target(kind, obs_kind, data, priors)
    rng = np.random.default_rng(config.seed)
    sampler = MetropolisWithinGibbs(target, theta0, free, config, rng)

    for _ in range(config.burn_in):
        sampler.step()
    sampler.adapting = False
    sampler.reset_counters()

    n_keep = config.iterations // config.thin
    draws = np.empty((n_keep, len(free)))
    dev = np.empty(n_keep)
    iters = np.empty(n_keep, dtype=np.int64)
    kept = 0
    for it in range(1, config.iterations + 1):
        sampler.step()
        if it % config.thin == 0 and kept < n_keep:
            draws[kept] = sampler.theta[free]
            dev[kept] = sampler.deviance
            iters[kept] = config.burn_in + it
            kept += 1

    free_names = [names[j] for j in free]
    rates = {names[j]: float(sampler.accepted[j] / max(sampler.proposed[j], 1)) for j in free}
    scales = {names[j]: float(sampler.scales[j]) for j in free}
    return Chain(draws, dev, free_names, rates, config, iters, kind, obs_kind, scales, fixed)


def _run_chain_job(args):
    return run_chain(*args)


def run_chains(
    config: SamplerConfig,
    kind: ModelKind,
    obs_kind: ObsKind,
    data,
    n_chains: int,
    priors=None,
    inits=None,
    fixed=None,
    max_workers: Optional[int] = None,
) -> list[Chain]:
    """Independent chains with seeds ``seed, seed + 1, ...`` run in parallel processes."""
    configs = [replace(config, seed=(config.seed + k) % 2**64) for k in range(n_chains)]
    jobs = [(cfg, kind, obs_kind, data, priors, inits, fixed) for cfg in configs]
    if n_chains == 1:
        return [_run_chain_job(jobs[0])]
    with ProcessPoolExecutor(max_workers=max_workers or n_chains) as pool:
        return list(pool.map(_run_chain_job, jobs))


@dataclass(frozen=True)
class ParamSummary:
    median: float
    ci_low: float
    ci_high: float
    ess: float
    geweke_z: float
    rhat: Optional[float] = None

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.rhat is None:
            del out["rhat"]
        return out


@dataclass(frozen=True)
class PosteriorSummary:
    params: dict[str, ParamSummary]
    mean_deviance: float

    def __getitem__(self, name: str) -> ParamSummary:
        return self.params[name]


def summarize(chain: Union[Chain, Sequence[Chain]]) -> PosteriorSummary:
    """Medians, equal-tailed 95% intervals (type-7 quantiles), ESS and Geweke z.

    Given several chains, quantiles are taken over the pooled draws, ESS is
    summed over chains, Geweke z is reported for the first chain and
    split-R-hat is added.
    """
    chains = [chain] if isinstance(chain, Chain) else list(chain)
    if not chains or len(chains[0]) == 0:
        raise ValueError("empty chain")
    names = chains[0].param_names
    out = {}
    for name in names:
        pooled = np.concatenate([c[name] for c in chains])
        med, lo, hi = np.quantile(pooled, [0.5, 0.025, 0.975])
        ess = sum(effective_sample_size(c[name]) for c in chains)
        rhat = split_rhat(np.stack([c[name] for c in chains])) if len(chains) > 1 else None
        out[name] = ParamSummary(float(med), float(lo), float(hi), float(ess),
                                 geweke_z(chains[0][name]), rhat)
    dev = np.concatenate([c.deviance_draws for c in chains])
    return PosteriorSummary(out, float(np.mean(dev)))


def mean_deviance(chain: Chain) -> float:
    """Posterior mean of the deviance; smaller indicates a better fit."""
    if len(chain.deviance_draws) == 0:
        raise ValueError("no deviance draws")
    return float(np.mean(chain.deviance_draws))


@dataclass(frozen=True)
class OracleResult:
    mean: float
    q025: float
    q50: float
    q975: float
    grid: np.ndarray
    density: np.ndarray

    def quantile(self, q: float) -> float:
        cdf = _cumtrapz(self.density, self.grid)
        return float(np.interp(q, cdf, self.grid))


def _cumtrapz(y, x):
    return np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))])


def grid_posterior_oracle(
    kind: ModelKind,
    obs_kind: ObsKind,
    data,
    param: str,
    fixed: Mapping[str, float],
    prior: PriorSpec,
    grid: tuple[float, float, int],
) -> OracleResult:
    """One-dimensional posterior by trapezoid quadrature on a uniform grid.

    Every parameter other than ``param`` must be given in ``fixed``.

    Raises
    ------
    ValueError
        If the density at either grid edge exceeds 1e-4 of its peak, i.e.
        the grid does not cover the posterior mass.
    """
    names = all_param_names(kind, obs_kind)
    missing = set(names) - set(fixed) - {param}
    if param not in names or missing:
        raise ValueError(f"oracle needs exactly one free parameter; unresolved: {sorted(missing)}")
    lo, hi, n = grid
    xs = np.linspace(lo, hi, int(n))
    priors = {param: prior}
    logp = np.array([log_posterior(kind, obs_kind, {**fixed, param: x}, priors, data) for x in xs])
    if not np.any(np.isfinite(logp)):
        raise ValueError("posterior is zero on the whole grid")
    dens = np.exp(logp - np.max(logp))
    if dens[0] > 1e-4 or dens[-1] > 1e-4:
        raise ValueError("grid edges carry more than 1e-4 of the peak density")
    dens /= _cumtrapz(dens, xs)[-1]
    cdf = _cumtrapz(dens, xs)
    mean = float(_cumtrapz(xs * dens, xs)[-1])
    q025, q50, q975 = (float(np.interp(q, cdf, xs)) for q in (0.025, 0.5, 0.975))
    return OracleResult(mean, q025, q50, q975, xs, dens)


def export_trace(chain: Chain, parameter: str) -> np.ndarray:
    """``(iteration, value)`` rows of one parameter in sampling order."""
    return np.column_stack([chain.iterations.astype(float), chain[parameter]])


def infer_model(names: Sequence[str]) -> tuple[ModelKind, ObsKind]:
    """Recover model and likelihood from a chain's parameter columns."""
    names = set(names)
    if "tau" in names:
        obs = ObsKind.TruncGaussian
    elif "r" in names:
        obs = ObsKind.NegBinomial
    else:
        raise ValueError("chain has neither tau nor r column")
    if {"a", "b"} <= names:
        kind = ModelKind.HirschGaussian if obs is ObsKind.TruncGaussian else ModelKind.HirschNB
    elif "c" in names:
        kind = ModelKind.GlanzelSchubert
    elif "alpha" in names:
        kind = ModelKind.EggheRousseau
    else:
        raise ValueError(f"cannot infer model from columns {sorted(names)}")
    return kind, obs


def write_chain_csv(chain: Chain, path: Union[str, Path]) -> None:
    """CSV with header ``iter,<params...>,deviance``; floats written with repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", *chain.param_names, "deviance"])
        for i in range(len(chain)):
            writer.writerow([int(chain.iterations[i]), *map(repr, chain.draws[i].tolist()),
                             repr(float(chain.deviance_draws[i]))])


def read_chain_csv(path: Union[str, Path]) -> Chain:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) < 3 or header[0] != "iter" or header[-1] != "deviance":
            raise ValueError(f"{path}: header must be iter,<params...>,deviance")
        rows = [row for row in reader if row]
    names = header[1:-1]
    try:
        arr = np.array([[float(v) for v in row] for row in rows], dtype=float).reshape(len(rows), len(header))
    except ValueError as exc:
        raise ValueError(f"{path}: malformed chain file ({exc})") from None
    try:
        kind, obs = infer_model(names)
    except ValueError:
        kind, obs = None, None
    return Chain(arr[:, 1:-1].copy(), arr[:, -1].copy(), names, {}, None,
                 arr[:, 0].astype(np.int64), kind, obs)
