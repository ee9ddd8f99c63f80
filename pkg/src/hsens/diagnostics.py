"""Convergence diagnostics for single MCMC chains."""

from __future__ import annotations

import numpy as np

__all__ = ["autocorrelation", "effective_sample_size", "geweke_z", "split_rhat"]


def autocorrelation(x) -> np.ndarray:
    """Normalised autocorrelation at all lags, computed by FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    d = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(d, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n]
    if acov[0] == 0:
        out = np.zeros(n)
        out[0] = 1.0
        return out
    return acov / acov[0]


def effective_sample_size(x) -> float:
    """ESS using Geyer's initial positive sequence.

    Pairs of autocorrelations ``rho[2k] + rho[2k+1]`` are summed while they
    stay positive.  A constant chain is reported as fully efficient.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4 or np.ptp(x) == 0:
        return float(n)
    rho = autocorrelation(x)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(n / max(tau, 1.0 / n))


def geweke_z(x, first: float = 0.1, last: float = 0.5) -> float:
    """Geweke z-score comparing the first 10% with the last 50% of a chain.

    Each segment's spectral density at zero is estimated as variance
    divided by that segment's effective sample size.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    a = x[: max(int(first * n), 2)]
    b = x[n - max(int(last * n), 2):]
    va = a.var(ddof=1) / effective_sample_size(a) if np.ptp(a) > 0 else 0.0
    vb = b.var(ddof=1) / effective_sample_size(b) if np.ptp(b) > 0 else 0.0
    diff = a.mean() - b.mean()
    if va + vb == 0:
        return 0.0 if diff == 0 else float(np.sign(diff) * np.inf)
    return float(diff / np.sqrt(va + vb))


def split_rhat(chains) -> float:
    """Split-R-hat for a (n_chains, n_draws) array of one parameter."""
    chains = np.atleast_2d(np.asarray(chains, dtype=float))
    half = chains.shape[1] // 2
    if half < 2:
        raise ValueError("need at least 4 draws per chain")
    parts = np.concatenate([chains[:, :half], chains[:, -half:]], axis=0)
    m, n = parts.shape
    means = parts.mean(axis=1)
    W = parts.var(axis=1, ddof=1).mean()
    B = n * means.var(ddof=1)
    if W == 0:
        return 1.0 if B == 0 else float("inf")
    var_plus = (n - 1) / n * W + B / n
    return float(np.sqrt(var_plus / W))
