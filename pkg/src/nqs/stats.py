"""Monte Carlo statistics for chain-structured sample series.

The error of the mean and the integrated autocorrelation estimate come from
a binning analysis with a fixed target of 16 bins per chain: if binned bin
means have variance V_b at bin size B, then sigma^2 = V_b / n_bins and
taucorr = max(0, (B * V_b / V - 1) / 2) with V the unbinned variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_BINS_TARGET = 16


@dataclass
class SeriesStats:
    mean: float
    sigma: float
    taucorr: float
    variance: float


def chain_statistics(series) -> SeriesStats:
    """Statistics of one or more equally long Markov-chain series.

    ``series`` is a (n_chains, n_steps) array, or a 1D array for one chain.
    """
    data = np.atleast_2d(np.asarray(series, dtype=np.float64))
    n_chains, length = data.shape
    total = data.size
    if total < 2:
        raise ValueError("need at least 2 sample points")
    mean = float(data.mean())
    variance = float(data.var())

    bin_size = max(1, length // N_BINS_TARGET)
    n_bins = length // bin_size
    trimmed = data[:, : n_bins * bin_size].reshape(n_chains, n_bins, bin_size)
    bin_means = trimmed.mean(axis=2).ravel()
    if bin_means.size >= 2 and variance > 0:
        var_bins = float(bin_means.var(ddof=1))
        sigma = float(np.sqrt(var_bins / bin_means.size))
        ratio = bin_size * var_bins / variance
        taucorr = max(0.0, 0.5 * (ratio - 1.0))
    elif variance == 0:
        sigma = 0.0
        taucorr = 0.0
    else:
        sigma = float(np.sqrt(data.var(ddof=1) / total))
        taucorr = 0.0
    return SeriesStats(mean=mean, sigma=sigma, taucorr=taucorr, variance=variance)
