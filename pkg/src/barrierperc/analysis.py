"""Convert first-spanning histograms into canonical percolation curves.

The histogram lives at fixed occupation counts n; the canonical curve at a
given susceptibility chi is the convolution of the cumulative spanning
probability F(n) with binomial weights B(N, n, chi). Weights are built with
the stable peak-anchored recursion rather than factorials, so they stay
finite for any lattice size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import SpanningHistogram

# weights this far below the peak cannot affect double precision results
WEIGHT_TRUNCATION = 1e-30


def cumulative(histogram: SpanningHistogram) -> np.ndarray:
    """F[n] = probability that spanning occurred after at most n added sites."""
    if histogram.replicas < 1:
        raise ValueError("histogram holds no replicas")
    return np.cumsum(histogram.counts) / histogram.replicas


def binomial_weights(n_sites: int, chi: float) -> np.ndarray:
    """Normalized binomial mass B(n_sites, n, chi) for n = 0..n_sites.

    Anchored at 1 on the most probable count and filled outward with the
    neighbor ratio recursion; chi = 0 and chi = 1 degenerate to point masses.
    Entries below WEIGHT_TRUNCATION relative to the peak are zeroed.
    """
    if not 0.0 <= chi <= 1.0:
        raise ValueError(f"chi must be in [0, 1], got {chi}")
    w = np.zeros(n_sites + 1)
    if chi == 0.0:
        w[0] = 1.0
        return w
    if chi == 1.0:
        w[n_sites] = 1.0
        return w
    n_m = int(chi * n_sites)
    w[n_m] = 1.0
    with np.errstate(under="ignore"):
        if n_m < n_sites:
            n_up = np.arange(n_m + 1, n_sites + 1)
            w[n_m + 1:] = np.cumprod(
                (n_sites - n_up + 1) / n_up * (chi / (1.0 - chi))
            )
        if n_m > 0:
            n_dn = np.arange(n_m - 1, -1, -1)
            w[n_m - 1::-1] = np.cumprod(
                (n_dn + 1) / (n_sites - n_dn) * ((1.0 - chi) / chi)
            )
    w[w < WEIGHT_TRUNCATION] = 0.0  # peak is exactly 1, so this is relative
    return w / w.sum()


@dataclass
class PercolationCurve:
    """Spanning probability sampled on a susceptibility grid."""

    chi: np.ndarray
    P: np.ndarray
    L: int


def percolation_probability(
    F: np.ndarray, chi_grid: np.ndarray, L: int | None = None
) -> PercolationCurve:
    """Convolve the cumulative spanning probability with binomial weights.

    P(chi) = sum_n F(n) * w_n(chi) over all occupation counts, including n = 0
    in the normalization (its weight is negligible at any chi of interest).
    """
    F = np.asarray(F, dtype=float)
    chi_grid = np.asarray(chi_grid, dtype=float)
    n_sites = F.shape[0] - 1
    if L is None:
        L = int(round(np.sqrt(n_sites)))
    P = np.empty(chi_grid.shape[0])
    for k, chi in enumerate(chi_grid):
        P[k] = binomial_weights(n_sites, float(chi)) @ F
    return PercolationCurve(chi=chi_grid, P=P, L=L)


def curve_from_histogram(
    histogram: SpanningHistogram, chi_grid: np.ndarray
) -> PercolationCurve:
    """Cumulative sum plus convolution in one step."""
    return percolation_probability(cumulative(histogram), chi_grid, L=histogram.L)


def effective_barrier_fraction(histogram: SpanningHistogram) -> tuple[float, float]:
    """Mean newly-closed bond fraction q_b and its standard error.

    q_b = <N_b> / 2L(L-1), averaged over the campaign's allocation draws.
    """
    if histogram.nb_count == 0:
        raise ValueError("campaign carries no barrier statistics")
    total_bonds = 2 * histogram.L * (histogram.L - 1)
    mean = histogram.nb_mean() / total_bonds
    if histogram.nb_count < 2:
        return mean, float("nan")
    se = np.sqrt(histogram.nb_variance() / histogram.nb_count) / total_bonds
    return mean, float(se)
