"""Otsu threshold selection over 1-D score distributions.

The search space is the upper edges of a fixed-width histogram over
[min(samples), max(samples)]. Class statistics are exact: the histogram
keeps per-bin counts and sums, so the between-class variance evaluated at
a bin edge is the true variance of the induced sample partition, not a
bin-center approximation. Ties break toward the smallest edge, which keeps
thresholds conservative for strict-greater selection rules.

Distributions whose range falls below flat_epsilon have no separable
classes; they come back flagged degenerate with the threshold pinned to
the sample minimum, and callers decide policy (selection drops everything,
consolidation links everything).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_BINS = 256
DEFAULT_FLAT_EPSILON = 1e-6


@dataclass(frozen=True)
class ThresholdReport:
    """One Otsu decision: threshold plus the class statistics behind it."""

    threshold: float
    omega1: float
    omega2: float
    mu1: float
    mu2: float
    inter_class_variance: float
    degenerate: bool
    bin_width: float


def _degenerate_report(lo: float, mean: float, bin_width: float) -> ThresholdReport:
    return ThresholdReport(
        threshold=lo,
        omega1=1.0,
        omega2=0.0,
        mu1=mean,
        mu2=mean,
        inter_class_variance=0.0,
        degenerate=True,
        bin_width=bin_width,
    )


def otsu_threshold(
    samples,
    bins: int = DEFAULT_BINS,
    flat_epsilon: float = DEFAULT_FLAT_EPSILON,
) -> ThresholdReport:
    """Maximize omega1*omega2*(mu1-mu2)^2 over the histogram's bin edges.

    samples: non-empty 1-D collection of finite reals.
    bins: histogram resolution, >= 2; bin_width = sample range / bins.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    arr = np.asarray(samples, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("cannot threshold an empty sample set")
    if not np.isfinite(arr).all():
        raise ValueError("samples contain non-finite values")

    lo = float(arr.min())
    hi = float(arr.max())
    span = hi - lo
    bin_width = span / bins
    if span < flat_epsilon:
        return _degenerate_report(lo, float(arr.mean()), bin_width)

    n = arr.size
    idx = ((arr - lo) / span * bins).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    sums = np.bincount(idx, weights=arr, minlength=bins)
    total = float(arr.sum())

    cum_n = np.cumsum(counts)  # class 1 size at each upper edge
    cum_s = np.cumsum(sums)
    w1 = cum_n / n
    w2 = 1.0 - w1
    interior = (cum_n > 0) & (cum_n < n)
    with np.errstate(invalid="ignore", divide="ignore"):
        m1 = np.where(cum_n > 0, cum_s / cum_n, 0.0)
        m2 = np.where(cum_n < n, (total - cum_s) / (n - cum_n), 0.0)
    variance = np.where(interior, w1 * w2 * (m1 - m2) ** 2, 0.0)

    k = int(np.argmax(variance))  # first maximum = smallest edge
    return ThresholdReport(
        threshold=lo + (k + 1) * bin_width,
        omega1=float(w1[k]),
        omega2=float(w2[k]),
        mu1=float(m1[k]),
        mu2=float(m2[k]),
        inter_class_variance=float(w1[k] * w2[k] * (m1[k] - m2[k]) ** 2),
        degenerate=False,
        bin_width=bin_width,
    )
