"""Statistical primitives: Pearson r with Fisher-z confidence intervals,
Shapiro-Wilk normality, censoring-aware medians, relative change."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.stats

#: z quantile for a two-sided 95% interval.
_Z975 = 1.959963984540054


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    ci_low: float
    ci_high: float
    n: int

    @property
    def ci_halfwidth(self) -> float:
        return (self.ci_high - self.ci_low) / 2.0


def fisher_interval(r: float, n: int, level: float = 0.95) -> tuple[float, float]:
    """Fisher z-transform confidence interval for a correlation coefficient.

    atanh(r) +/- z / sqrt(n - 3), mapped back through tanh. Exactly
    symmetric in z-space; slightly asymmetric in r-space.
    """
    if n < 4:
        raise ValueError(f"need n >= 4 for a Fisher interval, got {n}")
    if not -1.0 < r < 1.0:
        raise ValueError(f"r must lie strictly inside (-1, 1), got {r}")
    z = math.atanh(r)
    quantile = _Z975 if level == 0.95 else scipy.stats.norm.ppf(0.5 + level / 2.0)
    half = quantile / math.sqrt(n - 3)
    return math.tanh(z - half), math.tanh(z + half)


def pearson_ci(x: Sequence[float], y: Sequence[float], level: float = 0.95) -> CorrelationResult:
    """Pearson correlation with a Fisher-z confidence interval.

    Requires equal lengths of at least 4 and nonzero variance on both
    sides; otherwise the correlation is undefined and a ValueError is
    raised.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape:
        raise ValueError(f"length mismatch: {xa.shape} vs {ya.shape}")
    n = xa.size
    if n < 4:
        raise ValueError(f"need at least 4 samples, got {n}")
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("correlation undefined: an input has zero variance")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        lo, hi = r, r
    else:
        lo, hi = fisher_interval(r, n, level)
    return CorrelationResult(r=r, ci_low=lo, ci_high=hi, n=n)


def shapiro_wilk(x: Sequence[float]) -> tuple[float, float]:
    """Shapiro-Wilk W statistic and p-value (Royston AS R94).

    Valid for 3 <= n <= 5000.
    """
    xa = np.asarray(x, dtype=float)
    if not 3 <= xa.size <= 5000:
        raise ValueError(f"Shapiro-Wilk supports n in [3, 5000], got {xa.size}")
    result = scipy.stats.shapiro(xa)
    return float(result.statistic), float(result.pvalue)


def median(x: Sequence[float]) -> float:
    """Median with the usual mean-of-middle-two rule for even lengths.

    Censored observations enter as +inf (e.g. runs that never reached
    pandemic status); a median of +inf therefore reads as "no pandemic in
    the majority of runs".
    """
    values = sorted(x)
    if not values:
        raise ValueError("median of empty sequence")
    n = len(values)
    mid = n // 2
    if n % 2 == 1:
        return float(values[mid])
    # IEEE arithmetic already does the right thing with +inf middles
    return (float(values[mid - 1]) + float(values[mid])) / 2.0


def lower_median(x: Sequence[float]) -> float:
    """Lower-of-two-middles median; stays finite while most values are."""
    values = sorted(x)
    if not values:
        raise ValueError("median of empty sequence")
    return float(values[(len(values) - 1) // 2])


def relative_change(old: float, new: float) -> float:
    """|new - old| / |old|; inf when the baseline is zero but the value moved."""
    if old == 0.0:
        return 0.0 if new == 0.0 else math.inf
    return abs(new - old) / abs(old)


def change_exceeds(old: float, new: float, threshold: float, zero_abs_threshold: float = 0.01) -> bool:
    """Relative-change test with an absolute-change fallback at zero baseline.

    Zero-baseline values (degenerate scores are real data points) count as
    changed when they move by more than ``zero_abs_threshold`` in absolute
    terms.
    """
    if old == 0.0:
        return abs(new - old) > zero_abs_threshold
    return relative_change(old, new) > threshold
