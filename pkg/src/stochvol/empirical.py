"""Empirical counterparts of the model quantities, computed from data.

Everything here consumes a plain 1-d array of returns (or prices turned
into log-returns) and produces the sample statistics the closed forms
predict: central moments, and the lead-lag correlation profile between
returns and squared returns.
"""

from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DataError

__all__ = [
    "from_prices",
    "SummaryStats",
    "summary_stats",
    "EmpiricalLeadLag",
    "empirical_leadlag",
    "bartlett_band",
    "LoadedSeries",
    "load_series_csv",
]


def from_prices(prices: np.ndarray, demean: bool = False) -> np.ndarray:
    """Log-returns from a positive price series; optionally mean-adjusted."""
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 1 or prices.size < 2:
        raise DataError(
            f"need a 1-d price series with at least 2 points, got shape {prices.shape}"
        )
    if not np.all(np.isfinite(prices)) or np.any(prices <= 0.0):
        raise DataError("prices must be finite and strictly positive")
    r = np.diff(np.log(prices))
    if demean:
        r = r - r.mean()
    return r


@dataclass(frozen=True)
class SummaryStats:
    """Sample central moments with 1/T normalization."""

    n: int
    mean: float
    m2: float
    m3: float
    m4: float
    skewness: float
    kurtosis: float


def summary_stats(returns: np.ndarray) -> SummaryStats:
    """Central sample moments of a return series.

    Uses the 1/T convention for every moment, so skewness and kurtosis
    are the moment-ratio definitions (a symmetric two-point sample has
    kurtosis 1).  Requires at least 2 observations.
    """
    r = np.asarray(returns, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise DataError(
            f"need a 1-d return series with at least 2 points, got shape {r.shape}"
        )
    if not np.all(np.isfinite(r)):
        raise DataError("returns must be finite")
    mean = r.mean()
    d = r - mean
    m2 = np.mean(d**2)
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    if m2 == 0.0:
        raise DataError("return series is constant; moments are degenerate")
    return SummaryStats(
        n=r.size,
        mean=float(mean),
        m2=float(m2),
        m3=float(m3),
        m4=float(m4),
        skewness=float(m3 / m2**1.5),
        kurtosis=float(m4 / m2**2),
    )


def bartlett_band(n: int, level: float = 0.95) -> float:
    """Half-width of the white-noise band for a sample cross-correlation."""
    if n < 1:
        raise DataError(f"need a positive sample size, got {n}")
    if not 0.0 < level < 1.0:
        raise DataError(f"level must be in (0, 1), got {level}")
    return float(norm.ppf((1.0 + level) / 2.0) / math.sqrt(n))


@dataclass(frozen=True)
class EmpiricalLeadLag:
    """Sample correlations between returns and squared returns by lag.

    ``rhos[i]`` is ``Corr(r_t, r_{t+lags[i]}^2)``; positive lags correlate
    today's return with future squared returns.  ``band`` is the
    white-noise half-width for the given confidence level.
    """

    lags: np.ndarray
    rhos: np.ndarray
    n: int
    band: float


def empirical_leadlag(
    returns: np.ndarray, max_lag: int, level: float = 0.95
) -> EmpiricalLeadLag:
    """Cross-correlation profile of returns against squared returns."""
    r = np.asarray(returns, dtype=float)
    if max_lag < 0:
        raise DataError(f"max_lag must be nonnegative, got {max_lag}")
    if r.ndim != 1 or r.size <= max_lag + 4:
        raise DataError(
            f"need more than max_lag + 4 = {max_lag + 4} observations, got {r.size}"
        )
    if not np.all(np.isfinite(r)):
        raise DataError("returns must be finite")
    sq = r**2
    n = r.size
    lags = np.arange(-max_lag, max_lag + 1)
    rhos = np.empty(lags.size)
    for i, k in enumerate(lags):
        if k >= 0:
            a, b = r[: n - k], sq[k:]
        else:
            a, b = r[-k:], sq[: n + k]
        rhos[i] = np.corrcoef(a, b)[0, 1]
    return EmpiricalLeadLag(lags, rhos, n, bartlett_band(n, level))


@dataclass(frozen=True)
class LoadedSeries:
    """Returns loaded from a CSV file plus ingestion diagnostics."""

    returns: np.ndarray
    dates: list[_dt.date]
    kind: str
    n_skipped: int


def load_series_csv(path: str, demean: bool = False) -> LoadedSeries:
    """Load a return series from ``date,price`` or ``date,return`` CSV.

    The header row decides the interpretation (column named ``price`` or
    ``return``, case-insensitive).  Dates must be ISO-8601; rows whose
    date fails to parse are skipped and counted in ``n_skipped``.  A
    price series is converted to log-returns, dropping the first date.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        cols = [c.strip().lower() for c in header]
        if len(cols) < 2 or cols[0] != "date" or cols[1] not in ("price", "return"):
            raise DataError(
                f"{path}: expected header 'date,price' or 'date,return', got {header!r}"
            )
        kind = cols[1]
        dates: list[_dt.date] = []
        values: list[float] = []
        n_skipped = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise DataError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                d = _dt.date.fromisoformat(row[0].strip())
            except ValueError:
                n_skipped += 1
                continue
            try:
                x = float(row[1])
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: {kind} value {row[1]!r} is not a number"
                ) from None
            dates.append(d)
            values.append(x)
    if not values:
        raise DataError(f"{path}: no usable rows")
    arr = np.asarray(values, dtype=float)
    if kind == "price":
        returns = from_prices(arr, demean=demean)
        dates = dates[1:]
    else:
        if not np.all(np.isfinite(arr)):
            raise DataError(f"{path}: returns must be finite")
        returns = arr - arr.mean() if demean else arr
    return LoadedSeries(returns, dates, kind, n_skipped)
