"""Univariate time-series transforms and correlation statistics.

These are the building blocks for prewhitening (Hodrick-Prescott
detrending, first differencing, linear detrending) and for residual
diagnostics (sample autocorrelation, cross-correlation, great-circle
distances between state centers).  All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import solveh_banded

from .errors import SeriesError

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True)
class Series:
    """An annual time series: ordered values plus the first calendar year."""

    values: np.ndarray
    start_year: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise SeriesError("series must be one-dimensional with length >= 1")
        if not np.all(np.isfinite(v)):
            raise SeriesError("series contains non-finite values")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "start_year", int(self.start_year))

    def __len__(self) -> int:
        return self.values.size

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.start_year + len(self))


@dataclass(frozen=True)
class HpDecomposition:
    """Trend/residual split of a series under an HP penalty ``lam``."""

    trend: Series
    residual: Series
    lam: float

    def __post_init__(self):
        if len(self.trend) != len(self.residual):
            raise SeriesError("trend and residual lengths differ")
        if self.lam <= 0:
            raise SeriesError("smoothing parameter must be positive")


def hp_trend_values(x: np.ndarray, lam: float) -> np.ndarray:
    """Array-level HP trend: solve (I + lam * K'K) tau = x.

    K is the (n-2) x n second-difference operator, so the system is a
    symmetric positive-definite pentadiagonal matrix, solved in O(n)
    with a banded Cholesky factorization.  For n <= 2 the penalty term
    is empty and the trend is the series itself.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n <= 2 or not np.any(np.diff(x, 2)):
        # empty penalty, or an exact linear trend: x is its own minimizer
        return x.copy()
    k = sparse.diags_array(
        [np.ones(n - 2), -2.0 * np.ones(n - 2), np.ones(n - 2)],
        offsets=[0, 1, 2],
        shape=(n - 2, n),
    )
    a = sparse.eye_array(n) + lam * (k.T @ k)
    ab = np.zeros((3, n))
    ab[0, 2:] = a.diagonal(2)
    ab[1, 1:] = a.diagonal(1)
    ab[2, :] = a.diagonal(0)
    return solveh_banded(ab, x)


def hp_residual_values(x: np.ndarray, lam: float) -> np.ndarray:
    """Array-level HP residual: x minus its HP trend."""
    x = np.asarray(x, dtype=float)
    return x - hp_trend_values(x, lam)


def hp_filter(x: Series, lam: float = 100.0) -> HpDecomposition:
    """Hodrick-Prescott decomposition of ``x``.

    The trend tau minimizes sum((x_t - tau_t)^2) + lam * sum((d2 tau_t)^2)
    where d2 is the second difference.  Constant and exactly linear
    inputs are their own trend, so the residual is identically zero.
    """
    if lam <= 0 or not math.isfinite(lam):
        raise SeriesError(f"smoothing parameter must be a positive real, got {lam}")
    trend = hp_trend_values(x.values, lam)
    return HpDecomposition(
        trend=Series(trend, x.start_year),
        residual=Series(x.values - trend, x.start_year),
        lam=float(lam),
    )


def difference(x: Series) -> Series:
    """First temporal difference; output year t holds x_t - x_{t-1}."""
    if len(x) < 2:
        raise SeriesError("differencing requires length >= 2")
    return Series(np.diff(x.values), x.start_year + 1)


def linear_detrend(x: Series) -> Series:
    """Residuals of an ordinary least-squares fit of x on (1, t)."""
    if len(x) < 2:
        raise SeriesError("linear detrending requires length >= 2")
    t = np.arange(len(x), dtype=float)
    basis = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(basis, x.values, rcond=None)
    return Series(x.values - basis @ coef, x.start_year)


def sample_autocorr(x: Series, lag: int) -> float:
    """Sample autocorrelation at ``lag`` with the biased (n-denominator)
    estimator:

        r_k = sum_{t<=n-k} (x_t - xbar)(x_{t+k} - xbar) / sum_t (x_t - xbar)^2
    """
    lag = int(lag)
    if lag < 0:
        raise SeriesError("lag must be non-negative")
    if lag >= len(x):
        raise SeriesError(f"lag {lag} >= series length {len(x)}")
    centered = x.values - x.values.mean()
    denom = float(centered @ centered)
    if denom <= 0.0:
        raise SeriesError("autocorrelation undefined for a zero-variance series")
    if lag == 0:
        return 1.0
    return float(centered[:-lag] @ centered[lag:]) / denom


def cross_corr(x: Series, y: Series) -> float:
    """Pearson correlation of two aligned series of equal length."""
    if len(x) != len(y):
        raise SeriesError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise SeriesError("correlation requires length >= 2")
    xc = x.values - x.values.mean()
    yc = y.values - y.values.mean()
    sx = float(xc @ xc)
    sy = float(yc @ yc)
    if sx <= 0.0 or sy <= 0.0:
        raise SeriesError("correlation undefined for a zero-variance series")
    return float(xc @ yc) / math.sqrt(sx * sy)


def great_circle_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Haversine distance in km between (lat, lon) pairs in degrees."""
    for lat, lon in (a, b):
        if not (-90.0 <= lat <= 90.0):
            raise SeriesError(f"latitude {lat} outside [-90, 90]")
        if not (-180.0 <= lon <= 180.0):
            raise SeriesError(f"longitude {lon} outside [-180, 180]")
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    s = (
        math.sin((lat2 - lat1) / 2.0) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))
