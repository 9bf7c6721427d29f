"""Residual diagnostics: per-state autocorrelation, pairwise
cross-correlation against distance, and state-by-state effect dispersion.

Band conventions: lag-1 autocorrelations use +/- 2/sqrt(n-1), lag-2 use
+/- 2/sqrt(n-2), pairwise cross-correlations use +/- 2/sqrt(n), where n
is the per-state residual series length.  Residuals are the natural
scale y - X beta by default; sqrt(w)-scaled residuals are available
behind a flag.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

import numpy as np

from .dataset import PanelDataset
from .design import ModelSpec
from .errors import DataError, SpecError
from .estim import FitResult, fit_single_state
from .series import Series, cross_corr, great_circle_km, sample_autocorr


@dataclass(frozen=True)
class AcfBands:
    lag1: float
    lag2: float


@dataclass(frozen=True)
class DiagnosticsReport:
    """Per-state ACFs, pairwise cross-correlations, and band statistics."""

    per_state_acf: dict[str, tuple[float, float]]
    acf_bands: AcfBands
    pair_xcorr: list[tuple[str, str, float, float]]
    xcorr_band: float
    pct_within_band: float


def _grouped_residuals(fit: FitResult, scaled: bool) -> dict[str, np.ndarray]:
    if scaled:
        out = {}
        for code in dict.fromkeys(fit.row_states.tolist()):
            mask = fit.row_states == code
            order = np.argsort(fit.row_years[mask])
            out[code] = (fit.residuals[mask] * np.sqrt(fit.weights[mask]))[order]
        return out
    return fit.residual_series()


def residual_acf_report(
    fit: FitResult, scaled: bool = False
) -> tuple[dict[str, tuple[float, float]], AcfBands]:
    """Per-state lag-1 and lag-2 sample autocorrelations plus bands."""
    grouped = _grouped_residuals(fit, scaled)
    lengths = {len(v) for v in grouped.values()}
    if min(lengths) < 3:
        raise SpecError("per-state residual series must have length >= 3")
    n = min(lengths)
    per_state = {
        code: (
            sample_autocorr(Series(vals), 1),
            sample_autocorr(Series(vals), 2),
        )
        for code, vals in grouped.items()
    }
    return per_state, AcfBands(2.0 / math.sqrt(n - 1), 2.0 / math.sqrt(n - 2))


def residual_xcorr_report(
    fit: FitResult,
    centroids: dict[str, tuple[float, float]],
    scaled: bool = False,
) -> tuple[list[tuple[str, str, float, float]], float, float]:
    """All unordered state pairs: distance, correlation, band statistics.

    Returns (pairs, band, pct_within_band) with pairs sorted by state
    codes; pair count is S(S-1)/2.
    """
    grouped = _grouped_residuals(fit, scaled)
    codes = sorted(grouped)
    if len(codes) < 2:
        raise SpecError("cross-correlation diagnostics need at least 2 states")
    missing = [c for c in codes if c not in centroids or None in centroids[c]]
    if missing:
        raise DataError(f"missing centroid for state(s) {missing}")
    n = len(next(iter(grouped.values())))
    band = 2.0 / math.sqrt(n)
    pairs = []
    inside = 0
    for i, a in enumerate(codes):
        for b in codes[i + 1 :]:
            corr = cross_corr(Series(grouped[a]), Series(grouped[b]))
            dist = great_circle_km(centroids[a], centroids[b])
            pairs.append((a, b, dist, corr))
            inside += abs(corr) <= band
    return pairs, band, 100.0 * inside / len(pairs)


def diagnostics_report(
    fit: FitResult,
    centroids: dict[str, tuple[float, float]],
    scaled: bool = False,
) -> DiagnosticsReport:
    per_state, bands = residual_acf_report(fit, scaled)
    pairs, band, pct = residual_xcorr_report(fit, centroids, scaled)
    return DiagnosticsReport(
        per_state_acf=per_state,
        acf_bands=bands,
        pair_xcorr=pairs,
        xcorr_band=band,
        pct_within_band=pct,
    )


@dataclass(frozen=True)
class DispersionReport:
    """Per-state 100*beta estimates with their cross-state spread."""

    per_state_effect: dict[str, float]
    mean: float
    std: float
    population: dict[str, float]


def state_effect_dispersion(data: PanelDataset, spec: ModelSpec) -> DispersionReport:
    """Fit ``spec`` state by state (subtype 2-4) and summarize the spread.

    Populations (mean over years) are paired with the effects for
    funnel-style plots of effect against state size.
    """
    effects = {code: fit_single_state(data, spec, code) for code in data.state_codes}
    values = list(effects.values())
    return DispersionReport(
        per_state_effect=effects,
        mean=statistics.fmean(values),
        std=statistics.stdev(values) if len(values) > 1 else 0.0,
        population={
            code: float(data.population[i].mean()) for i, code in enumerate(data.state_codes)
        },
    )
