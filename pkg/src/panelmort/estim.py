"""Weighted least squares, covariance estimators, AIC, and fit pipelines.

Fits are weighted by analytic weights w (state population by default):
rows of response and regressors are scaled by sqrt(w) and solved by QR.
Two covariance estimates accompany every panel fit: the classical OLS
one, sigma2 * (X'WX)^-1, and a state-clustered sandwich with the CR1
finite-sample factor (G/(G-1)) * ((n-1)/(n-k)).

gls_fit implements the prewhitening identity: GLS with row covariance
Sigma equals OLS after premultiplying rows by Sigma^(-1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import stats

from .dataset import PanelDataset
from .design import (
    LABEL_NATIONAL_UNEMP,
    LABEL_STATE_UNEMP,
    DesignMatrix,
    ModelSpec,
    build_design,
)
from .errors import DegenerateFitError, NumericalError, RankDeficiencyError, SpecError

#: Two-sided p-value thresholds and their significance marks.
STAR_THRESHOLDS = ((0.001, "***"), (0.01, "**"), (0.05, "*"), (0.1, "†"))


def stars(p_value: float) -> str:
    """Map a two-sided p-value to its significance mark."""
    for cut, mark in STAR_THRESHOLDS:
        if p_value < cut:
            return mark
    return ""


@dataclass(frozen=True)
class FitResult:
    """Coefficients, residuals, and inference byproducts of one fit.

    ``residuals`` are on the natural scale (y - X beta), indexed by
    (row_states, row_years).  ``aic``/``loglik`` are None for degenerate
    (zero-RSS) fits; ``cov_clustered`` is None with fewer than 2 clusters.
    """

    labels: tuple[str, ...]
    beta: np.ndarray
    residuals: np.ndarray
    row_states: np.ndarray
    row_years: np.ndarray
    weights: np.ndarray
    sigma2: float
    cov_ols: np.ndarray
    cov_clustered: np.ndarray | None
    dof_ols: int
    dof_clustered: int | None
    aic: float | None
    loglik: float | None
    n: int
    k: int
    n_clusters: int

    @property
    def coefficients(self) -> dict[str, float]:
        return dict(zip(self.labels, map(float, self.beta)))

    def coef(self, label: str) -> float:
        return float(self.beta[self.labels.index(label)])

    def se_ols(self, label: str) -> float:
        i = self.labels.index(label)
        return math.sqrt(self.cov_ols[i, i])

    def se_clustered(self, label: str) -> float | None:
        if self.cov_clustered is None:
            return None
        i = self.labels.index(label)
        return math.sqrt(self.cov_clustered[i, i])

    def residual_series(self) -> dict[str, np.ndarray]:
        """Natural-scale residuals grouped by state, in year order."""
        out = {}
        for code in dict.fromkeys(self.row_states.tolist()):
            mask = self.row_states == code
            order = np.argsort(self.row_years[mask])
            out[code] = self.residuals[mask][order]
        return out


@dataclass(frozen=True)
class EffectReport:
    """An unemployment effect reported as 100 * beta (percent per point)."""

    term: str
    effect_100beta: float
    se_ols: float
    se_clustered: float | None
    stars_ols: str
    stars_clustered: str

    def to_json_dict(self) -> dict:
        return {
            "term": self.term,
            "effect_100beta": self.effect_100beta,
            "se_ols": self.se_ols,
            "se_clustered": self.se_clustered,
            "stars_ols": self.stars_ols,
            "stars_clustered": self.stars_clustered,
        }


def _weighted_matrices(d: DesignMatrix):
    sw = np.sqrt(d.weights)
    return d.columns * sw[:, None], d.response * sw


def cov_ols(sigma2: float, d: DesignMatrix) -> np.ndarray:
    """Classical covariance sigma2 * (X'WX)^-1."""
    xw, _ = _weighted_matrices(d)
    xtwx = xw.T @ xw
    try:
        inv = scipy.linalg.inv(xtwx)
    except scipy.linalg.LinAlgError as exc:
        raise RankDeficiencyError(f"X'WX is singular: {exc}") from exc
    return sigma2 * inv


def cov_clustered(residuals: np.ndarray, d: DesignMatrix) -> np.ndarray:
    """CR1 cluster-robust sandwich over the design's cluster labels."""
    groups = dict.fromkeys(d.clusters.tolist())
    g = len(groups)
    if g < 2:
        raise NumericalError("clustered covariance needs at least 2 clusters")
    n, k = d.columns.shape
    xw, _ = _weighted_matrices(d)
    bread = scipy.linalg.inv(xw.T @ xw)
    meat = np.zeros((k, k))
    for code in groups:
        mask = d.clusters == code
        score = d.columns[mask].T @ (d.weights[mask] * residuals[mask])
        meat += np.outer(score, score)
    factor = (g / (g - 1)) * ((n - 1) / (n - k))
    return factor * bread @ meat @ bread


def _gaussian_loglik(rss_w: float, weights: np.ndarray, n: int) -> float:
    sigma2_ml = rss_w / n
    return -(n / 2.0) * (math.log(2.0 * math.pi * sigma2_ml) + 1.0) + 0.5 * float(
        np.sum(np.log(weights))
    )


def aic(fit: FitResult) -> float:
    """AIC = -2 loglik + 2 (k + 1); the +1 counts the variance parameter."""
    if fit.aic is None:
        raise DegenerateFitError("AIC undefined for a zero-RSS fit")
    return fit.aic


def _degenerate_rss(y_scaled: np.ndarray) -> float:
    """RSS at or below this level is rounding noise from an exact fit."""
    yss = float(y_scaled @ y_scaled)
    return yss * (1e3 * np.finfo(float).eps) ** 2


def wls_fit(d: DesignMatrix) -> FitResult:
    """Weighted least squares via QR on sqrt(w)-scaled rows."""
    n, k = d.columns.shape
    if n <= k:
        raise NumericalError(f"need more rows than columns (n={n}, k={k})")
    xw, yw = _weighted_matrices(d)
    beta, _, rank, _ = scipy.linalg.lstsq(xw, yw, lapack_driver="gelsd")
    if rank < k:
        raise RankDeficiencyError(f"design matrix has rank {rank} < {k} columns")
    residuals = d.response - d.columns @ beta
    rss_w = float(d.weights @ residuals**2)
    if rss_w <= _degenerate_rss(yw):
        rss_w = 0.0
        residuals = np.zeros_like(residuals)
    sigma2 = rss_w / (n - k)
    clusters = dict.fromkeys(d.clusters.tolist())
    g = len(clusters)
    loglik = aic_val = None
    if rss_w > 0.0:
        loglik = _gaussian_loglik(rss_w, d.weights, n)
        aic_val = -2.0 * loglik + 2.0 * (k + 1)
    return FitResult(
        labels=d.labels,
        beta=beta,
        residuals=residuals,
        row_states=d.row_states,
        row_years=d.row_years,
        weights=d.weights,
        sigma2=sigma2,
        cov_ols=cov_ols(sigma2, d),
        cov_clustered=cov_clustered(residuals, d) if g >= 2 else None,
        dof_ols=n - k,
        dof_clustered=g - 1 if g >= 2 else None,
        aic=aic_val,
        loglik=loglik,
        n=n,
        k=k,
        n_clusters=g,
    )


def gls_fit(d: DesignMatrix, sigma: np.ndarray) -> FitResult:
    """Generalized least squares with a full row covariance ``sigma``.

    beta = (X' Sigma^-1 X)^-1 X' Sigma^-1 y.  Identical, by algebra, to
    OLS on rows premultiplied by Sigma^(-1/2).  The design's analytic
    weights are ignored: Sigma carries the full error covariance (use
    sigma = diag(1/w) to reproduce wls_fit with weights w).
    """
    sigma = np.asarray(sigma, dtype=float)
    n, k = d.columns.shape
    if sigma.shape != (n, n):
        raise SpecError(f"sigma must be {n}x{n}, got {sigma.shape}")
    if not np.allclose(sigma, sigma.T, atol=1e-10):
        raise NumericalError("sigma must be symmetric")
    try:
        chol = scipy.linalg.cholesky(sigma, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"sigma is not positive definite: {exc}") from exc
    xt = scipy.linalg.solve_triangular(chol, d.columns, lower=True)
    yt = scipy.linalg.solve_triangular(chol, d.response, lower=True)
    if n <= k:
        raise NumericalError(f"need more rows than columns (n={n}, k={k})")
    beta, _, rank, _ = scipy.linalg.lstsq(xt, yt, lapack_driver="gelsd")
    if rank < k:
        raise RankDeficiencyError(f"design matrix has rank {rank} < {k} columns")
    residuals = d.response - d.columns @ beta
    resid_t = yt - xt @ beta
    rss = float(resid_t @ resid_t)
    if rss <= _degenerate_rss(yt):
        rss = 0.0
        residuals = np.zeros_like(residuals)
    sigma2 = rss / (n - k)
    xtsx_inv = scipy.linalg.inv(xt.T @ xt)
    ones = np.ones(n)
    loglik = aic_val = None
    if rss > 0.0:
        loglik = _gaussian_loglik(rss, ones, n)
        aic_val = -2.0 * loglik + 2.0 * (k + 1)
    return FitResult(
        labels=d.labels,
        beta=beta,
        residuals=residuals,
        row_states=d.row_states,
        row_years=d.row_years,
        weights=ones,
        sigma2=sigma2,
        cov_ols=sigma2 * xtsx_inv,
        cov_clustered=None,
        dof_ols=n - k,
        dof_clustered=None,
        aic=aic_val,
        loglik=loglik,
        n=n,
        k=k,
        n_clusters=len(dict.fromkeys(d.clusters.tolist())),
    )


def _effect_report(fit: FitResult, term: str) -> EffectReport:
    beta = fit.coef(term)
    se_o = fit.se_ols(term)
    p_ols = 2.0 * stats.t.sf(abs(beta) / se_o, fit.dof_ols) if se_o > 0 else 0.0
    se_c = fit.se_clustered(term)
    stars_c = ""
    if se_c is not None and se_c > 0:
        p_c = 2.0 * stats.t.sf(abs(beta) / se_c, fit.dof_clustered)
        stars_c = stars(p_c)
    return EffectReport(
        term=term,
        effect_100beta=100.0 * beta,
        se_ols=100.0 * se_o,
        se_clustered=100.0 * se_c if se_c is not None else None,
        stars_ols=stars(p_ols),
        stars_clustered=stars_c,
    )


@dataclass(frozen=True)
class ModelFit:
    """A fitted specification with its effect reports."""

    spec: ModelSpec
    fit: FitResult
    effects: dict[str, EffectReport]


def fit_model(data: PanelDataset, spec: ModelSpec) -> ModelFit:
    """build_design -> wls_fit -> covariances, AIC, and effect reports."""
    fit = wls_fit(build_design(data, spec))
    effects = {}
    for term in (LABEL_STATE_UNEMP, LABEL_NATIONAL_UNEMP):
        if term in fit.labels:
            effects[term] = _effect_report(fit, term)
    return ModelFit(spec=spec, fit=fit, effects=effects)


def fit_single_state(data: PanelDataset, spec: ModelSpec, state: str) -> float:
    """Fit ``spec`` on one state's data; returns 100 * beta for the
    economy covariate.

    Year effects are not estimable from one state, so subtype 1 is a
    contract violation.
    """
    if spec.subtype == 1:
        raise SpecError("single-state fits cannot estimate year effects; use subtype 2-4")
    fit = wls_fit(build_design(data.subset_states([state]), spec))
    term = LABEL_STATE_UNEMP if spec.has_state_unemployment else LABEL_NATIONAL_UNEMP
    return 100.0 * fit.coef(term)


#: Response-transform families whose AIC values are mutually comparable.
def _aic_group(spec: ModelSpec) -> str:
    if spec.model_type in ("B", "L"):
        return "levels"
    if spec.model_type == "D":
        return "differences"
    return f"hp(lambda={spec.hp_lambda:g})"


@dataclass(frozen=True)
class ComparisonRow:
    """One specification's line in a model-comparison table."""

    label: str
    series: str
    effects: dict[str, EffectReport]
    year_effects: bool
    aic: float
    aic_group: str
    delta_aic: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "series": self.series,
            "effects": {k: v.to_json_dict() for k, v in self.effects.items()},
            "year_effects": self.year_effects,
            "aic": self.aic,
            "aic_group": self.aic_group,
            "delta_aic": self.delta_aic,
        }


def compare_models(data: PanelDataset, specs) -> list[ComparisonRow]:
    """Fit every spec and tabulate effects, stars, and AIC.

    delta_aic is relative to the best (minimum) AIC within each
    comparable response-transform group; AIC values across groups are
    not comparable and are only annotated by group.
    """
    specs = list(specs)
    if not specs:
        raise SpecError("compare_models needs at least one spec")
    series = {s.series for s in specs}
    if len(series) > 1:
        raise SpecError(f"specs must share one response series, got {sorted(series)}")
    rows = []
    for spec in specs:
        mf = fit_model(data, spec)
        rows.append(
            ComparisonRow(
                label=spec.label,
                series=spec.series,
                effects=mf.effects,
                year_effects=spec.has_year_effects,
                aic=aic(mf.fit),
                aic_group=_aic_group(spec),
            )
        )
    best = {}
    for row in rows:
        best[row.aic_group] = min(best.get(row.aic_group, math.inf), row.aic)
    return [
        ComparisonRow(
            label=r.label,
            series=r.series,
            effects=r.effects,
            year_effects=r.year_effects,
            aic=r.aic,
            aic_group=r.aic_group,
            delta_aic=r.aic - best[r.aic_group],
        )
        for r in rows
    ]


def fit_to_json_dict(mf: ModelFit) -> dict:
    fit = mf.fit
    return {
        "spec": mf.spec.to_json_dict(),
        "coefficients": fit.coefficients,
        "sigma2": fit.sigma2,
        "aic": fit.aic,
        "loglik": fit.loglik,
        "n": fit.n,
        "k": fit.k,
        "n_clusters": fit.n_clusters,
        "dof_ols": fit.dof_ols,
        "dof_clustered": fit.dof_clustered,
        "effects": {k: v.to_json_dict() for k, v in mf.effects.items()},
    }
