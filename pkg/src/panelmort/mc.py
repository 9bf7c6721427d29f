"""Synthetic panels with known ground truth and Monte Carlo experiments.

The data-generating process is

    log m_it = beta_u * u_it + year_t + state_i + trend_i(t) + eps_it

exponentiated to rates.  Unemployment follows a stationary AR(1) around
a state-specific mean (optionally with a state-specific linear drift,
so trends can be made to correlate with unemployment paths).  Errors
are iid or AR(1); trends are absent, linear with random slopes, or
smooth nonlinear (a random walk of slopes).

Reproducibility: every replicate seeds a fresh numpy PCG64 generator
from (seed, replicate), so results are independent of evaluation order
and identical across runs; the generator name is recorded in the
summary metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .dataset import PanelDataset, StateInfo
from .design import LABEL_STATE_UNEMP, ModelSpec, build_design
from .errors import McReplicateError, SpecError
from .estim import wls_fit

GENERATOR_NAME = "numpy.random.Generator(PCG64)"

ERROR_KINDS = ("iid", "ar1")
TREND_KINDS = ("none", "linear", "smooth")


@dataclass(frozen=True)
class ErrorProcess:
    kind: str = "iid"
    sigma: float = 0.01
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in ERROR_KINDS:
            raise SpecError(f"error kind must be one of {ERROR_KINDS}")
        if self.sigma < 0:
            raise SpecError("error sigma must be >= 0")
        if self.kind == "ar1" and not abs(self.rho) < 1:
            raise SpecError("AR(1) rho must satisfy |rho| < 1")


@dataclass(frozen=True)
class TrendProcess:
    """State trend specification.

    ``scale`` is the slope standard deviation for ``linear`` and the
    slope-innovation standard deviation for ``smooth``.  A nonzero
    ``unemployment_loading`` adds loading * (state's unemployment drift)
    to the linear slope, making trends correlate with unemployment.
    """

    kind: str = "none"
    scale: float = 0.0
    unemployment_loading: float = 0.0

    def __post_init__(self):
        if self.kind not in TREND_KINDS:
            raise SpecError(f"trend kind must be one of {TREND_KINDS}")
        if self.scale < 0:
            raise SpecError("trend scale must be >= 0")


@dataclass(frozen=True)
class SimConfig:
    n_states: int = 20
    n_years: int = 27
    true_beta_u: float = -0.005
    error_process: ErrorProcess = field(default_factory=ErrorProcess)
    trend_process: TrendProcess = field(default_factory=TrendProcess)
    year_effect_sd: float = 0.0
    unemployment_rho: float = 0.6
    unemployment_sd: float = 0.8
    unemployment_drift_sd: float = 0.0
    population: tuple[float, ...] | None = None
    seed: int = 0
    start_year: int = 1980

    def __post_init__(self):
        if self.n_states < 1 or self.n_years < 5:
            raise SpecError("need n_states >= 1 and n_years >= 5")
        if not abs(self.unemployment_rho) < 1:
            raise SpecError("unemployment rho must satisfy |rho| < 1")
        if self.unemployment_sd <= 0:
            raise SpecError("unemployment sd must be positive")
        if self.population is not None and (
            len(self.population) != self.n_states or min(self.population) <= 0
        ):
            raise SpecError("population must give one positive constant per state")

    def to_json_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_years": self.n_years,
            "true_beta_u": self.true_beta_u,
            "error_process": {
                "kind": self.error_process.kind,
                "sigma": self.error_process.sigma,
                "rho": self.error_process.rho,
            },
            "trend_process": {
                "kind": self.trend_process.kind,
                "scale": self.trend_process.scale,
                "unemployment_loading": self.trend_process.unemployment_loading,
            },
            "year_effect_sd": self.year_effect_sd,
            "unemployment_rho": self.unemployment_rho,
            "unemployment_sd": self.unemployment_sd,
            "unemployment_drift_sd": self.unemployment_drift_sd,
            "population": list(self.population) if self.population is not None else None,
            "seed": self.seed,
            "start_year": self.start_year,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SimConfig":
        obj = dict(obj)
        if "error_process" in obj:
            obj["error_process"] = ErrorProcess(**obj["error_process"])
        if "trend_process" in obj:
            obj["trend_process"] = TrendProcess(**obj["trend_process"])
        if obj.get("population") is not None:
            obj["population"] = tuple(obj["population"])
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise SpecError(f"unknown SimConfig fields {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        return cls.from_json_dict(json.loads(text))


def _ar1(rng, rho, sigma, size):
    """Stationary AR(1) paths, shape (series, length)."""
    series, length = size
    out = np.empty(size)
    if sigma == 0.0:
        return np.zeros(size)
    marginal = sigma / np.sqrt(1.0 - rho**2) if rho != 0.0 else sigma
    out[:, 0] = marginal * rng.standard_normal(series)
    shocks = sigma * rng.standard_normal((series, length - 1))
    for t in range(1, length):
        out[:, t] = rho * out[:, t - 1] + shocks[:, t - 1]
    return out


def generate_panel(cfg: SimConfig, replicate: int = 0) -> tuple[PanelDataset, dict]:
    """One synthetic panel plus its ground-truth record."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, int(replicate)]))
    s, t = cfg.n_states, cfg.n_years
    tc = np.arange(t, dtype=float) - (t - 1) / 2.0

    u_mean = rng.uniform(4.0, 8.0, s)
    u_drift = cfg.unemployment_drift_sd * rng.standard_normal(s)
    u = (
        u_mean[:, None]
        + u_drift[:, None] * tc[None, :]
        + _ar1(rng, cfg.unemployment_rho, cfg.unemployment_sd, (s, t))
    )

    year_effects = cfg.year_effect_sd * rng.standard_normal(t)
    state_effects = rng.normal(np.log(8.5), 0.1, s)

    tp = cfg.trend_process
    if tp.kind == "none":
        trends = np.zeros((s, t))
        slopes = np.zeros(s)
    elif tp.kind == "linear":
        slopes = tp.scale * rng.standard_normal(s) + tp.unemployment_loading * u_drift
        trends = slopes[:, None] * tc[None, :]
    else:  # smooth: random walk of slopes, centered per state
        slopes = tp.scale * rng.standard_normal((s, t))
        trends = np.cumsum(np.cumsum(slopes, axis=1), axis=1)
        trends -= trends.mean(axis=1, keepdims=True)

    if cfg.population is not None:
        pop_state = np.asarray(cfg.population, dtype=float)
    else:
        pop_state = np.geomspace(5e5, 3e7, s)

    # Error variance scales inversely with state population, matching
    # the analytic population weights used at fit time; ep.sigma is the
    # error sd at the geometric-mean population.
    pop_ref = np.exp(np.mean(np.log(pop_state)))
    error_scale = np.sqrt(pop_ref / pop_state)[:, None]
    ep = cfg.error_process
    if ep.kind == "iid":
        eps = ep.sigma * rng.standard_normal((s, t)) * error_scale
    else:
        eps = _ar1(rng, ep.rho, ep.sigma, (s, t)) * error_scale

    logm = (
        cfg.true_beta_u * u
        + year_effects[None, :]
        + state_effects[:, None]
        + trends
        + eps
    )

    population = np.tile(pop_state[:, None], (1, t))

    # small fluctuations keep the age columns non-degenerate under all
    # transforms; independent of u and eps, so estimates stay unbiased
    age = np.stack(
        [
            np.clip(0.07 + 0.003 * rng.standard_normal((s, t)), 0.0, 1.0),
            np.clip(0.125 + 0.003 * rng.standard_normal((s, t)), 0.0, 1.0),
        ],
        axis=2,
    )

    national = np.average(u, axis=0, weights=pop_state)
    # grid of synthetic centroids so distance diagnostics work; pad the
    # codes so they sort numerically at any panel size
    width = max(2, len(str(s - 1)))
    states = tuple(
        StateInfo(f"S{i:0{width}d}", 30.0 + 3.0 * (i // 10), -120.0 + 5.0 * (i % 10))
        for i in range(s)
    )
    data = PanelDataset(
        states=states,
        years=np.arange(cfg.start_year, cfg.start_year + t),
        mortality={"total": np.exp(logm)},
        state_unemployment=u,
        national_unemployment=national,
        population=population,
        age_structure=age,
    )
    truth = {
        "beta_u": cfg.true_beta_u,
        "state_effects": state_effects,
        "year_effects": year_effects,
        "trends": trends,
        "errors": eps,
    }
    return data, truth


@dataclass(frozen=True)
class McSummary:
    """Bias, spread, SE calibration, coverage, and test size over replicates."""

    mean_bias: float
    sd_of_estimates: float
    mean_se_ols: float
    mean_se_clustered: float
    coverage_ols: float
    coverage_clustered: float
    rejection_rate_at_5pct: float
    n_reps: int

    def to_json_dict(self) -> dict:
        return {
            "mean_bias": self.mean_bias,
            "sd_of_estimates": self.sd_of_estimates,
            "mean_se_ols": self.mean_se_ols,
            "mean_se_clustered": self.mean_se_clustered,
            "coverage_ols": self.coverage_ols,
            "coverage_clustered": self.coverage_clustered,
            "rejection_rate_at_5pct": self.rejection_rate_at_5pct,
            "n_reps": self.n_reps,
        }


def run_monte_carlo(cfg: SimConfig, spec: ModelSpec, n_reps: int) -> McSummary:
    """Fit ``spec`` on ``n_reps`` synthetic panels and summarize.

    Coverage is of 95% t intervals at the estimator's own degrees of
    freedom (n-k for OLS, G-1 clustered); the rejection rate is of the
    5% two-sided OLS t test of beta_u = 0, which measures test size
    when the config's true_beta_u is 0.
    """
    if n_reps < 1:
        raise SpecError("n_reps must be >= 1")
    estimates = np.empty(n_reps)
    se_ols = np.empty(n_reps)
    se_clu = np.empty(n_reps)
    dof_ols = dof_clu = None
    for rep in range(n_reps):
        try:
            data, _ = generate_panel(cfg, rep)
            fit = wls_fit(build_design(data, spec))
            estimates[rep] = fit.coef(LABEL_STATE_UNEMP)
            se_ols[rep] = fit.se_ols(LABEL_STATE_UNEMP)
            sec = fit.se_clustered(LABEL_STATE_UNEMP)
            se_clu[rep] = np.nan if sec is None else sec
            dof_ols, dof_clu = fit.dof_ols, fit.dof_clustered
        except Exception as exc:
            raise McReplicateError(rep, str(exc)) from exc

    true = cfg.true_beta_u
    crit_ols = stats.t.ppf(0.975, dof_ols)
    covered_ols = np.abs(estimates - true) <= crit_ols * se_ols
    if dof_clu is not None and not np.any(np.isnan(se_clu)):
        crit_clu = stats.t.ppf(0.975, dof_clu)
        coverage_clu = float(np.mean(np.abs(estimates - true) <= crit_clu * se_clu))
        mean_se_clu = float(se_clu.mean())
    else:
        coverage_clu = float("nan")
        mean_se_clu = float("nan")
    pvals = 2.0 * stats.t.sf(np.abs(estimates) / se_ols, dof_ols)
    return McSummary(
        mean_bias=float(estimates.mean() - true),
        sd_of_estimates=float(estimates.std(ddof=1)) if n_reps > 1 else 0.0,
        mean_se_ols=float(se_ols.mean()),
        mean_se_clustered=mean_se_clu,
        coverage_ols=float(covered_ols.mean()),
        coverage_clustered=coverage_clu,
        rejection_rate_at_5pct=float(np.mean(pvals < 0.05)),
        n_reps=n_reps,
    )


def summary_metadata(cfg: SimConfig, spec: ModelSpec, n_reps: int) -> dict:
    return {
        "generator": GENERATOR_NAME,
        "seed": cfg.seed,
        "config": cfg.to_json_dict(),
        "spec": spec.to_json_dict(),
        "n_reps": n_reps,
    }
