"""Model specifications and design-matrix construction.

A ModelSpec picks a model type (B, L, D, HP), a covariate subtype
(1-4), and a mortality series; build_design turns it plus a panel into
the response vector, labeled regressor columns, analytic weights, and
cluster ids of the corresponding regression.

Model types transform the time-dependent variables per state:
B leaves them in levels with state fixed effects; L adds state-specific
linear trends; D takes first differences (keeping state fixed effects);
HP replaces each variable with its HP-filter residual and drops state
effects and trends, which the filter already removes.

Subtypes select the economy covariates: 1 = state unemployment plus
year effects; 2 = state unemployment only; 3 = national unemployment
only; 4 = both unemployment measures.  National unemployment is a
linear combination of the year effects, so subtype 1 never includes it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dataset import AGE_SPECIFIC_KEYS, ICD_CORRECTED_KEYS, ICD_JUMP_FROM_YEAR, PanelDataset, SERIES_KEYS
from .errors import RankDeficiencyError, SpecError
from .series import Series, difference
from .series import hp_residual_values as _hp_residual
from . import dataset as _dataset

MODEL_TYPES = ("B", "L", "D", "HP")
SUBTYPES = (1, 2, 3, 4)
WEIGHT_SCHEMES = ("pop", "sqrt-pop")

LABEL_INTERCEPT = "intercept"
LABEL_STATE_UNEMP = "state_unemployment"
LABEL_NATIONAL_UNEMP = "national_unemployment"
LABEL_AGE_UNDER5 = "age_under5"
LABEL_AGE_OVER65 = "age_over65"


@dataclass(frozen=True)
class ModelSpec:
    """A regression specification: type x subtype x mortality series."""

    model_type: str
    subtype: int
    series: str = "total"
    hp_lambda: float = 100.0
    apply_icd_correction: bool = True
    weight_scheme: str = "pop"

    def __post_init__(self):
        if self.model_type not in MODEL_TYPES:
            raise SpecError(f"model_type must be one of {MODEL_TYPES}, got {self.model_type!r}")
        if self.subtype not in SUBTYPES:
            raise SpecError(f"subtype must be one of {SUBTYPES}, got {self.subtype!r}")
        if self.series not in SERIES_KEYS:
            raise SpecError(f"series must be one of {SERIES_KEYS}, got {self.series!r}")
        if not self.hp_lambda > 0:
            raise SpecError(f"hp_lambda must be positive, got {self.hp_lambda}")
        if self.weight_scheme not in WEIGHT_SCHEMES:
            raise SpecError(f"weight_scheme must be one of {WEIGHT_SCHEMES}")

    @property
    def label(self) -> str:
        return f"{self.model_type}{self.subtype}"

    @property
    def has_state_unemployment(self) -> bool:
        return self.subtype in (1, 2, 4)

    @property
    def has_national_unemployment(self) -> bool:
        return self.subtype in (3, 4)

    @property
    def has_year_effects(self) -> bool:
        return self.subtype == 1

    @property
    def has_state_effects(self) -> bool:
        return self.model_type in ("B", "L", "D")

    @property
    def has_state_trends(self) -> bool:
        return self.model_type == "L"

    @property
    def has_age_structure(self) -> bool:
        return self.series not in AGE_SPECIFIC_KEYS

    def to_json_dict(self) -> dict:
        return {
            "model_type": self.model_type,
            "subtype": self.subtype,
            "series": self.series,
            "hp_lambda": self.hp_lambda,
            "apply_icd_correction": self.apply_icd_correction,
            "weight_scheme": self.weight_scheme,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ModelSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise SpecError(f"unknown ModelSpec fields {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class DesignMatrix:
    """Response, labeled regressors, analytic weights, and clusters."""

    response: np.ndarray
    columns: np.ndarray
    labels: tuple[str, ...]
    weights: np.ndarray
    clusters: np.ndarray
    row_states: np.ndarray = field(repr=False, default=None)
    row_years: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        n, k = self.columns.shape
        if self.response.shape != (n,) or self.weights.shape != (n,):
            raise SpecError("response/weights shape mismatch with columns")
        if len(self.labels) != k:
            raise SpecError("one label per column required")
        if np.any(self.weights <= 0):
            raise SpecError("analytic weights must be strictly positive")

    @property
    def n_rows(self) -> int:
        return self.columns.shape[0]

    @property
    def n_cols(self) -> int:
        return self.columns.shape[1]

    def column(self, label: str) -> np.ndarray:
        return self.columns[:, self.labels.index(label)]


def transform_series_for_type(x: Series, model_type: str, hp_lambda: float = 100.0) -> Series:
    """Apply a model type's prewhitening transform to one series."""
    if model_type in ("B", "L"):
        return x
    if model_type == "D":
        return difference(x)
    if model_type == "HP":
        return Series(_hp_residual(x.values, hp_lambda), x.start_year)
    raise SpecError(f"unknown model type {model_type!r}")


def _corrected_log_mortality(data: PanelDataset, spec: ModelSpec) -> np.ndarray:
    if spec.series not in data.mortality:
        raise SpecError(f"panel has no mortality series {spec.series!r}")
    logm = np.log(data.mortality[spec.series])
    jump_applies = (
        spec.apply_icd_correction
        and spec.series in ICD_CORRECTED_KEYS
        and ICD_JUMP_FROM_YEAR in data.years
        and ICD_JUMP_FROM_YEAR + 1 in data.years
        and data.n_years >= 3
    )
    if jump_applies:
        start = int(data.years[0])
        logm = np.vstack(
            [
                _dataset.icd_jump_correct(Series(row, start), ICD_JUMP_FROM_YEAR).values
                for row in logm
            ]
        )
    return logm


def _transform_panel(data: PanelDataset, spec: ModelSpec):
    """Per-type transforms of all time-dependent variables.

    Returns (logm, u, n, a, years, pop) where the time axis may have
    shrunk by one for differenced models.  Row weights use the
    population of the row's label year.
    """
    logm = _corrected_log_mortality(data, spec)
    u = data.state_unemployment
    nat = data.national_unemployment
    a = data.age_structure
    pop = data.population
    years = data.years
    mt = spec.model_type
    if mt == "D":
        if data.n_years < 2:
            raise SpecError("differenced models need at least 2 years")
        logm = np.diff(logm, axis=1)
        u = np.diff(u, axis=1)
        nat = np.diff(nat)
        a = np.diff(a, axis=1)
        years = years[1:]
        pop = pop[:, 1:]
    elif mt == "HP":
        lam = spec.hp_lambda
        logm = np.vstack([_hp_residual(row, lam) for row in logm])
        u = np.vstack([_hp_residual(row, lam) for row in u])
        nat = _hp_residual(nat, lam)
        a = np.stack(
            [np.vstack([_hp_residual(row, lam) for row in a[:, :, c]]) for c in range(2)],
            axis=2,
        )
    return logm, u, nat, a, years, pop


def _check_full_rank(columns: np.ndarray, labels) -> None:
    n, k = columns.shape
    if n == 0:
        raise SpecError("empty design (no rows)")
    _, r, piv = scipy.linalg.qr(columns, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag.max() * max(n, k) * np.finfo(float).eps if diag.size else 0.0
    bad = [labels[piv[j]] for j in range(len(diag)) if diag[j] <= tol]
    if bad or k > n:
        raise RankDeficiencyError(
            f"design matrix is rank deficient; dependent columns involve {bad}",
            columns=bad,
        )


def build_design(data: PanelDataset, spec: ModelSpec) -> DesignMatrix:
    """Assemble the regression for ``spec`` on ``data``.

    Rows are ordered state-major (all years of the first state, then the
    second, ...).  Reference categories: the first state and the first
    year are dropped from the dummy blocks, with one global intercept.
    """
    logm, u, nat, a, years, pop = _transform_panel(data, spec)
    s_count, t_count = logm.shape
    codes = data.state_codes

    labels: list[str] = [LABEL_INTERCEPT]
    cols: list[np.ndarray] = [np.ones(s_count * t_count)]

    if spec.has_state_unemployment:
        labels.append(LABEL_STATE_UNEMP)
        cols.append(u.ravel())
    if spec.has_national_unemployment:
        labels.append(LABEL_NATIONAL_UNEMP)
        cols.append(np.tile(nat, s_count))
    if spec.has_age_structure:
        labels += [LABEL_AGE_UNDER5, LABEL_AGE_OVER65]
        cols += [a[:, :, 0].ravel(), a[:, :, 1].ravel()]
    if spec.has_year_effects:
        for j in range(1, t_count):
            col = np.zeros((s_count, t_count))
            col[:, j] = 1.0
            labels.append(f"year:{int(years[j])}")
            cols.append(col.ravel())
    if spec.has_state_effects:
        for i in range(1, s_count):
            col = np.zeros((s_count, t_count))
            col[i, :] = 1.0
            labels.append(f"state:{codes[i]}")
            cols.append(col.ravel())
    if spec.has_state_trends:
        # centered time index: identical fit, better conditioning.
        # With year effects the trend columns sum to a global linear
        # trend already spanned by the year dummies, so the reference
        # state's trend is dropped.
        tc = np.arange(t_count, dtype=float) - (t_count - 1) / 2.0
        for i in range(1 if spec.has_year_effects else 0, s_count):
            col = np.zeros((s_count, t_count))
            col[i, :] = tc
            labels.append(f"trend:{codes[i]}")
            cols.append(col.ravel())

    columns = np.column_stack(cols)
    _check_full_rank(columns, labels)

    weights = pop.ravel().astype(float)
    if spec.weight_scheme == "sqrt-pop":
        weights = np.sqrt(weights)
    return DesignMatrix(
        response=logm.ravel(),
        columns=columns,
        labels=tuple(labels),
        weights=weights,
        clusters=np.repeat(np.array(codes), t_count),
        row_states=np.repeat(np.array(codes), t_count),
        row_years=np.tile(years, s_count),
    )
