"""Panel data model and CSV ingestion.

The panel is a balanced state x year grid of mortality rates (one grid
per mortality category), state and national unemployment, population,
and age-structure proportions.  Loading is strict: any missing cell,
duplicate key, non-positive rate, or gap in the year range is an error
that names the offending row.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError, SeriesError
from .series import Series

#: Closed enumeration of mortality series: total, three age groups and
#: eight major causes of death.
SERIES_KEYS = (
    "total",
    "age20-44",
    "age45-64",
    "age65plus",
    "cardio",
    "ischemic",
    "cancer",
    "respiratory",
    "infectious",
    "traffic",
    "suicide",
    "homicide",
)

#: Age-specific series; regressions on these omit the age-structure covariates.
AGE_SPECIFIC_KEYS = frozenset({"age20-44", "age45-64", "age65plus"})

#: Series affected by the ICD9 -> ICD10 coding transition.
ICD_CORRECTED_KEYS = frozenset({"ischemic", "cancer"})

#: The coding transition happened between these two calendar years.
ICD_JUMP_FROM_YEAR = 1998

NATIONAL_CODE = "US"


@dataclass(frozen=True)
class StateInfo:
    """A state's 2-letter code and geographic center (None if unknown)."""

    code: str
    lat: float | None = None
    lon: float | None = None


@dataclass(frozen=True)
class PanelDataset:
    """Balanced state x year panel.

    ``mortality`` maps a series key to an (S, T) array of rates (deaths
    per 1000 per year); ``state_unemployment`` and ``population`` are
    (S, T); ``national_unemployment`` is (T,); ``age_structure`` is
    (S, T, 2) holding (prop_under5, prop_over65).  States are sorted by
    code and the year range is contiguous.  Immutable after load.
    """

    states: tuple[StateInfo, ...]
    years: np.ndarray
    mortality: dict[str, np.ndarray]
    state_unemployment: np.ndarray
    national_unemployment: np.ndarray
    population: np.ndarray
    age_structure: np.ndarray

    def __post_init__(self):
        s, t = len(self.states), len(self.years)
        years = np.asarray(self.years, dtype=int)
        if t < 1 or s < 1:
            raise DataError("panel needs at least one state and one year")
        if t > 1 and not np.all(np.diff(years) == 1):
            raise DataError("years must be contiguous")
        codes = [st.code for st in self.states]
        if codes != sorted(codes) or len(set(codes)) != s:
            raise DataError("states must be unique and sorted by code")
        object.__setattr__(self, "years", years)
        for key, grid in self.mortality.items():
            if key not in SERIES_KEYS:
                raise DataError(f"unknown mortality series key {key!r}")
            self._check_grid(grid, (s, t), f"mortality[{key}]", positive=True)
        self._check_grid(self.state_unemployment, (s, t), "state_unemployment")
        self._check_grid(self.national_unemployment, (t,), "national_unemployment")
        self._check_grid(self.population, (s, t), "population", positive=True)
        self._check_grid(self.age_structure, (s, t, 2), "age_structure")
        props = self.age_structure
        if np.any(props < 0) or np.any(props > 1) or np.any(props.sum(axis=2) >= 1):
            raise DataError("age-structure proportions must lie in [0, 1] and sum to < 1")

    @staticmethod
    def _check_grid(grid, shape, name, positive=False):
        grid = np.asarray(grid, dtype=float)
        if grid.shape != shape:
            raise DataError(f"{name} has shape {grid.shape}, expected {shape}")
        if not np.all(np.isfinite(grid)):
            raise DataError(f"{name} contains non-finite values")
        if positive and np.any(grid <= 0):
            raise DataError(f"{name} contains non-positive values")

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_years(self) -> int:
        return len(self.years)

    @property
    def state_codes(self) -> tuple[str, ...]:
        return tuple(st.code for st in self.states)

    def state_index(self, code: str) -> int:
        try:
            return self.state_codes.index(code)
        except ValueError:
            raise DataError(f"unknown state code {code!r}") from None

    def mortality_series(self, code: str, key: str) -> Series:
        return Series(self.mortality[key][self.state_index(code)], int(self.years[0]))

    def subset_states(self, codes) -> "PanelDataset":
        """Restrict the panel to the given states (order normalized)."""
        idx = sorted(self.state_index(c) for c in codes)
        return PanelDataset(
            states=tuple(self.states[i] for i in idx),
            years=self.years,
            mortality={k: v[idx] for k, v in self.mortality.items()},
            state_unemployment=self.state_unemployment[idx],
            national_unemployment=self.national_unemployment,
            population=self.population[idx],
            age_structure=self.age_structure[idx],
        )


def _read_csv(path, columns):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except Exception as exc:
        raise DataError(f"{path}: cannot parse CSV ({exc})") from exc
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing required columns {missing}")
    return frame


def _row_loc(path, frame_index):
    # +2: header line plus 1-based numbering
    return f"{path}, line {int(frame_index) + 2}"


def _pivot_balanced(frame, path, value_col, states, years, extra_key=None):
    """Turn long-form rows into an (S, T) grid, erroring on duplicates
    and missing cells with their row location (or missing-cell name)."""
    grid = np.full((len(states), len(years)), np.nan)
    state_pos = {s: i for i, s in enumerate(states)}
    year_pos = {y: j for j, y in enumerate(years)}
    for idx, row in frame.iterrows():
        st, yr = row["state"], int(row["year"])
        if st not in state_pos:
            continue
        if yr not in year_pos:
            raise DataError(f"{_row_loc(path, idx)}: year {yr} outside the panel's year range")
        i, j = state_pos[st], year_pos[yr]
        if not np.isnan(grid[i, j]):
            key = f"({st}, {yr}" + (f", {extra_key})" if extra_key else ")")
            raise DataError(f"{_row_loc(path, idx)}: duplicate key {key}")
        grid[i, j] = row[value_col]
    missing = np.argwhere(np.isnan(grid))
    if missing.size:
        i, j = missing[0]
        cell = f"({states[i]}, {years[j]}" + (f", {extra_key})" if extra_key else ")")
        raise DataError(
            f"{path}: unbalanced panel, {len(missing)} missing cell(s) for "
            f"{value_col!r}, first missing {cell}"
        )
    return grid


def load_panel(
    mortality_csv,
    unemployment_csv,
    agestructure_csv,
    impute_national: bool = False,
) -> PanelDataset:
    """Load and validate a balanced panel from the three input CSVs.

    National unemployment is taken from rows with state code ``US``.
    If ``impute_national`` is set, a missing national rate for a year is
    filled with the population-weighted mean of the state rates for
    that year; the default is a hard error.
    """
    mort = _read_csv(mortality_csv, ["state", "year", "category", "rate"])
    unem = _read_csv(unemployment_csv, ["state", "year", "rate"])
    ages = _read_csv(agestructure_csv, ["state", "year", "prop_under5", "prop_over65", "population"])

    for idx, cat in mort["category"].items():
        if cat not in SERIES_KEYS:
            raise DataError(
                f"{_row_loc(mortality_csv, idx)}: unknown category {cat!r} "
                f"(expected one of {', '.join(SERIES_KEYS)})"
            )

    states = sorted(set(mort["state"]))
    years_set = set(mort["year"].astype(int))
    years = np.arange(min(years_set), max(years_set) + 1)
    if years_set != set(years.tolist()):
        gaps = sorted(set(years.tolist()) - years_set)
        raise DataError(f"{mortality_csv}: non-contiguous years, missing {gaps}")

    mortality = {}
    for key, sub in mort.groupby("category"):
        grid = _pivot_balanced(sub, mortality_csv, "rate", states, years, extra_key=key)
        if np.any(grid <= 0):
            i, j = np.argwhere(grid <= 0)[0]
            raise DataError(
                f"{mortality_csv}: non-positive rate for ({states[i]}, {years[j]}, {key})"
            )
        mortality[str(key)] = grid

    state_rows = unem[unem["state"] != NATIONAL_CODE]
    extra = sorted(set(state_rows["state"]) - set(states))
    if extra:
        raise DataError(f"{unemployment_csv}: states {extra} absent from mortality data")
    state_unemp = _pivot_balanced(state_rows, unemployment_csv, "rate", states, years)

    pop = _pivot_balanced(ages, agestructure_csv, "population", states, years)
    under5 = _pivot_balanced(ages, agestructure_csv, "prop_under5", states, years)
    over65 = _pivot_balanced(ages, agestructure_csv, "prop_over65", states, years)

    nat_rows = unem[unem["state"] == NATIONAL_CODE]
    national = np.full(len(years), np.nan)
    year_pos = {y: j for j, y in enumerate(years)}
    for idx, row in nat_rows.iterrows():
        yr = int(row["year"])
        if yr not in year_pos:
            raise DataError(f"{_row_loc(unemployment_csv, idx)}: year {yr} outside the panel's year range")
        if not np.isnan(national[year_pos[yr]]):
            raise DataError(f"{_row_loc(unemployment_csv, idx)}: duplicate key (US, {yr})")
        national[year_pos[yr]] = row["rate"]
    if np.any(np.isnan(national)):
        missing_years = [int(years[j]) for j in np.flatnonzero(np.isnan(national))]
        if not impute_national:
            raise DataError(
                f"{unemployment_csv}: no national (US) unemployment for years "
                f"{missing_years}; pass impute_national=True to use the "
                f"population-weighted mean of state rates"
            )
        for j in np.flatnonzero(np.isnan(national)):
            national[j] = np.average(state_unemp[:, j], weights=pop[:, j])

    centroids = state_centroids()
    infos = tuple(
        StateInfo(code, *(centroids[code] if code in centroids else (None, None)))
        for code in states
    )
    return PanelDataset(
        states=infos,
        years=years,
        mortality=mortality,
        state_unemployment=state_unemp,
        national_unemployment=national,
        population=pop,
        age_structure=np.stack([under5, over65], axis=2),
    )


def save_panel(data: PanelDataset, mortality_csv, unemployment_csv, agestructure_csv) -> None:
    """Write a panel back to the three-CSV schema (full precision)."""
    codes, years = data.state_codes, data.years
    mrows = [
        {"state": codes[i], "year": int(y), "category": key, "rate": repr(float(grid[i, j]))}
        for key, grid in sorted(data.mortality.items())
        for i in range(data.n_states)
        for j, y in enumerate(years)
    ]
    pd.DataFrame(mrows).to_csv(mortality_csv, index=False)
    urows = [
        {"state": codes[i], "year": int(y), "rate": repr(float(data.state_unemployment[i, j]))}
        for i in range(data.n_states)
        for j, y in enumerate(years)
    ]
    urows += [
        {"state": NATIONAL_CODE, "year": int(y), "rate": repr(float(data.national_unemployment[j]))}
        for j, y in enumerate(years)
    ]
    pd.DataFrame(urows).to_csv(unemployment_csv, index=False)
    arows = [
        {
            "state": codes[i],
            "year": int(y),
            "prop_under5": repr(float(data.age_structure[i, j, 0])),
            "prop_over65": repr(float(data.age_structure[i, j, 1])),
            "population": repr(float(data.population[i, j])),
        }
        for i in range(data.n_states)
        for j, y in enumerate(years)
    ]
    pd.DataFrame(arows).to_csv(agestructure_csv, index=False)


def icd_jump_correct(logm: Series, jump_from_year: int) -> Series:
    """Smooth a coding-transition jump in a log-rate series.

    The log increment from ``jump_from_year`` to the next year is
    replaced by the mean of all the other increments; later levels are
    shifted so every other increment is preserved exactly.
    """
    n = len(logm)
    if n < 3:
        raise SeriesError("jump correction needs length >= 3")
    j = int(jump_from_year) - logm.start_year
    if not 0 <= j <= n - 2:
        raise SeriesError(
            f"jump year {jump_from_year} not an increment of a series starting "
            f"{logm.start_year} with length {n}"
        )
    increments = np.diff(logm.values)
    increments[j] = np.delete(increments, j).mean()
    corrected = np.concatenate([[logm.values[0]], logm.values[0] + np.cumsum(increments)])
    return Series(corrected, logm.start_year)


def detect_largest_jump(logm: Series) -> int:
    """Index t of the largest |logm_{t+1} - logm_t|, earliest tie wins."""
    if len(logm) < 2:
        raise SeriesError("jump detection needs length >= 2")
    return int(np.argmax(np.abs(np.diff(logm.values))))


@lru_cache(maxsize=1)
def state_centroids() -> dict[str, tuple[float, float]]:
    """The shipped 50-state table of geographic centers, code -> (lat, lon)."""
    ref = importlib.resources.files("panelmort.data").joinpath("centroids.csv")
    with ref.open("r", encoding="utf-8") as handle:
        frame = pd.read_csv(handle)
    return {row["state"]: (float(row["lat"]), float(row["lon"])) for _, row in frame.iterrows()}
