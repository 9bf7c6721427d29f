import numpy as np
import pytest

from panelmort.dataset import PanelDataset, StateInfo
from panelmort.design import DesignMatrix


def make_design(y, X, labels=None, w=None, clusters=None, years=None):
    """Small-design helper for estimator tests."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    labels = tuple(labels) if labels else tuple(f"x{j}" for j in range(k))
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    clusters = np.array(["c0"] * n) if clusters is None else np.asarray(clusters)
    years = np.arange(n) if years is None else np.asarray(years)
    return DesignMatrix(
        response=y,
        columns=X,
        labels=labels,
        weights=w,
        clusters=clusters,
        row_states=clusters,
        row_years=years,
    )


def make_dataset(
    n_states=3,
    n_years=6,
    start_year=1990,
    seed=0,
    series=("total",),
    beta_u=0.0,
    noise=0.05,
):
    """Small hand-rolled panel with known structure (distinct from the
    mc module's generator, so design/estimator tests do not depend on it)."""
    rng = np.random.default_rng(seed)
    s, t = n_states, n_years
    u = rng.uniform(3.0, 9.0, (s, t))
    pop = np.tile(np.linspace(1e6, 5e6, s)[:, None], (1, t))
    age = np.stack(
        [
            0.06 + 0.01 * rng.random((s, t)),
            0.12 + 0.02 * rng.random((s, t)),
        ],
        axis=2,
    )
    mortality = {}
    for key in series:
        logm = (
            beta_u * u
            + rng.normal(2.1, 0.05, (s, 1))
            + noise * rng.standard_normal((s, t))
        )
        mortality[key] = np.exp(logm)
    codes = [f"S{i:02d}" for i in range(s)]
    return PanelDataset(
        states=tuple(StateInfo(c, 30.0 + i, -100.0 + i) for i, c in enumerate(codes)),
        years=np.arange(start_year, start_year + t),
        mortality=mortality,
        state_unemployment=u,
        national_unemployment=np.average(u, axis=0, weights=pop[:, 0]),
        population=pop,
        age_structure=age,
    )


@pytest.fixture
def toy_csvs(tmp_path):
    """Three valid CSV files for a 2-state, 3-year panel."""
    (tmp_path / "mortality.csv").write_text(
        "state,year,category,rate\n"
        "AA,2000,total,8.5\nAA,2001,total,8.6\nAA,2002,total,8.4\n"
        "BB,2000,total,9.1\nBB,2001,total,9.0\nBB,2002,total,9.2\n"
    )
    (tmp_path / "unemployment.csv").write_text(
        "state,year,rate\n"
        "AA,2000,5.0\nAA,2001,5.5\nAA,2002,6.0\n"
        "BB,2000,4.0\nBB,2001,4.2\nBB,2002,4.1\n"
        "US,2000,4.5\nUS,2001,4.8\nUS,2002,5.0\n"
    )
    (tmp_path / "agestructure.csv").write_text(
        "state,year,prop_under5,prop_over65,population\n"
        "AA,2000,0.07,0.12,1000000\nAA,2001,0.07,0.13,1010000\nAA,2002,0.068,0.13,1020000\n"
        "BB,2000,0.08,0.11,2000000\nBB,2001,0.079,0.11,2010000\nBB,2002,0.078,0.12,2020000\n"
    )
    return {
        "mortality_csv": tmp_path / "mortality.csv",
        "unemployment_csv": tmp_path / "unemployment.csv",
        "agestructure_csv": tmp_path / "agestructure.csv",
    }
