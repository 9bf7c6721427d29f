import numpy as np
import pytest

from panelmort.dataset import PanelDataset
from panelmort.design import ModelSpec, build_design, transform_series_for_type
from panelmort.errors import SpecError
from panelmort.estim import wls_fit
from panelmort.series import Series, linear_detrend

from conftest import make_dataset


class TestModelSpec:
    def test_validation(self):
        with pytest.raises(SpecError):
            ModelSpec("Q", 1)
        with pytest.raises(SpecError):
            ModelSpec("B", 5)
        with pytest.raises(SpecError):
            ModelSpec("B", 1, series="nope")
        with pytest.raises(SpecError):
            ModelSpec("HP", 1, hp_lambda=-1.0)

    def test_label_and_flags(self):
        spec = ModelSpec("HP", 1)
        assert spec.label == "HP1"
        assert spec.has_year_effects and not spec.has_national_unemployment
        assert not spec.has_state_effects
        assert ModelSpec("D", 4).has_state_effects
        assert ModelSpec("L", 2).has_state_trends

    def test_json_round_trip(self):
        spec = ModelSpec("D", 3, series="cancer", hp_lambda=50.0, apply_icd_correction=False)
        assert ModelSpec.from_json_dict(spec.to_json_dict()) == spec
        with pytest.raises(SpecError):
            ModelSpec.from_json_dict({"model_type": "B", "subtype": 1, "bogus": 1})


class TestTransformSeriesForType:
    def test_identity_for_levels(self):
        x = Series([1, 3, 2, 5], 1990)
        for mt in ("B", "L"):
            assert transform_series_for_type(x, mt) is x

    def test_difference(self):
        out = transform_series_for_type(Series([1, 3, 6], 1990), "D")
        assert list(out.values) == [2, 3]

    def test_hp_on_ramp(self):
        out = transform_series_for_type(Series(np.arange(10.0)), "HP", 100.0)
        np.testing.assert_array_equal(out.values, np.zeros(10))


class TestBuildDesignShapes:
    def test_b1_columns(self):
        data = make_dataset(n_states=4, n_years=6)
        d = build_design(data, ModelSpec("B", 1))
        assert d.n_rows == 24
        # intercept + U + 2 age + 5 year dummies + 3 state dummies
        assert d.n_cols == 1 + 1 + 2 + 5 + 3
        assert "year:1990" not in d.labels and "year:1991" in d.labels
        assert "state:S00" not in d.labels and "state:S01" in d.labels

    def test_d1_drops_a_year(self):
        data = make_dataset(n_states=4, n_years=6)
        d = build_design(data, ModelSpec("D", 1))
        assert d.n_rows == 4 * 5
        assert set(d.row_years.tolist()) == set(range(1991, 1996))

    def test_hp_has_no_state_terms(self):
        data = make_dataset(n_states=3, n_years=8)
        d = build_design(data, ModelSpec("HP", 1))
        assert not any(lbl.startswith(("state:", "trend:")) for lbl in d.labels)

    def test_hp2_age_specific_is_minimal(self):
        data = make_dataset(n_states=2, n_years=5, series=("age65plus",))
        d = build_design(data, ModelSpec("HP", 2, series="age65plus"))
        assert d.labels == ("intercept", "state_unemployment")

    def test_subtype_covariates(self):
        data = make_dataset(n_states=3, n_years=6)
        d2 = build_design(data, ModelSpec("B", 2))
        d3 = build_design(data, ModelSpec("B", 3))
        d4 = build_design(data, ModelSpec("B", 4))
        assert "state_unemployment" in d2.labels and "national_unemployment" not in d2.labels
        assert "state_unemployment" not in d3.labels and "national_unemployment" in d3.labels
        assert {"state_unemployment", "national_unemployment"} <= set(d4.labels)
        # subtype 1 never includes national unemployment
        d1 = build_design(data, ModelSpec("B", 1))
        assert "national_unemployment" not in d1.labels

    def test_weights_are_population(self):
        data = make_dataset(n_states=3, n_years=6)
        d = build_design(data, ModelSpec("B", 1))
        np.testing.assert_array_equal(d.weights, data.population.ravel())
        d_sqrt = build_design(data, ModelSpec("B", 1, weight_scheme="sqrt-pop"))
        np.testing.assert_allclose(d_sqrt.weights, np.sqrt(data.population.ravel()))

    def test_deterministic(self):
        data = make_dataset(n_states=3, n_years=6)
        a = build_design(data, ModelSpec("L", 1))
        b = build_design(data, ModelSpec("L", 1))
        assert a.labels == b.labels
        np.testing.assert_array_equal(a.columns, b.columns)


class TestIcdCorrectionWiring:
    def _panel_with_jump(self):
        data = make_dataset(n_states=2, n_years=6, start_year=1996, series=("ischemic",), noise=0.0)
        grid = data.mortality["ischemic"].copy()
        grid[:, 3:] *= 1.5  # jump between 1998 and 1999
        return PanelDataset(
            states=data.states,
            years=data.years,
            mortality={"ischemic": grid},
            state_unemployment=data.state_unemployment,
            national_unemployment=data.national_unemployment,
            population=data.population,
            age_structure=data.age_structure,
        )

    def test_correction_changes_response(self):
        data = self._panel_with_jump()
        on = build_design(data, ModelSpec("B", 2, series="ischemic"))
        off = build_design(data, ModelSpec("B", 2, series="ischemic", apply_icd_correction=False))
        assert not np.allclose(on.response, off.response)
        # the 1998->1999 increment is no longer the outlier
        y_on = on.response.reshape(2, 6)
        assert abs(np.diff(y_on[0])[3]) < abs(np.log(1.5))

    def test_total_series_untouched(self):
        data = make_dataset(n_states=2, n_years=6, start_year=1996)
        on = build_design(data, ModelSpec("B", 2))
        off = build_design(data, ModelSpec("B", 2, apply_icd_correction=False))
        np.testing.assert_array_equal(on.response, off.response)


class TestDesignEquivalences:
    def test_frisch_waugh_trends(self):
        """L-type trend columns match per-state linear detrending of every
        variable (equal weights within state keep the partialling exact)."""
        data = make_dataset(n_states=4, n_years=10, seed=8, beta_u=-0.004, noise=0.02)
        spec = ModelSpec("L", 2)
        beta_l = wls_fit(build_design(data, spec)).coef("state_unemployment")

        # oracle: detrend response and U per state, regress without trends
        d = build_design(data, ModelSpec("B", 2))
        y = d.response.reshape(4, 10)
        u = d.column("state_unemployment").reshape(4, 10)
        a0 = d.column("age_under5").reshape(4, 10)
        a1 = d.column("age_over65").reshape(4, 10)
        det = lambda g: np.vstack([linear_detrend(Series(row)).values for row in g])
        yd, ud, a0d, a1d = det(y), det(u), det(a0), det(a1)
        w = d.weights
        X = np.column_stack([np.ones(40), ud.ravel(), a0d.ravel(), a1d.ravel()])
        sw = np.sqrt(w)
        beta_fw = np.linalg.lstsq(X * sw[:, None], yd.ravel() * sw, rcond=None)[0][1]
        assert beta_l == pytest.approx(beta_fw, abs=1e-8)

    def test_within_transformation_b(self):
        """B-type state dummies match state demeaning (weights constant
        within state, as in make_dataset)."""
        data = make_dataset(n_states=5, n_years=8, seed=9, beta_u=-0.004, noise=0.02)
        beta_b = wls_fit(build_design(data, ModelSpec("B", 2))).coef("state_unemployment")

        d = build_design(data, ModelSpec("B", 2))
        y = d.response.reshape(5, 8)
        cols = {lbl: d.column(lbl).reshape(5, 8) for lbl in ("state_unemployment", "age_under5", "age_over65")}
        demean = lambda g: g - g.mean(axis=1, keepdims=True)
        X = np.column_stack([demean(cols[lbl]).ravel() for lbl in cols])
        sw = np.sqrt(d.weights)
        beta_within = np.linalg.lstsq(X * sw[:, None], demean(y).ravel() * sw, rcond=None)[0][0]
        assert beta_b == pytest.approx(beta_within, abs=1e-8)

    def test_reference_category_invariance(self):
        """beta_u unchanged when a different state is the dummy reference,
        emulated by reordering state codes."""
        data = make_dataset(n_states=4, n_years=8, seed=10, beta_u=-0.004, noise=0.02)
        beta_a = wls_fit(build_design(data, ModelSpec("B", 1))).coef("state_unemployment")
        # rename the first state so it sorts last, making a different
        # state (and hence dummy reference) come first
        new_codes = ["Z99"] + list(data.state_codes[1:])
        order = np.argsort(new_codes)
        relabeled = PanelDataset(
            states=tuple(
                type(data.states[0])(code=new_codes[i], lat=data.states[i].lat, lon=data.states[i].lon)
                for i in order
            ),
            years=data.years,
            mortality={k: v[order] for k, v in data.mortality.items()},
            state_unemployment=data.state_unemployment[order],
            national_unemployment=data.national_unemployment,
            population=data.population[order],
            age_structure=data.age_structure[order],
        )
        beta_b = wls_fit(build_design(relabeled, ModelSpec("B", 1))).coef("state_unemployment")
        assert beta_a == pytest.approx(beta_b, abs=1e-8)
