import numpy as np
import pytest

from msmkit.errors import (
    BadCovariate,
    TooFewDistinctValues,
    TooFewEvents,
    ValidationError,
)
from msmkit.regression import (
    anova_sequential,
    fit_cox,
    fit_cox_survival,
    nonlinearity_test,
    ph_test,
    rcs_basis,
)

from conftest import make_survival


@pytest.fixture(scope="module")
def vet_fit(veteran):
    return fit_cox_survival(veteran, ("celltype", "karno", "age"))


class TestPhTest:
    def test_veteran_km_reference(self, vet_fit):
        r = ph_test(vet_fit, transform="km")
        assert r.transform == "km"
        assert r.global_df == 5
        assert r.global_chisq == pytest.approx(30.184891579052533, rel=1e-10)
        assert r.global_p == pytest.approx(1.356274426128595e-05, rel=1e-8)
        by_term = dict(zip(r.terms, r.p_values))
        assert by_term["karno"] == pytest.approx(0.0001214299918778221, rel=1e-8)

    def test_transforms_change_statistics(self, vet_fit):
        km = ph_test(vet_fit, "km")
        ident = ph_test(vet_fit, "identity")
        logt = ph_test(vet_fit, "log")
        stats = {km.global_chisq, ident.global_chisq, logt.global_chisq}
        assert len(stats) == 3
        for r in (km, ident, logt):
            assert all(d == 1 for d in r.df)
            assert all(0.0 <= p <= 1.0 for p in r.p_values)

    def test_unknown_transform(self, vet_fit):
        with pytest.raises(ValidationError):
            ph_test(vet_fit, "rank")

    def test_to_json_global_row_last(self, vet_fit):
        js = ph_test(vet_fit).to_json()
        assert js["rows"][-1]["term"] == "GLOBAL"
        assert len(js["rows"]) == 6

    def test_too_few_events(self):
        data = make_survival([1, 2, 3, 4], [1, 0, 0, 1],
                             z=[0.1, 0.9, 0.4, 0.6])
        fit = fit_cox_survival(data, ("z",))
        with pytest.raises(TooFewEvents):
            ph_test(fit)


class TestAnova:
    def test_veteran_sequence(self, veteran):
        t = anova_sequential(
            np.zeros(veteran.n), veteran.time, veteran.status,
            veteran.covariates, ("celltype", "karno", "age"),
        )
        rows = {r["term"]: r for r in t.rows}
        assert t.rows[0]["term"] == "NULL"
        assert rows["NULL"]["loglik"] == pytest.approx(-505.44905491805787, rel=1e-12)
        assert rows["NULL"]["chisq"] is None
        assert rows["celltype"]["chisq"] == pytest.approx(24.84864535377119, rel=1e-9)
        assert rows["celltype"]["df"] == 3
        assert rows["karno"]["chisq"] == pytest.approx(34.52302898699247, rel=1e-9)
        assert rows["karno"]["df"] == 1
        assert rows["age"]["chisq"] == pytest.approx(0.4381944385108909, rel=1e-8)
        assert rows["age"]["p"] == pytest.approx(0.5079952128149133, rel=1e-8)

    def test_chisq_recomputable_from_logliks(self, veteran):
        t = anova_sequential(
            np.zeros(veteran.n), veteran.time, veteran.status,
            veteran.covariates, ("karno", "age"),
        )
        for prev, cur in zip(t.rows, t.rows[1:]):
            assert cur["chisq"] == pytest.approx(
                2 * (cur["loglik"] - prev["loglik"])
            )

    def test_order_matters_for_chisq_not_final_loglik(self, veteran):
        a = anova_sequential(np.zeros(veteran.n), veteran.time, veteran.status,
                             veteran.covariates, ("karno", "celltype"))
        b = anova_sequential(np.zeros(veteran.n), veteran.time, veteran.status,
                             veteran.covariates, ("celltype", "karno"))
        assert a.rows[-1]["loglik"] == pytest.approx(b.rows[-1]["loglik"], rel=1e-9)
        assert a.rows[1]["chisq"] != pytest.approx(b.rows[2]["chisq"], rel=1e-3)


class TestRcsBasis:
    def test_shape_and_tail_linearity(self):
        knots = np.array([1.0, 2.0, 4.0, 8.0])
        x = np.linspace(-2, 12, 400)
        B = rcs_basis(x, knots)
        assert B.shape == (400, 2)
        # below the first knot every column is exactly zero
        assert np.all(B[x <= 1.0] == 0.0)
        # beyond the last knot each column is affine in x: second differences vanish
        right = B[x >= 9.0]
        for j in range(2):
            d2 = np.diff(right[:, j], 2)
            assert np.abs(d2).max() < 1e-9

    def test_continuity_at_knots(self):
        knots = np.array([0.0, 1.0, 2.0, 3.0])
        for t in knots:
            lo = rcs_basis(np.array([t - 1e-9]), knots)
            hi = rcs_basis(np.array([t + 1e-9]), knots)
            assert lo == pytest.approx(hi, abs=1e-6)

    def test_empty_when_two_knots(self):
        B = rcs_basis(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
        assert B.shape == (2, 0)


class TestNonlinearity:
    def test_veteran_karno_reference(self, veteran):
        r = nonlinearity_test(
            np.zeros(veteran.n), veteran.time, veteran.status,
            veteran.covariates, "karno",
        )
        assert r.knots == (20.0, 50.0, 70.0, 90.0)
        assert r.df == 2
        assert r.chisq == pytest.approx(2.1609263425904146, rel=1e-9)
        assert r.p_value == pytest.approx(0.33943827116617115, rel=1e-9)
        assert r.chisq == pytest.approx(
            2 * (r.loglik_spline - r.loglik_linear), rel=1e-12
        )

    def test_categorical_covariate_rejected(self, veteran):
        with pytest.raises(BadCovariate):
            nonlinearity_test(np.zeros(veteran.n), veteran.time, veteran.status,
                              veteran.covariates, "celltype")

    def test_two_distinct_values_rejected(self):
        data = make_survival(list(range(1, 13)), [1] * 12,
                             z=[0.0, 1.0] * 6)
        with pytest.raises(TooFewDistinctValues):
            nonlinearity_test(np.zeros(12), data.time, data.status,
                              data.covariates, "z")


class TestScalingInvariance:
    def test_covariate_scaling(self, veteran):
        # karno / 10 must scale beta by 10 and leave the fit otherwise alone
        karno = np.array([float(v) for v in veteran.covariates.values("karno")])
        base = fit_cox(np.zeros(veteran.n), veteran.time, veteran.status,
                       karno[:, None], names=("karno",))
        scaled = fit_cox(np.zeros(veteran.n), veteran.time, veteran.status,
                         (karno / 10.0)[:, None], names=("karno10",))
        assert scaled.coef[0] == pytest.approx(10 * base.coef[0], rel=1e-8)
        assert scaled.loglik_final == pytest.approx(base.loglik_final, rel=1e-10)
        assert scaled.lr_test["statistic"] == pytest.approx(
            base.lr_test["statistic"], rel=1e-8
        )
        pb = ph_test(base)
        ps = ph_test(scaled)
        assert ps.global_p == pytest.approx(pb.global_p, rel=1e-8)
        assert ps.p_values[0] == pytest.approx(pb.p_values[0], rel=1e-8)

    def test_aic_decrease_iff_lr_above_two(self, veteran):
        from msmkit.regression import fit_aft_survival

        small = fit_aft_survival(veteran, ("karno",), distribution="weibull")
        big = fit_aft_survival(veteran, ("karno", "age"), distribution="weibull")
        lr = 2 * (big.loglik - small.loglik)
        assert (big.aic < small.aic) == (lr > 2.0)
