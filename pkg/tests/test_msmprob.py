import numpy as np
import pytest

from msmkit.dataio import idm_transition_system, to_long_format
from msmkit.errors import EmptyLandmarkSet, ValidationError
from msmkit.msmprob import (
    aalen_johansen,
    breslow_conditional,
    check_s_grid,
    cif,
    default_grid,
    ipcw_conditional,
    landmark_aalen_johansen,
    landmark_idm,
    occupied_at,
    per_transition_cox,
    presmoothed_landmark_idm,
)
from msmkit.survcore import kaplan_meier, km_step_function, evaluate_step

from conftest import make_idm

IDM_SYS = idm_transition_system()


def curve_for(curves, h, j):
    for c in curves:
        if c.from_state == h and c.to_state == j:
            return c
    raise AssertionError(f"no curve for {h}->{j}")


@pytest.fixture(scope="module")
def colon_long(colon):
    return to_long_format(colon)


class TestAalenJohansen:
    def test_reduces_to_km_without_illness(self):
        # nobody enters state 2: p11(0, t) is the KM survival of death
        t = [3, 5, 5, 8, 11, 13, 13, 20]
        ev = [1, 1, 0, 1, 0, 1, 1, 0]
        data = make_idm(t, [0] * 8, t, ev)
        long = to_long_format(data)
        grid = default_grid(long, 0.0)
        curves = aalen_johansen(long, IDM_SYS, 0.0, grid)
        ets, vals = km_step_function(np.array(t, dtype=float), np.array(ev))
        km = evaluate_step(ets, vals, grid)
        p11 = curve_for(curves, 1, 1)
        p13 = curve_for(curves, 1, 3)
        assert np.abs(p11.estimates - km).max() < 1e-12
        assert np.abs(p13.estimates - (1.0 - km)).max() < 1e-12
        # state 2 is never visited
        assert curve_for(curves, 1, 2).estimates.max() == 0.0

    def test_row_sums_one(self, colon, colon_long):
        grid = np.array([365.0, 730.0, 1095.0, 1460.0, 1825.0])
        curves = aalen_johansen(colon_long, IDM_SYS, 0.0, grid)
        for h in (1, 2):
            total = sum(
                curve_for(curves, h, j).estimates
                for j in (1, 2, 3)
                if h <= j
            )
            assert np.abs(total - 1.0).max() < 1e-10

    def test_monotone_absorbing_probability(self, colon, colon_long):
        grid = default_grid(colon_long, 0.0)
        curves = aalen_johansen(colon_long, IDM_SYS, 0.0, grid)
        p13 = curve_for(curves, 1, 3).estimates
        assert np.all(np.diff(p13) >= -1e-12)

    def test_identity_at_s(self, colon, colon_long):
        curves = aalen_johansen(colon_long, IDM_SYS, 0.0, np.array([0.0]))
        assert curve_for(curves, 1, 1).estimates[0] == 1.0
        assert curve_for(curves, 1, 2).estimates[0] == 0.0
        assert curve_for(curves, 2, 2).estimates[0] == 1.0

    def test_grid_validation(self):
        with pytest.raises(ValidationError):
            check_s_grid(-1.0, [1.0])
        with pytest.raises(ValidationError):
            check_s_grid(5.0, [1.0, 6.0])
        with pytest.raises(ValidationError):
            check_s_grid(0.0, [])
        s, g = check_s_grid(0, [3.0, 1.0])
        assert g.tolist() == [1.0, 3.0]


class TestOccupiedAt:
    def test_states_and_absences(self):
        # subject 0 ill at 2 dies at 7; subject 1 dies directly at 5;
        # subject 2 censored at 4; subject 3 still healthy at 6
        data = make_idm([2, 5, 4, 6], [1, 0, 0, 0], [7, 5, 4, 6], [1, 1, 0, 0])
        long = to_long_format(data)
        occ = occupied_at(long, 3.0)
        assert occ[0] == 2
        assert occ[1] == 1
        assert occ[2] == 1
        assert occ[3] == 1
        occ6 = occupied_at(long, 6.0)
        assert occ6[0] == 2
        assert occ6[1] == 3      # absorbed stays counted
        assert 2 not in occ6     # censored before s drops out
        assert 3 not in occ6     # censored exactly at s (occupancy is [start, stop))

    def test_entry_boundary_left_closed(self):
        data = make_idm([4], [1], [9], [1])
        long = to_long_format(data)
        assert occupied_at(long, 4.0)[0] == 2


class TestLandmark:
    S = 4.0

    def empirical(self, data, s, t):
        t1 = data.time1
        st = data.stime
        e1 = data.event1
        healthy = t1 > s
        ill = (e1 == 1) & (t1 <= s) & (st > s)
        out = {}
        n_h = healthy.sum()
        n_i = ill.sum()
        still_h = healthy & (t1 > t)
        ill_by_t = healthy & (e1 == 1) & (t1 <= t) & (st > t)
        dead_by_t = healthy & ~(t1 > t) & ~((e1 == 1) & (t1 <= t) & (st > t))
        out[(1, 1)] = still_h.sum() / n_h
        out[(1, 2)] = ill_by_t.sum() / n_h
        out[(1, 3)] = dead_by_t.sum() / n_h
        out[(2, 2)] = (ill & (st > t)).sum() / n_i
        out[(2, 3)] = (ill & (st <= t)).sum() / n_i
        return out

    @pytest.mark.parametrize("fn", [landmark_idm, presmoothed_landmark_idm])
    def test_exact_on_uncensored(self, uncensored_idm, fn):
        grid = np.array([5.125, 6.375, 9.0, 13.0])
        curves = fn(uncensored_idm, self.S, grid)
        assert {(c.from_state, c.to_state) for c in curves} == {
            (1, 1), (1, 2), (1, 3), (2, 2), (2, 3),
        }
        for k, t in enumerate(grid):
            ref = self.empirical(uncensored_idm, self.S, t)
            for (h, j), v in ref.items():
                got = curve_for(curves, h, j).estimates[k]
                assert got == pytest.approx(v, abs=1e-12), (h, j, t)

    def test_lmaj_exact_on_uncensored(self, uncensored_idm):
        grid = np.array([5.125, 6.375, 9.0, 13.0])
        long = to_long_format(uncensored_idm)
        ref_t = self.empirical(uncensored_idm, self.S, grid[-1])
        c1 = landmark_aalen_johansen(long, IDM_SYS, self.S, 1, grid)
        c2 = landmark_aalen_johansen(long, IDM_SYS, self.S, 2, grid)
        for (h, j), v in ref_t.items():
            cs = c1 if h == 1 else c2
            assert curve_for(cs, h, j).estimates[-1] == pytest.approx(v, abs=1e-12)

    def test_probabilities_in_unit_interval(self, colon):
        grid = np.array([730.0, 1095.0, 1825.0])
        for fn in (landmark_idm, presmoothed_landmark_idm):
            for c in fn(colon, 365.0, grid):
                assert np.all(c.estimates >= -1e-12)
                assert np.all(c.estimates <= 1 + 1e-12)

    def test_empty_landmark_raises(self):
        data = make_idm([2, 3], [0, 0], [2, 3], [1, 1])
        long = to_long_format(data)
        with pytest.raises(EmptyLandmarkSet):
            landmark_aalen_johansen(long, IDM_SYS, 5.0, 2, np.array([6.0]))


class TestConditional:
    def test_breslow_empty_profile_equals_aj(self, colon, colon_long):
        grid = np.array([500.0, 1000.0, 1500.0, 2000.0])
        aj = aalen_johansen(colon_long, IDM_SYS, 365.0, grid)
        br, reports = breslow_conditional(colon_long, IDM_SYS, 365.0, grid)
        assert len(reports) == 3
        for c in br:
            ref = curve_for(aj, c.from_state, c.to_state)
            assert np.array_equal(c.estimates, ref.estimates), (
                c.from_state, c.to_state,
            )

    def test_breslow_profile_shifts_curves(self, colon, colon_long):
        grid = np.array([1000.0, 2000.0])
        lo, _ = breslow_conditional(colon_long, IDM_SYS, 0.0, grid,
                                    profile={"nodes": 1})
        hi, _ = breslow_conditional(colon_long, IDM_SYS, 0.0, grid,
                                    profile={"nodes": 9})
        # more nodes, worse prognosis
        assert curve_for(hi, 1, 3).estimates[-1] > curve_for(lo, 1, 3).estimates[-1]
        for curves in (lo, hi):
            total = sum(curve_for(curves, 1, j).estimates for j in (1, 2, 3))
            assert np.abs(total - 1.0).max() < 1e-10

    def test_ipcw_row_sums_and_conditioning(self, colon):
        grid = np.array([730.0, 1095.0, 1460.0, 1825.0])
        curves = ipcw_conditional(colon, 365.0, grid, "age", 48.0)
        total1 = sum(curve_for(curves, 1, j).estimates for j in (1, 2, 3))
        total2 = sum(curve_for(curves, 2, j).estimates for j in (2, 3))
        assert np.abs(total1 - 1.0).max() < 1e-10
        assert np.abs(total2 - 1.0).max() < 1e-10
        c = curves[0]
        assert c.conditioning["covariate"] == "age"
        assert c.conditioning["x0"] == 48.0
        assert c.conditioning["bandwidth"] > 0

    def test_ipcw_categorical_covariate_rejected(self, colon):
        with pytest.raises(ValidationError):
            ipcw_conditional(colon, 365.0, np.array([730.0]), "rx", 1.0)

    def test_per_transition_cox_counts(self, colon_long):
        fits = per_transition_cox(colon_long, ("rx", "age"), clock="markov")
        assert [f.transition for f in fits] == [1, 2, 3]
        assert fits[0].fit.n_events == 468
        assert fits[1].fit.n_events == 38
        assert fits[2].fit.n_events == 414
        js = fits[0].to_json()
        assert js["clock"] == "markov"
        assert js["fit"]["terms"]

    def test_per_transition_clock_semantics(self, colon_long):
        m = per_transition_cox(colon_long, ("age",), clock="markov")
        s = per_transition_cox(colon_long, ("age",), clock="semi_markov")
        # transitions out of state 1 start at 0 either way: identical fits
        assert s[0].fit.coef[0] == pytest.approx(m[0].fit.coef[0], rel=1e-12)
        # the 2->3 transition differs between clocks
        assert s[2].fit.coef[0] != pytest.approx(m[2].fit.coef[0], rel=1e-6)

    def test_unknown_clock(self, colon_long):
        with pytest.raises(ValidationError):
            per_transition_cox(colon_long, (), clock="calendar")


class TestCif:
    def test_exact_on_uncensored(self, uncensored_idm):
        grid = np.array([6.0, 9.0, 12.0, 30.0])
        c = cif(uncensored_idm, grid)
        t1 = uncensored_idm.time1
        e1 = uncensored_idm.event1
        for k, t in enumerate(grid):
            emp = ((e1 == 1) & (t1 <= t)).sum() / uncensored_idm.n
            assert c.estimates[k] == pytest.approx(emp, abs=1e-12)

    def test_monotone_and_bounded(self, colon):
        grid = np.unique(colon.time1[colon.event1 == 1])
        c = cif(colon, grid)
        assert np.all(np.diff(c.estimates) >= -1e-12)
        assert c.estimates[-1] <= 1.0

    def test_categorical_conditioning_matches_subset(self, colon):
        grid = np.array([365.0, 1095.0])
        c = cif(colon, grid, covariate="rx", level="Obs")
        vals = colon.covariates.values("rx")
        idx = [i for i, v in enumerate(vals) if v == "Obs"]
        sub = colon.subset(idx)
        ref = cif(sub, grid)
        assert c.estimates == pytest.approx(ref.estimates, abs=1e-15)
        assert c.conditioning == {"covariate": "rx", "level": "Obs"}

    def test_unknown_level_lists_choices(self, colon):
        with pytest.raises(ValidationError) as err:
            cif(colon, np.array([365.0]), covariate="rx", level="Placebo")
        assert "Obs" in err.value.detail["levels"]

    def test_continuous_without_x0(self, colon):
        with pytest.raises(ValidationError):
            cif(colon, np.array([365.0]), covariate="age")

    def test_continuous_conditioning(self, colon):
        c = cif(colon, np.array([365.0, 1095.0]), covariate="age", x0=55.0)
        assert c.conditioning["x0"] == 55.0
        assert np.all((c.estimates >= 0) & (c.estimates <= 1))
