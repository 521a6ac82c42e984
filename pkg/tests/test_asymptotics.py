import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degwave import asymptotics as A
from degwave import solver as S
from degwave.errors import LevelNotPresent, NotStabilized, RegionOutsideGrid, WindowTooShort


class TestFrontFit:
    @settings(max_examples=30, deadline=None)
    @given(c=st.floats(-2.0, 2.0), x0=st.floats(-5.0, 5.0))
    def test_recovers_a_line(self, c, x0):
        t = np.linspace(0.0, 10.0, 101)
        fit = A.fit_front({"t": t, "r": x0 + c * t, "l": -(x0 + c * t)})
        assert fit.c_hat == pytest.approx(c, abs=1e-9)
        assert fit.drift_against(c) < 1e-9

    def test_left_side_is_mirrored(self):
        t = np.linspace(0.0, 10.0, 101)
        fit = A.fit_front({"t": t, "r": 1 + 0.5 * t, "l": -2 - 0.25 * t}, side="left")
        assert fit.c_hat == pytest.approx(0.25)

    def test_short_window(self):
        t = np.linspace(0.0, 1.0, 11)
        with pytest.raises(WindowTooShort):
            A.fit_front({"t": t, "r": t, "l": -t}, window=(0.95, 1.0))


class TestSmallSpreading:
    def test_front_speed(self, small_run, summary):
        fit = A.fit_front(small_run, window=(20.0, 40.0))
        assert abs(fit.c_hat - summary.c_s) / summary.c_s < 0.02
        assert fit.drift_against(summary.c_s) < 0.1

    def test_profile_matches_small_wave(self, small_run, summary):
        _, r = small_run.fronts()
        assert A.profile_error(small_run, summary.small, region=(-0.5 * r, None)) < 0.05
        assert A.profile_error(small_run, summary.small, "left_front", (-0.5 * r, None)) < 0.05

    def test_region_outside_grid(self, small_run, summary):
        with pytest.raises(RegionOutsideGrid):
            A.profile_error(small_run, summary.small, region=(-500.0, None))

    def test_middle_stays_near_s1(self, small_run, quartic):
        x, u = small_run.full()
        assert np.max(np.abs(u[np.abs(x) < 10.0] - quartic.s1)) < 1e-3

    def test_envelopes(self, small_run, summary):
        chk = A.verify_envelopes(small_run, summary.small)
        assert chk.feasible
        assert chk.n_violations == 0 and chk.n_samples > 10**5
        assert chk.decay["rate"] > 0


class TestClassify:
    @pytest.mark.parametrize("sigma,verdict", [(0.5, "SmallSpreading"), (1000.0, "BigSpreading")])
    def test_verdicts(self, quad2, quartic, ground, sigma, verdict):
        r = A.classify(quad2, quartic, S.InitialDataSpec("cos2", b=1.0, sigma=sigma), ground=ground)
        assert r.verdict == verdict

    def test_monotone_verdicts(self):
        mk = lambda s, v: A.ClassificationResult(v, s, "")
        ok = [mk(1, "SmallSpreading"), mk(2, "Transition"), mk(3, "BigSpreading")]
        assert A.verdicts_monotone(ok)
        assert not A.verdicts_monotone(ok + [mk(4, "SmallSpreading")])

    def test_short_band_is_not_stabilized(self, quartic):
        x = np.linspace(-5, 5, 11)
        with pytest.raises(NotStabilized):
            A.detect_omega_limit([(0.0, x, x * 0)] * 3, 5.0, s1=quartic.s1)

    @pytest.mark.parametrize("level,tag", [(0.3, "s1"), (1.0, "one"), (0.7, "undecided")])
    def test_constant_bands(self, quartic, level, tag):
        x = np.linspace(-5, 5, 11)
        frames = [(float(k), x, np.full_like(x, level)) for k in range(A.N_BAND)]
        assert A.detect_omega_limit(frames, 5.0, s1=quartic.s1)[0] == tag

    def test_ground_state_band(self, quartic, ground):
        x = np.linspace(-10, 10, 201)
        frames = [(float(k), x, ground.q_at(x)) for k in range(A.N_BAND)]
        tag, ev = A.detect_omega_limit(frames, 10.0, s1=quartic.s1, ground=ground)
        assert tag == "ground_state" and ev["dist_ground_state"] < 1e-12


class TestLevelSets:
    def test_rightmost_crossing(self):
        x = np.linspace(0.0, 10.0, 101)
        u = np.clip(1.0 - 0.1 * x, 0.0, None)
        assert A.rightmost_crossing(x, u, 0.5) == pytest.approx(5.0)
        assert np.isnan(A.rightmost_crossing(x, u, 2.0))

    def test_track_of_moving_steps(self):
        x = np.linspace(0.0, 50.0, 5001)
        frames = [(t, x, np.where(x < 0.2 * t + 5, 1.0, np.where(x < 0.5 * t + 5, 0.3, 0.0)))
                  for t in np.linspace(1.0, 40.0, 40)]
        tr = A.track_levels(frames, 0.15, 0.8)
        fits = tr.fits()
        assert fits["chi_star"].c_hat == pytest.approx(0.5, abs=1e-3)
        assert fits["chi_upper"].c_hat == pytest.approx(0.2, abs=1e-3)
        assert fits["d"].c_hat == pytest.approx(0.3, abs=1e-3)

    def test_missing_level(self):
        x = np.linspace(0.0, 1.0, 11)
        with pytest.raises(LevelNotPresent):
            A.track_levels([(1.0, x, 0.1 * np.ones_like(x))], 0.15, 0.8)

    @pytest.mark.parametrize("c_s,c_z,expected", [
        (0.5, 0.6, "cs_lt_cz"), (0.6, 0.3, "cs_gt_cz"), (0.5, 0.50005, "critical"),
    ])
    def test_regime(self, c_s, c_z, expected):
        assert A.regime(c_s, c_z) == expected


class TestEnvelopeConstants:
    def test_preliminary_constants(self, maps, summary):
        k = A.step_one_constants(maps, summary.small, 1.0, 0.5)
        assert k["phi1"] == pytest.approx(0.6)
        assert k["B1"] >= k["B2"] > 0 and k["B3"] >= k["B4"] > 0
        assert k["eps0"] > 0 and k["H_delta"] > 0
        assert 0 < k["delta_hat"] <= 0.25

    def test_middle_decay(self):
        t = np.linspace(0.0, 10.0, 51)
        d = A.middle_decay(t, 0.3 + 0.2 * np.exp(-0.7 * t), 0.3)
        assert d["rate"] == pytest.approx(0.7, rel=1e-6)
        assert d["M"] == pytest.approx(0.2, rel=1e-5)
