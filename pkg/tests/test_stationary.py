import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degwave import stationary
from degwave.errors import InvalidTarget
from degwave.nonlinearity import theta

PROFILES = [
    ("Constant", 0.3),
    ("GroundState", None),
    ("CompactShort", 0.2),
    ("CompactHigh", 0.8),
    ("MonotoneHalf", 1),
    ("MonotoneHalf", -1),
    ("MonotoneHalf", 2),
    ("MonotoneHalf", -2),
    ("Periodic", 0.4),
]

# half-support lengths for peaks 0.2, 0.1, 0.05, 0.025 (default quartic, m = 2)
L1_FROZEN = [1.25957, 0.565636, 0.337307, 0.220914]


@pytest.fixture(scope="module")
def profiles(quad2, quartic):
    return {(c, t): stationary.build_profile(c, t, quad2, quartic) for c, t in PROFILES}


class TestFirstIntegral:
    @pytest.mark.parametrize("case,target", PROFILES)
    def test_conserved(self, profiles, quad2, quartic, case, target):
        prof = profiles[(case, target)]
        err = prof.first_integral_error(quad2, quartic)
        assert err <= 1e-6 * max(abs(prof.C), 1e-12)

    def test_primitive_matches_quadrature(self, quad2, quartic):
        q = np.array([0.0, 0.1, 0.3, 0.55, 0.9])
        ref = [stationary.first_integral_constant(s, quad2, quartic) / 2 for s in q]
        np.testing.assert_allclose(stationary.primitive_F(quad2, quartic, q), ref, atol=1e-14)


class TestGroundState:
    def test_peak_and_tails(self, profiles, quad2, quartic):
        g = profiles[("GroundState", None)]
        assert g.peak == pytest.approx(theta(quad2, quartic), abs=1e-12)
        assert g.q.max() == pytest.approx(g.peak, abs=1e-12)
        assert abs(g.q[0] - quartic.s1) < 1e-6 and abs(g.q[-1] - quartic.s1) < 1e-6

    def test_even(self, profiles):
        g = profiles[("GroundState", None)]
        x = np.linspace(-8.0, 8.0, 33)
        np.testing.assert_allclose(g.q_at(x), g.q_at(-x), atol=1e-10)

    def test_tail_rate(self, profiles, quad2, quartic):
        g = profiles[("GroundState", None)]
        s1 = quartic.s1
        mu = np.sqrt(-float(quartic.df(s1)) / float(quad2.dA(s1)))
        assert g.meta["mu"] == pytest.approx(mu, rel=1e-12)


class TestCompact:
    @pytest.mark.parametrize("case,target", [("CompactShort", 0.2), ("CompactHigh", 0.8)])
    def test_edge_slope(self, profiles, case, target):
        prof = profiles[(case, target)]
        assert prof.meta["edge_slope"] == pytest.approx(-np.sqrt(prof.C), rel=1e-12)
        assert prof.meta["edge_slope_integrated"] == pytest.approx(prof.meta["edge_slope"], abs=1e-8)

    def test_quadrature_length_matches_ode(self, profiles, quad2, quartic):
        prof = profiles[("CompactShort", 0.2)]
        assert stationary.half_support_length(0.2, quad2, quartic) == pytest.approx(prof.L, abs=1e-10)

    def test_lengths_decrease(self, quad2, quartic):
        L = [stationary.half_support_length(q, quad2, quartic) for q in (0.2, 0.1, 0.05, 0.025)]
        assert np.all(np.diff(L) < 0)
        np.testing.assert_allclose(L, L1_FROZEN, rtol=1e-5)

    @settings(max_examples=15, deadline=None)
    @given(q1=st.floats(0.02, 0.28))
    def test_length_monotone_in_peak(self, quad2, quartic, q1):
        a = stationary.half_support_length(q1, quad2, quartic)
        b = stationary.half_support_length(0.9 * q1, quad2, quartic)
        assert b < a


class TestOtherCases:
    @pytest.mark.parametrize("target,limit", [(1, 0.3), (-1, 0.3), (2, 1.0), (-2, 1.0)])
    def test_monotone_half(self, profiles, target, limit):
        prof = profiles[("MonotoneHalf", target)]
        q = prof.q if target > 0 else prof.q[::-1]
        assert np.all(np.diff(q) >= -1e-12)
        assert abs(q[-1] - limit) < 1e-6
        assert q[0] < 1e-10

    def test_periodic_closes(self, profiles, quartic):
        prof = profiles[("Periodic", 0.4)]
        assert quartic.s2 < prof.meta["max"] < 1.0
        assert prof.q[-1] == pytest.approx(0.4, abs=1e-6)

    @pytest.mark.parametrize("case,target", [
        ("Constant", 0.4), ("CompactShort", 0.35), ("CompactHigh", 0.6),
        ("Periodic", 0.2), ("MonotoneHalf", 3), ("Nope", 0.1),
    ])
    def test_invalid_targets(self, quad2, quartic, case, target):
        with pytest.raises(InvalidTarget):
            stationary.build_profile(case, target, quad2, quartic)
