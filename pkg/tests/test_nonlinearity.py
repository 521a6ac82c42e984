import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degwave.errors import IntegralConditionFailed, NonDegenerate, SignPatternViolation, ThetaNotFound
from degwave.nonlinearity import (
    CUSTOM_DIFFUSIONS,
    DiffusionSpec,
    PressureMaps,
    ReactionSpec,
    limiting_slope,
    theta,
    validate_diffusion,
    validate_reaction,
    weighted_integral,
)


class TestDiffusion:
    @pytest.mark.parametrize("m", [1.0, 0.5, -2.0])
    def test_non_degenerate_exponent_rejected(self, m):
        with pytest.raises(NonDegenerate):
            DiffusionSpec.power(m)

    @pytest.mark.parametrize("m", [1.5, 2.0, 3.0, 4.5])
    def test_power_law_passes_validation(self, m):
        rep = validate_diffusion(DiffusionSpec.power(m))
        assert rep.ok
        assert rep.values["a_star"] == pytest.approx(m - 1.0)

    @pytest.mark.parametrize("name,a_star", [("u32_plus_u2", 0.5), ("u2_log1p", 2.0)])
    def test_custom_a_star(self, name, a_star):
        spec = DiffusionSpec.custom(name)
        assert spec.a_star == pytest.approx(a_star, abs=1e-6)
        assert validate_diffusion(spec).ok

    def test_unknown_custom_name(self):
        with pytest.raises(ValueError):
            DiffusionSpec.custom("u_cubed")

    @pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
    def test_power_pressure_closed_form(self, m):
        u = np.geomspace(1e-6, 2.0, 60)
        A = DiffusionSpec.power(m)
        np.testing.assert_allclose(A.pressure(u), m / (m - 1.0) * u ** (m - 1.0), rtol=1e-12)

    @pytest.mark.parametrize("name", sorted(CUSTOM_DIFFUSIONS))
    def test_custom_pressure_matches_quadrature(self, name):
        A = DiffusionSpec.custom(name)
        u = np.geomspace(1e-4, 2.0, 25)
        np.testing.assert_allclose(A.pressure(u), A.pressure_quad(u), rtol=1e-8, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(u=st.floats(1e-6, 3.0), name=st.sampled_from(sorted(CUSTOM_DIFFUSIONS) + ["m2", "m3"]))
    def test_pressure_inverse_round_trip(self, u, name):
        A = DiffusionSpec.power(float(name[1])) if name.startswith("m") else DiffusionSpec.custom(name)
        back = float(A.pressure_inverse(A.pressure(u)))
        assert back == pytest.approx(u, rel=1e-9, abs=1e-12)


class TestReaction:
    def test_quartic_zeros(self, quartic):
        np.testing.assert_allclose(quartic.f(np.array(quartic.zeros)), 0.0, atol=1e-15)

    def test_sign_pattern(self, quartic):
        assert quartic.f(0.1) > 0 > quartic.f(0.4)
        assert quartic.f(0.8) > 0 > quartic.f(1.2)

    def test_default_validates(self, quad2, quartic):
        rep = validate_reaction(quartic, quad2)
        assert rep.ok
        assert rep.values["theta"] == pytest.approx(0.6569948432, abs=1e-9)
        assert rep.values["C_2star"] > rep.values["C_star"]

    def test_unordered_zeros(self, quad2):
        with pytest.raises(SignPatternViolation):
            validate_reaction(ReactionSpec.quartic(8.0, 0.6, 0.3), quad2)

    def test_integral_condition(self, quad2):
        # s2 close to 1 makes the bistable part unbalanced toward s1
        with pytest.raises(IntegralConditionFailed):
            validate_reaction(ReactionSpec.quartic(8.0, 0.3, 0.9), quad2)

    def test_zero_reaction_rejected(self, quad2):
        with pytest.raises(SignPatternViolation):
            validate_reaction(ReactionSpec.zero(), quad2)

    def test_logistic_has_no_theta(self, quad2):
        assert validate_reaction(ReactionSpec.logistic(), quad2).ok
        with pytest.raises(ThetaNotFound):
            theta(quad2, ReactionSpec.logistic())

    def test_theta_balances_the_weighted_integral(self, quad2, quartic):
        th = theta(quad2, quartic)
        assert quartic.s2 < th < 1.0
        assert abs(weighted_integral(quad2, quartic, quartic.s1, th)) < 1e-12


class TestPressureMaps:
    @pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
    def test_slopes_at_zero(self, m):
        maps = PressureMaps(DiffusionSpec.power(m), ReactionSpec.quartic())
        f0 = float(maps.reaction.df(0.0))
        assert abs(limiting_slope(maps.B) - (m - 1.0)) < 1e-4
        assert abs(limiting_slope(maps.h) - f0 * (m - 1.0)) < 1e-4

    def test_quadratic_is_linear_in_pressure(self, maps):
        v = np.linspace(0.0, 2.0, 41)
        np.testing.assert_allclose(maps.B(v), v, atol=1e-12)
        np.testing.assert_allclose(maps.dB(v), 1.0, atol=1e-10)

    def test_singular_abscissae(self, maps):
        np.testing.assert_allclose(maps.phi_hat, [0.6, 1.1, 2.0], rtol=1e-12)
        np.testing.assert_allclose(maps.h(np.array(maps.phi_hat)), 0.0, atol=1e-12)

    @pytest.mark.parametrize("name", sorted(CUSTOM_DIFFUSIONS))
    def test_dh_matches_difference_quotient(self, name):
        maps = PressureMaps(DiffusionSpec.custom(name), ReactionSpec.quartic())
        v = np.linspace(0.05, 0.9, 9) * maps.phi_hat[-1]
        eps = 1e-6
        fd = (maps.h(v + eps) - maps.h(v - eps)) / (2 * eps)
        np.testing.assert_allclose(maps.dh(v), fd, rtol=1e-5, atol=1e-7)
