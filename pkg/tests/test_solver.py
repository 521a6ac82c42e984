import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degwave import solver as S
from degwave.asymptotics import fit_front
from degwave.errors import CflViolation, UnsupportedInitialData
from degwave.nonlinearity import ReactionSpec


def random_ordered_pair(seed, x):
    """``u0 <= w0``: a random cos**2 bump and its max with an overlapping one."""
    rng = np.random.default_rng(seed)

    def bump(c, b):
        s = rng.uniform(0.05, 1.2)
        return np.where(np.abs(x - c) < b, s * np.cos(np.pi * (x - c) / (2 * b)) ** 2, 0.0)

    c, b = rng.uniform(-1.0, 1.0), rng.uniform(0.3, 2.0)
    u0 = bump(c, b)
    w0 = np.maximum(u0, bump(c + rng.uniform(-0.9, 0.9) * b, rng.uniform(0.3, 2.0)))
    return u0, w0


def run_pair(quad2, quartic, seed, T=2.0):
    grid = S.Grid1D(-15.0, 15.0, 0.05)
    x = grid.nodes()
    u0, w0 = random_ordered_pair(seed, x)
    dt = S.stable_dt(quad2, quartic, grid.dx, S.max_principle_bound(quartic, w0.max()))
    out = []
    for data in (u0, w0):
        st0 = S.init(S.InitialDataSpec("array", x_data=x, u_data=data), grid, quad2, quartic, dt=dt)
        out.append(S.run(st0, T, dt_out=0.5, snapshot_times=[0.5, 1.0, 2.0]))
    return out


@pytest.fixture(scope="module")
def grid():
    return S.Grid1D(-5, 5, 0.005, symmetric=True)


@pytest.fixture(scope="module")
def wave_data(summary):
    w = summary.small
    return S.InitialDataSpec("array", x_data=w.zeta, u_data=w.u, fill_left=w.left_limit)


class TestInit:
    def test_cos2_fronts(self, quad2, quartic):
        st0 = S.init(S.InitialDataSpec("cos2", b=1.0, sigma=0.5), S.Grid1D(-5, 5, 0.01, symmetric=True),
                     quad2, quartic)
        l, r = st0.fronts()
        assert abs(r - 1.0) < 0.02 and l == -r

    def test_zero_data_stays_zero(self, quad2, quartic):
        st0 = S.simulate(quad2, quartic, S.InitialDataSpec("tent", b=1.0, sigma=0.0),
                         S.Grid1D(-5, 5, 0.05), T=1.0)
        assert np.all(st0.u == 0.0)
        assert S.waiting_time(st0) == (np.inf, np.inf)

    def test_two_component_support_rejected(self, quad2, quartic):
        x = np.linspace(-3, 3, 61)
        u = np.where(np.abs(np.abs(x) - 1.5) < 0.5, 0.2, 0.0)
        with pytest.raises(UnsupportedInitialData):
            S.init(S.InitialDataSpec("array", x_data=x, u_data=u), S.Grid1D(-5, 5, 0.05), quad2, quartic)

    def test_unknown_shape(self):
        with pytest.raises(UnsupportedInitialData):
            S.InitialDataSpec("gaussian")

    def test_cfl_guards(self, quad2, quartic):
        with pytest.raises(CflViolation):
            S.stable_dt(quad2, quartic, 0.01, 1.0, dt_safety=0.6)
        with pytest.raises(CflViolation):
            S.init(S.InitialDataSpec("cos2"), S.Grid1D(-5, 5, 0.05), quad2, quartic, dt=1e-2)


class TestMonotonicity:
    @pytest.mark.parametrize("z", [0.0, 0.3, 0.55, 1.0])
    def test_equilibria_are_fixed_points(self, quad2, quartic, z):
        st0 = S.simulate(quad2, quartic, S.InitialDataSpec("constant", sigma=z),
                         S.Grid1D(-5, 5, 0.05), T=5.0)
        assert np.all(st0.u == z)

    @pytest.mark.parametrize("seed", range(50))
    def test_comparison_principle(self, quad2, quartic, seed):
        a, b = run_pair(quad2, quartic, seed)
        assert a.x.size == b.x.size
        for t in a.snapshots:
            assert np.all(b.snapshots[t][1] >= a.snapshots[t][1])

    @settings(max_examples=15, deadline=None)
    @given(sigma=st.floats(0.05, 1.5), b=st.floats(0.3, 2.0))
    def test_positivity_and_single_interval(self, quad2, quartic, sigma, b):
        st0 = S.simulate(quad2, quartic, S.InitialDataSpec("cos2", b=b, sigma=sigma),
                         S.Grid1D(-10, 10, 0.05, symmetric=True), T=1.0, dt_out=0.25,
                         snapshot_times=[0.25, 0.5, 1.0])
        for x, u in st0.snapshots.values():
            assert np.all(u >= 0)
            pos = np.nonzero(u > 0)[0]
            assert np.all(np.diff(pos) == 1)

    def test_mass_conserved_without_reaction(self, quad2):
        st0 = S.simulate(quad2, ReactionSpec.zero(), S.InitialDataSpec("cos2", b=1.0, sigma=1.0),
                         S.Grid1D(-10, 10, 0.02, symmetric=True), T=10.0)
        assert st0.mass() == pytest.approx(st0.initial_mass, rel=1e-12)


class TestFronts:
    def test_pme_support_exponent(self, quad2):
        st0 = S.simulate(quad2, ReactionSpec.zero(), S.InitialDataSpec("cos2", b=1.0, sigma=1.0),
                         S.Grid1D(-20, 20, 0.02, symmetric=True), T=500.0, dt_out=1.0)
        h = st0.history_arrays()
        sel = h["t"] >= 50
        k = np.polyfit(np.log(h["t"][sel]), np.log(h["r"][sel]), 1)[0]
        assert abs(k - 1.0 / 3.0) < 0.05 / 3.0

    def test_logistic_speed(self, quad2):
        st0 = S.simulate(quad2, ReactionSpec.logistic(), S.InitialDataSpec("cos2", b=1.0, sigma=0.5),
                         S.Grid1D(-40, 40, 0.02, symmetric=True), T=40.0)
        fit = fit_front(st0, window=(20.0, 40.0))
        assert fit.c_hat == pytest.approx(1.0, abs=0.02)

    def test_darcy_residual_halves(self, quad2):
        res = []
        for dx in (0.02, 0.01):
            st0 = S.simulate(quad2, ReactionSpec.logistic(), S.InitialDataSpec("cos2", b=1.0, sigma=0.5),
                             S.Grid1D(-40, 40, dx, symmetric=True), T=20.0)
            res.append(S.darcy_residual(st0)[1])
        assert res[1] <= 0.5 * res[0]
        assert res[1] < 0.05

    def test_symmetric_matches_full_grid(self, quad2, quartic):
        u0 = S.InitialDataSpec("cos2", b=1.0, sigma=0.5)
        a = S.simulate(quad2, quartic, u0, S.Grid1D(-20, 20, 0.02, symmetric=True), T=5.0)
        b = S.simulate(quad2, quartic, u0, S.Grid1D(-20, 20, 0.02), T=5.0)
        xa, ua = a.full()
        np.testing.assert_allclose(np.interp(b.x, xa, ua), b.u, atol=1e-13)
        assert a.fronts()[1] == pytest.approx(b.fronts()[1], abs=1e-10)

    def test_adaptive_step_agrees_with_fixed(self, quad2, quartic):
        u0 = S.InitialDataSpec("cos2", b=1.0, sigma=0.9)
        grid = S.Grid1D(-20, 20, 0.02, symmetric=True)
        a = S.simulate(quad2, quartic, u0, grid, T=5.0)
        st0 = S.init(u0, grid, quad2, quartic, dt=S.stable_dt(quad2, quartic, 0.02, 1.0))
        b = S.run(st0, 5.0)
        assert b.steps > a.steps
        assert a.fronts()[1] == pytest.approx(b.fronts()[1], abs=0.02)


class TestWaitingTime:
    def _t_star(self, quad2, quartic, grid, shape, p=2.0):
        st0 = S.simulate(quad2, quartic, S.InitialDataSpec(shape, b=1.0, sigma=0.5, p=p), grid,
                         T=0.5, dt_out=0.01)
        return S.waiting_time(st0)[1]

    @pytest.mark.parametrize("shape,p", [("tent", 2.0), ("power_edge", 1.0), ("plateau", 2.0)])
    def test_steep_edges_move_at_once(self, quad2, quartic, grid, shape, p):
        assert self._t_star(quad2, quartic, grid, shape, p) == 0.0

    def test_flatter_edges_wait_longer(self, quad2, quartic, grid):
        t = [self._t_star(quad2, quartic, grid, "power_edge", p) for p in (2.0, 3.0, 4.0)]
        assert t[0] > 0
        assert t[0] < t[1] < t[2]


class TestMovingFrame:
    def test_zero_drift_is_the_plain_run(self, quad2, quartic):
        u0 = S.InitialDataSpec("cos2", b=1.0, sigma=0.5)
        a = S.simulate(quad2, quartic, u0, S.Grid1D(-20, 20, 0.02), T=3.0)
        b = S.run_moving_frame(S.init(u0, S.Grid1D(-20, 20, 0.02), quad2, quartic), 0.0, 3.0)
        assert np.array_equal(a.u, b.u) and np.array_equal(a.x, b.x)

    def test_wave_is_stationary_against_its_speed(self, quad2, quartic, summary, wave_data):
        st0 = S.init(wave_data, S.Grid1D(-20, 30, 0.02), quad2, quartic)
        S.run_moving_frame(st0, -summary.c_s, 20.0)
        h = st0.history_arrays()
        assert abs(h["r"][-1] - h["r"][len(h["r"]) // 2]) < 2 * 0.02
        assert np.nanmax(h["darcy_r"][h["t"] > 5]) < 0.05 * summary.c_s

    def test_galilean_shift(self, quad2, quartic, summary, wave_data):
        st0 = S.init(wave_data, S.Grid1D(-20, 30, 0.02), quad2, quartic)
        S.run_moving_frame(st0, -1.0, 10.0)
        fit = fit_front(st0, window=(5.0, 10.0))
        assert fit.c_hat == pytest.approx(summary.c_s - 1.0, abs=2e-3)

    def test_symmetric_grid_refuses_drift(self, quad2, quartic):
        st0 = S.init(S.InitialDataSpec("cos2"), S.Grid1D(-5, 5, 0.05, symmetric=True), quad2, quartic)
        with pytest.raises(UnsupportedInitialData):
            S.run_moving_frame(st0, 0.5, 1.0)
