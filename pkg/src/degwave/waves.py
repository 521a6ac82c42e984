"""Traveling and sharp waves by phase-plane shooting.

A wave ``v(x, t) = phi(x - c t)`` of the pressure equation solves
``B(phi) phi'' + phi'**2 + c phi' + h(phi) = 0``.  With ``psi = phi'`` and the
stretched variable ``d zeta / d xi = B(phi)`` this becomes the regular system

    phi_dot = B(phi) psi,    psi_dot = -psi**2 - c psi - h(phi),

whose singular points are ``R0 = (0, 0)``, ``R1..R3 = (Lambda(s_i), 0)`` and
``R4 = (0, -c)``.  A sharp wave is a connection from ``R1`` (small) or ``R3``
(big) into ``R4``: the front is reached with slope ``-c`` (Darcy's law).
The classical bistable front is the ``R3 -> R1`` connection.

All trajectories carry ``zeta`` as a third component so that profiles come
out in the physical wave coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import (
    AmbiguousOutcome,
    BracketFailure,
    ConstructionFailure,
    NonMonotoneG,
    StepFailure,
)

RTOL = 1e-10
ATOL = 1e-13
DELTA0 = 1e-8
PHI_FLOOR = 1e-10
R0_RADIUS = 1e-6
SPEED_TOL = 1e-8
PROFILE_STEP = 0.05  # xi step cap when a dense profile is kept
CRITICAL_BAND = 1e-4  # |c_s - c_z| below this counts as equality

HITS_AXIS = "HitsPsiAxis"
DIVERGES_DOWN = "DivergesDown"
CONVERGES_R0 = "ConvergesToR0"


class PhaseSystem:
    """The desingularized wave system at speed ``c`` (immutable)."""

    def __init__(self, maps, c):
        self.maps = maps
        self.c = float(c)
        self._B = maps.B
        self._h = maps.h

    def rhs(self, xi, y):
        phi, psi = y[0], y[1]
        b = float(self._B(phi)) if phi > 0 else 0.0
        h = float(self._h(phi)) if phi > 0 else 0.0
        return [b * psi, -psi * psi - self.c * psi - h, b]

    def singular_points(self):
        pts = {"R0": (0.0, 0.0)}
        for i, ph in enumerate(self.maps.phi_hat, start=1):
            pts[f"R{i}"] = (ph, 0.0)
        pts["R4"] = (0.0, -self.c)
        return pts

    def jacobian(self, point):
        phi, psi = point
        m = self.maps
        return np.array([
            [float(m.dB(phi)) * psi, float(m.B(phi))],
            [-float(m.dh(phi)), -2.0 * psi - self.c],
        ])

    def saddle_eigen(self, i):
        """Closed-form eigen-data at the saddle ``R_i`` (i = 1 or 3).

        Returns ``(lam_plus, lam_minus, b_hat, a_hat)``; eigenvectors are
        ``(b_hat, lam_pm)``.
        """
        phi = self.maps.phi_hat[i - 1]
        b = float(self.maps.B(phi))
        a = float(self.maps.dh(phi))
        disc = math.sqrt(self.c**2 - 4.0 * a * b)
        return (-self.c + disc) / 2.0, (-self.c - disc) / 2.0, b, a

    def r4_stable_direction(self):
        """Unit vector of the stable eigendirection of ``R4`` into phi > 0."""
        A = self.maps.a_star
        vec = np.array([self.c * (A + 1.0), self.maps.h_slope0])
        return vec / np.linalg.norm(vec)


@dataclass
class TrajectoryOutcome:
    kind: str
    c: float
    psi_c: float | None
    phi_end: float
    psi_end: float
    p_axis: float | None
    sol: object = field(repr=False, default=None)


@dataclass
class WaveProfile:
    """Samples of a wave ``u = Q(zeta)``, ``v = Lambda(Q)``, ``psi = v'``.

    For sharp kinds the free boundary sits at ``zeta = 0`` and ``Q = 0`` to the
    right of it.
    """

    c: float
    kind: str
    zeta: np.ndarray
    u: np.ndarray
    v: np.ndarray
    psi: np.ndarray
    left_limit: float
    right_limit: float
    front: float | None = None
    darcy_slope: float | None = None
    meta: dict = field(default_factory=dict)
    _pieces: list = field(default_factory=list, repr=False)

    @property
    def sharp(self):
        return self.front is not None

    def u_at(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        out = np.interp(zeta, self.zeta, self.u, left=self.left_limit, right=self.right_limit)
        if self.sharp:
            out = np.where(zeta >= self.front, 0.0, out)
        return out

    def v_at(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        out = np.interp(zeta, self.zeta, self.v, left=np.nan, right=np.nan)
        if self.sharp:
            out = np.where(zeta >= self.front, 0.0, out)
        return out

    def level_position(self, level):
        """Rightmost zeta where the (decreasing) profile equals ``level``."""
        u = self.u
        idx = np.nonzero((u[:-1] - level) * (u[1:] - level) <= 0)[0]
        if idx.size == 0:
            return None
        i = idx[-1]
        du = u[i + 1] - u[i]
        w = 0.0 if du == 0 else (level - u[i]) / du
        return float(self.zeta[i] + w * (self.zeta[i + 1] - self.zeta[i]))

    def shifted(self, dz):
        return WaveProfile(
            self.c, self.kind, self.zeta + dz, self.u, self.v, self.psi,
            self.left_limit, self.right_limit,
            None if self.front is None else self.front + dz,
            self.darcy_slope, dict(self.meta),
            [(s, a, b, off + dz) for s, a, b, off in self._pieces],
        )

    def to_columns(self):
        return {"zeta": self.zeta, "u": self.u, "v": self.v, "psi": self.psi}


# ---------------------------------------------------------------------------
# low-level integration


def _solve(system, y0, span, events=(), max_step=np.inf):
    sol = integrate.solve_ivp(
        system.rhs, span, list(y0), method="DOP853", rtol=RTOL, atol=ATOL,
        events=list(events), dense_output=True, max_step=max_step,
    )
    if sol.status == -1:
        raise StepFailure(f"integration failed at c={system.c}: {sol.message}")
    return sol


def _event(fn, terminal=True, direction=0):
    fn.terminal = terminal
    fn.direction = direction
    return fn


def _fired(sol, k):
    return sol.t_events[k].size > 0


def _y_event(sol, k):
    return sol.y_events[k][0]


def _start_unstable(system, i, delta0):
    """Point at distance ``delta0`` from saddle ``R_i`` on its unstable
    manifold, on the branch entering psi < 0."""
    lp, _, b, _ = system.saddle_eigen(i)
    vec = np.array([b, lp]) / math.hypot(b, lp)
    phi = system.maps.phi_hat[i - 1]
    return np.array([phi - delta0 * vec[0], -delta0 * vec[1], 0.0])


def _start_stable(system, i, delta0):
    """Point on the stable manifold of saddle ``R_i`` approached from phi > phi_i, psi < 0."""
    _, lm, b, _ = system.saddle_eigen(i)
    vec = np.array([b, lm]) / math.hypot(b, lm)
    phi = system.maps.phi_hat[i - 1]
    return np.array([phi + delta0 * vec[0], delta0 * vec[1], 0.0])


def _start_r4(system, delta):
    """Point on the stable manifold of ``R4`` with its zeta measured from the front."""
    e = system.r4_stable_direction()
    phi0 = delta * e[0]
    psi0 = -system.c + delta * e[1]
    alpha = e[1] / e[0]
    # zeta of the start point when the front is at zeta = 0 (psi = -c + alpha phi)
    z0 = math.log1p(-alpha * phi0 / system.c) / alpha if alpha > 0 else -phi0 / system.c
    return np.array([phi0, psi0, z0])


# ---------------------------------------------------------------------------
# shooting from R1


def shoot_from_R1(maps, c, delta0=DELTA0, phi_floor=PHI_FLOOR, psi_blow=None,
                  r0_radius=R0_RADIUS, decide_early=True, max_xi=1e4):
    """Follow the unstable manifold of ``R1`` into ``D = {0 <= phi <= phi1, psi < 0}``.

    Outcomes: ``HitsPsiAxis`` when ``phi`` drops below ``phi_floor`` with finite
    ``psi``; ``DivergesDown`` when ``psi < psi_blow``; ``ConvergesToR0`` when the
    orbit enters the ``r0_radius`` ball.  With ``decide_early`` two invariant
    regions settle the outcome sooner: ``psi < -c`` (psi then decreases
    monotonically, so the orbit goes down) and ``{phi <= phi_cap,
    -c/2 <= psi <= 0}`` with ``h(phi_cap) < c**2/4`` (flow points inward, so the
    orbit tends to ``R0``).

    At ``c = 0`` the slope of ``u`` at the axis is finite while ``psi`` is not,
    so ``psi_blow`` defaults to ``-inf`` there and ``p_axis = lambda(phi) psi``
    (the ``[A(u)]'`` intercept) is reported.
    """
    c = float(c)
    sys_ = PhaseSystem(maps, c)
    phi1 = maps.phi_hat[0]
    if psi_blow is None:
        psi_blow = -1e3 * (1.0 + c) if c > 0 else -np.inf
    early = decide_early and c > 0
    phi_cap = _capture_phi(maps, c) if early else 0.0
    margin = 1e-9 * (1.0 + c)

    events = [
        _event(lambda t, y: y[0] - phi_floor, direction=-1),
        _event(lambda t, y: y[1] - psi_blow, direction=-1),
        _event(lambda t, y: math.hypot(y[0], y[1]) - r0_radius, direction=-1),
    ]
    if early:
        events.append(_event(lambda t, y: y[1] + c + margin, direction=-1))
        events.append(_event(
            lambda t, y: max(y[0] - phi_cap, -c / 2.0 - y[1]), direction=-1))
    y0 = _start_unstable(sys_, 1, delta0)
    sol = _solve(sys_, y0, (0.0, max_xi), events)
    phi_end, psi_end = sol.y[0, -1], sol.y[1, -1]
    p_axis = float(maps.lam(max(phi_end, 0.0))) * psi_end

    if _fired(sol, 0):
        kind, psi_c = HITS_AXIS, psi_end
    elif _fired(sol, 1) or (early and _fired(sol, 3)):
        kind, psi_c = DIVERGES_DOWN, None
    elif _fired(sol, 2) or (early and _fired(sol, 4)):
        kind, psi_c = CONVERGES_R0, None
    else:
        raise AmbiguousOutcome(
            f"no outcome for c={c} within xi <= {max_xi}", phi=phi_end, psi=psi_end
        )
    return TrajectoryOutcome(kind, c, psi_c, phi_end, psi_end, p_axis, sol)


def _capture_phi(maps, c):
    """Largest phi <= 1e-3 phi1 with h(phi) < c**2/4 (inward-flow region)."""
    phi = 1e-3 * maps.phi_hat[0]
    while float(maps.h(phi)) >= 0.25 * c * c and phi > 1e-14:
        phi *= 0.1
    return phi


def g_sign(outcome):
    """Sign of ``psi^c + c`` from a shooting outcome."""
    if outcome.kind == DIVERGES_DOWN:
        return -1
    if outcome.kind == CONVERGES_R0:
        return 1
    return 1 if outcome.psi_c + outcome.c > 0 else -1


def axis_intercepts(maps, speeds, phi_probe=None, delta0=DELTA0):
    """``psi`` where the ``R1`` orbit crosses ``phi = phi_probe`` for each speed.

    By the ordering of the orbits in ``c`` this is the quantity whose strict
    increase in ``c`` is the axis-intercept monotonicity.  ``nan`` marks orbits
    that leave through ``psi_blow`` first.
    """
    if phi_probe is None:
        phi_probe = 1e-4 * maps.phi_hat[0]
    out = []
    for c in speeds:
        o = shoot_from_R1(maps, c, delta0=delta0, phi_floor=phi_probe,
                          decide_early=False, max_xi=1e7)
        out.append(o.psi_c if o.kind == HITS_AXIS else np.nan)
    return np.array(out)


# ---------------------------------------------------------------------------
# two-sided matching


def _branch_to(system, y0, phi_target, backward, extra_events=(), max_step=np.inf):
    direction = 1 if backward else -1
    ev = [_event(lambda t, y: y[0] - phi_target, direction=direction)]
    ev.extend(extra_events)
    span = (0.0, -1e4) if backward else (0.0, 1e4)
    sol = _solve(system, y0, span, ev, max_step=max_step)
    return sol


def _r4_branch(system, phi_mid, delta=1e-9, max_step=np.inf):
    y0 = _start_r4(system, delta)
    blow = _event(lambda t, y: y[1] + 1e3 * (1.0 + system.c), direction=-1)
    turn = _event(lambda t, y: y[1], direction=1)
    sol = _branch_to(system, y0, phi_mid, backward=True, extra_events=(blow, turn),
                     max_step=max_step)
    if not _fired(sol, 0):
        return None
    return sol


def _saddle_branch(system, i, phi_mid, delta0, max_step=np.inf):
    y0 = _start_unstable(system, i, delta0)
    blow = _event(lambda t, y: y[1] + 1e3 * (1.0 + system.c), direction=-1)
    turn = _event(lambda t, y: y[1], direction=1)
    sol = _branch_to(system, y0, phi_mid, backward=False, extra_events=(blow, turn),
                     max_step=max_step)
    if not _fired(sol, 0):
        return None
    return sol


def _sharp_miss(maps, c, i, phi_mid, delta0, max_step=np.inf):
    """psi of the ``R_i`` orbit minus psi of the ``R4`` stable manifold at ``phi_mid``."""
    sys_ = PhaseSystem(maps, c)
    a = _saddle_branch(sys_, i, phi_mid, delta0, max_step)
    b = _r4_branch(sys_, phi_mid, max_step=max_step)
    if a is None or b is None:
        return None, a, b
    return _y_event(a, 0)[1] - _y_event(b, 0)[1], a, b


def _glue_sharp(maps, c, kind, sat, r4, left_limit, n=1500):
    """Profile from a saddle branch (left part) and an ``R4`` branch (front part)."""
    zb = np.linspace(r4.t[0], r4.t[-1], n)
    yb = r4.sol(zb)
    z_mid_r4 = yb[2, -1]
    za = np.linspace(sat.t[0], sat.t[-1], n)
    ya = sat.sol(za)
    offset_a = z_mid_r4 - ya[2, -1]
    zeta = np.concatenate([ya[2] + offset_a, yb[2][::-1][1:]])
    v = np.concatenate([ya[0], yb[0][::-1][1:]])
    psi = np.concatenate([ya[1], yb[1][::-1][1:]])
    v = np.maximum(v, 0.0)
    # append the free boundary itself
    zeta = np.append(zeta, 0.0)
    v = np.append(v, 0.0)
    psi = np.append(psi, -c)
    u = np.asarray(maps.lam(v))
    pieces = [(sat, sat.t[0], sat.t[-1], offset_a), (r4, r4.t[-1], r4.t[0], 0.0)]
    darcy = -_front_slope(r4)
    return WaveProfile(c, kind, zeta, u, v, psi, left_limit, 0.0, front=0.0,
                       darcy_slope=darcy, _pieces=pieces)


def _front_slope(r4):
    """psi at phi = 0 extrapolated linearly in phi from the start of an R4 branch."""
    t = np.linspace(r4.t[0], r4.t[0] + 0.05 * (r4.t[-1] - r4.t[0]), 5)
    y = r4.sol(t)
    k = np.polyfit(y[0], y[1], 1)
    return float(np.polyval(k, 0.0))


# ---------------------------------------------------------------------------
# small sharp wave


def _refine_sharp(maps, i, lo, hi, phi_mid, delta0, tol):
    def miss(c):
        m, _, _ = _sharp_miss(maps, c, i, phi_mid, delta0)
        return m

    m_lo, m_hi = miss(lo), miss(hi)
    if m_lo is None or m_hi is None or m_lo * m_hi > 0:
        return None
    return optimize.brentq(miss, lo, hi, xtol=min(tol, 1e-12), rtol=1e-15)


def find_c_s(maps, bracket=(0.0, 1.0), tol=SPEED_TOL, delta0=DELTA0, scan=8):
    """Speed and profile of the small sharp wave (``R1 -> R4``).

    The sign of ``g(c) = psi^c + c`` is bracketed and bisected from shooting
    outcomes; the final digits come from matching the ``R1`` orbit against the
    stable manifold of ``R4`` at ``phi1 / 2``.  Additional sign changes seen on
    a coarse scan of the bracket are reported in ``meta['extra_sign_changes']``.
    """
    lo, hi = map(float, bracket)

    def sign(c):
        if c <= 0.0:
            return -1  # psi^0 < 0 = -c on D
        return g_sign(shoot_from_R1(maps, c, delta0=delta0))

    s_lo, s_hi = sign(lo), sign(hi)
    for _ in range(60):
        if s_lo < 0:
            break
        hi, s_hi = lo, s_lo
        lo, s_lo = lo / 2.0, sign(lo / 2.0)
    for _ in range(60):
        if s_hi > 0:
            break
        lo, s_lo = hi, s_hi
        hi = 2.0 * hi if hi > 0 else 1.0
        s_hi = sign(hi)
    if not (s_lo < 0 < s_hi):
        raise BracketFailure(f"no sign change of psi^c + c on [{lo}, {hi}]")

    grid = np.linspace(lo, hi, scan + 1)
    signs = [s_lo] + [sign(c) for c in grid[1:-1]] + [s_hi]
    changes = [i for i in range(scan) if signs[i] != signs[i + 1]]
    if len(changes) != 1 or signs[changes[0]] > 0:
        extra = [(float(grid[i]), float(grid[i + 1])) for i in changes]
    else:
        extra = []
    first = changes[0]
    lo, hi = grid[first], grid[first + 1]

    while hi - lo > 1e-4 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if sign(mid) < 0:
            lo = mid
        else:
            hi = mid

    phi_mid = 0.5 * maps.phi_hat[0]
    c_s = _refine_sharp(maps, 1, lo, hi, phi_mid, delta0, tol)
    if c_s is None:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if sign(mid) < 0:
                lo = mid
            else:
                hi = mid
        c_s = 0.5 * (lo + hi)
    elif not (lo - tol <= c_s <= hi + tol):
        raise NonMonotoneG(f"matched speed {c_s} outside the sign bracket [{lo}, {hi}]")

    m, sat, r4 = _sharp_miss(maps, c_s, 1, phi_mid, delta0, PROFILE_STEP)
    if sat is None or r4 is None:
        raise BracketFailure(f"cannot reconstruct the sharp profile at c={c_s}")
    prof = _glue_sharp(maps, c_s, "SharpSmall", sat, r4,
                       left_limit=float(maps.reaction.zeros[1]))
    prof.meta.update(bracket=(float(lo), float(hi)), miss=float(m),
                     extra_sign_changes=extra, delta0=delta0)
    return c_s, prof


# ---------------------------------------------------------------------------
# bistable front R3 -> R1


def cz_miss(maps, c, delta0=DELTA0, dense=False):
    """Signed miss of the ``R3`` orbit at ``R1``.

    Overshoot (orbit crosses ``phi = phi1`` with psi < 0): returns that psi.
    Undershoot (orbit turns at psi = 0 with phi > phi1): returns ``phi - phi1``.
    """
    sys_ = PhaseSystem(maps, c)
    phi1 = maps.phi_hat[0]
    ev = [
        _event(lambda t, y: y[0] - phi1, direction=-1),
        _event(lambda t, y: y[1], direction=1),
    ]
    y0 = _start_unstable(sys_, 3, delta0)
    sol = _solve(sys_, y0, (0.0, 1e5), ev)
    if _fired(sol, 0):
        m = float(_y_event(sol, 0)[1])
    elif _fired(sol, 1):
        m = float(_y_event(sol, 1)[0] - phi1)
    else:
        raise AmbiguousOutcome(f"R3 orbit at c={c} neither overshoots nor undershoots R1")
    return (m, sol) if dense else m


def find_c_z(maps, tol=SPEED_TOL, delta0=DELTA0, c_hi=1.0):
    """Speed and profile of the front from 1 (left) to s1 (right)."""
    if maps.reaction.kind != "quartic":
        raise BracketFailure("the bistable front needs the multistable reaction")
    lo = 0.0
    m_lo = cz_miss(maps, lo, delta0)
    if m_lo >= 0:
        raise BracketFailure(f"R3 orbit at c=0 does not overshoot R1 (miss {m_lo})")
    hi = c_hi
    for _ in range(40):
        if cz_miss(maps, hi, delta0) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketFailure("no undershoot found for the R3 orbit")
    c_z = optimize.brentq(lambda c: cz_miss(maps, c, delta0), lo, hi,
                         xtol=min(tol, 1e-12), rtol=1e-15)
    return c_z, cz_profile(maps, c_z, delta0)


def cz_profile(maps, c, delta0=DELTA0, n=3000):
    sys_ = PhaseSystem(maps, c)
    phi1, phi3 = maps.phi_hat[0], maps.phi_hat[2]
    stop = 1e-6 * (phi3 - phi1)
    ev = [
        _event(lambda t, y: y[0] - phi1 - stop, direction=-1),
        _event(lambda t, y: y[1], direction=1),
    ]
    sol = _solve(sys_, _start_unstable(sys_, 3, delta0), (0.0, 1e5), ev, max_step=PROFILE_STEP)
    xi = np.linspace(sol.t[0], sol.t[-1], n)
    y = sol.sol(xi)
    v, psi, zeta = y
    u = np.asarray(maps.lam(np.maximum(v, 0.0)))
    s1 = maps.reaction.s1
    prof = WaveProfile(c, "ClassicalFront(1->s1)", zeta, u, v, psi, 1.0, s1,
                       _pieces=[(sol, sol.t[0], sol.t[-1], 0.0)])
    z0 = prof.level_position(0.5 * (1.0 + s1))
    return prof.shifted(-z0) if z0 is not None else prof


# ---------------------------------------------------------------------------
# big sharp wave


def find_c_b(maps, c_s, c_z, tol=SPEED_TOL, delta0=DELTA0):
    """Speed and profile of the big sharp wave (``R3 -> R4``), or ``None``
    when ``c_s >= c_z``."""
    if not c_s < c_z:
        return None
    phi_mid = 0.5 * maps.phi_hat[0]

    def sign(c):
        m, _, _ = _sharp_miss(maps, c, 3, phi_mid, delta0)
        if m is not None:
            return 1 if m > 0 else -1
        # no crossing of phi_mid: the R3 orbit turned above R1 or blew up
        return 1 if cz_miss(maps, c, delta0) > 0 else -1

    span = c_z - c_s
    lo, hi = c_s + 1e-9 * span, c_z - 1e-6 * span
    s_lo, s_hi = sign(lo), sign(hi)
    if not (s_lo < 0 < s_hi):
        raise BracketFailure(
            f"R3-R4 miss does not change sign on ({c_s}, {c_z}): {s_lo}, {s_hi}"
        )
    while hi - lo > 1e-4 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if sign(mid) < 0:
            lo = mid
        else:
            hi = mid
    c_b = _refine_sharp(maps, 3, lo, hi, phi_mid, delta0, tol)
    if c_b is None:
        raise BracketFailure(f"matching failed near c_b in [{lo}, {hi}]")
    _, sat, r4 = _sharp_miss(maps, c_b, 3, phi_mid, delta0, PROFILE_STEP)
    prof = _glue_sharp(maps, c_b, "SharpBig", sat, r4, left_limit=1.0)
    prof.meta.update(bracket=(float(lo), float(hi)))
    return c_b, prof


# ---------------------------------------------------------------------------
# auxiliary waves and the four trajectory types at c = c_s


def _orbit_profile(maps, c, kind, seed, fwd_events, bwd_events, left_limit, right_limit,
                   n=1500, max_xi=1e4):
    sys_ = PhaseSystem(maps, c)
    fwd = _solve(sys_, seed, (0.0, max_xi), fwd_events)
    bwd = _solve(sys_, seed, (0.0, -max_xi), bwd_events)
    xb = np.linspace(bwd.t[-1], 0.0, n)
    xf = np.linspace(0.0, fwd.t[-1], n)[1:]
    y = np.concatenate([bwd.sol(xb), fwd.sol(xf)], axis=1)
    v = np.maximum(y[0], 0.0)
    u = np.asarray(maps.lam(v))
    prof = WaveProfile(c, kind, y[2], u, v, y[1], left_limit, right_limit,
                       _pieces=[(bwd, bwd.t[-1], 0.0, 0.0), (fwd, 0.0, fwd.t[-1], 0.0)])
    return prof, fwd, bwd


def _axis_events(c, phi_floor=PHI_FLOOR):
    return [
        _event(lambda t, y: y[0] - phi_floor, direction=-1),
        _event(lambda t, y: abs(y[1]) - 1e3 * (1.0 + c), direction=1),
    ]


def auxiliary_wave_U1(maps, c1, d, margin=1e-3):
    """Compactly supported wave at speed ``c1 < c_s`` with maximum ``d``.

    The orbit through ``(Lambda(d), 0)`` reaches the axis on both sides; its
    right edge is steeper than ``-c1``.  Below ``psi = -c1`` the Riccati part
    drives ``psi`` to ``-inf`` while ``phi ~ 1/|psi|`` tends to zero, so an
    edge reached through the ``psi`` blow-up has infinite slope
    (``darcy_slope = inf``); the same holds with ``psi -> +inf`` on the left.
    """
    phi_star = float(maps.Lambda(d))
    seed = np.array([phi_star, 0.0, 0.0])
    prof, fwd, bwd = _orbit_profile(
        maps, c1, "CompactBump(U1)", seed, _axis_events(c1), _axis_events(c1), 0.0, 0.0)
    blown = _fired(fwd, 1)
    if not (_fired(fwd, 0) or blown) or fwd.y[1, -1] > -c1:
        raise ConstructionFailure(
            f"U1 orbit reaches the axis above -c' (psi={fwd.y[1, -1]:.4g}); "
            "needs psi^c' < -c' (c' below c_s)"
        )
    if not (_fired(bwd, 0) or _fired(bwd, 1)) or bwd.y[0, -1] > 1e-2 * phi_star:
        raise ConstructionFailure("U1 orbit does not return to the axis on the left")
    prof = prof.shifted(-prof.zeta[-1])
    prof.front = 0.0
    prof.darcy_slope = math.inf if blown else -float(fwd.y[1, -1])
    prof.meta.update(L=float(-prof.zeta[0]), peak=float(prof.u.max()),
                     edge_margin=prof.darcy_slope - c1, required_margin=margin)
    if prof.darcy_slope < c1 + margin:
        raise ConstructionFailure("U1 edge slope not steeper than -c' by the margin")
    return prof


def auxiliary_wave_U2(maps, c2, psi_star=None, phi_start=1e-10, u_cap=3.0):
    """Wave at speed ``c2 > c_s`` vanishing on ``[0, inf)``, unbounded to the left.

    Started on the axis at ``psi_star in (-c2, psi_1^{c2})`` and followed in
    reverse ``xi`` until ``u`` exceeds ``u_cap``.
    """
    if psi_star is None:
        psi_star = -0.9 * c2
    sys_ = PhaseSystem(maps, c2)
    phi_cap = float(maps.Lambda(u_cap))
    ev = [
        _event(lambda t, y: y[0] - phi_cap, direction=1),
        _event(lambda t, y: y[1], direction=1),
    ]
    sol = _solve(sys_, [phi_start, psi_star, 0.0], (0.0, -1e5), ev)
    if not _fired(sol, 0):
        raise ConstructionFailure(
            "U2 orbit turns before crossing phi = Lambda(1); "
            "needs the R1 orbit above the start point (c'' > c_s, c'' beyond the R3 orbit)"
        )
    xi = np.linspace(sol.t[-1], 0.0, 2000)
    y = sol.sol(xi)
    v = np.maximum(y[0], 0.0)
    zeta = y[2] - phi_start / psi_star
    prof = WaveProfile(c2, "Unbounded(U2)", zeta, np.asarray(maps.lam(v)), v, y[1],
                       float(u_cap), 0.0, front=0.0, darcy_slope=-psi_star,
                       _pieces=[(sol, sol.t[-1], 0.0, -phi_start / psi_star)])
    prof.meta.update(L=float(-zeta[0]))
    return prof


def classify_wave_types(maps, c_s, type_one=None, eta=1e-6):
    """Exemplars of the four orbit types at ``c = c_s``.

    I   the small sharp wave;
    II  hump, then back to zero at a finite point (orbit crossing the phi-axis
        just left of ``R1``, shadowing the sharp wave and entering ``R0``
        along the psi-axis);
    III hump, then a positive tail (orbit crossing at ``phi1 / 2`` and entering
        ``R0`` along the center direction);
    IV  decreasing from above ``phi1`` to a front with infinite slope.
    """
    phi1 = maps.phi_hat[0]
    if type_one is None:
        _, type_one = find_c_s(maps, bracket=(0.5 * c_s, 2.0 * c_s))
    types = [type_one]

    cap = _capture_phi(maps, c_s)
    into_r0 = [
        _event(lambda t, y: max(y[0] - cap, -c_s / 2.0 - y[1]), direction=-1),
        _event(lambda t, y: y[1] + 1e3 * (1 + c_s), direction=-1),
    ]
    up_axis = _axis_events(c_s)
    for kind, phi_c in (("TypeII", phi1 * (1.0 - eta)), ("TypeIII", 0.5 * phi1)):
        prof, fwd, _ = _orbit_profile(
            maps, c_s, kind, np.array([phi_c, 0.0, 0.0]), into_r0, up_axis, 0.0, 0.0)
        phi_e, psi_e = fwd.y[0, -1], fwd.y[1, -1]
        prof.meta.update(
            end=(float(phi_e), float(psi_e)),
            approach="axis" if phi_e < 1e-3 * abs(psi_e) else "center",
        )
        prof = prof.shifted(-prof.zeta[0])
        if kind == "TypeII":
            prof.front = float(prof.zeta[-1])
            prof.right_limit = 0.0
        else:
            prof.meta["tail_decay_rate"] = maps.h_slope0 / c_s
        types.append(prof)

    seed = np.array([phi1, -0.1 * c_s, 0.0])
    down = _axis_events(c_s)
    stop_back = [
        _event(lambda t, y: y[1], direction=1),
        _event(lambda t, y: y[0] - (maps.phi_hat[-1] if len(maps.phi_hat) > 2 else 2 * phi1),
               direction=1),
    ]
    prof, fwd, _ = _orbit_profile(maps, c_s, "TypeIV", seed, down, stop_back, np.nan, 0.0)
    prof.left_limit = float(prof.u[0])
    prof.front = float(prof.zeta[-1])
    prof.darcy_slope = -float(fwd.y[1, -1])
    types.append(prof)
    return types


# ---------------------------------------------------------------------------
# diagnostics


def _d1(g, x, eps):
    return (8.0 * (g(x + eps) - g(x - eps)) - (g(x + 2 * eps) - g(x - 2 * eps))) / (12.0 * eps)


def profile_residual(profile, maps, which="v", eps=1e-3, n=400, interior=0.02, floor=1e-3):
    """Sup-norm residual of the wave equation along a computed profile.

    Only the ``phi`` component of the stored trajectories is used: derivatives
    in ``zeta`` come from nested fourth-order differences in ``xi`` of the
    dense solution.  ``which='u'`` checks ``[A(u)]'' + c u' + f(u) = 0``
    instead.
    """
    A, f = maps.diffusion, maps.reaction
    c = profile.c
    worst = 0.0
    for sol, a, b, _ in profile._pieces:
        lo, hi = min(a, b), max(a, b)
        pad = max(interior * (hi - lo), 3 * eps)
        xi = np.linspace(lo + pad, hi - pad, n)

        def phi(x):
            return sol.sol(x)[0]

        if which == "v":
            g = phi
        else:
            def g(x):
                return A.A(maps.lam(np.maximum(phi(x), 0.0)))

        def first(x):
            return _d1(g, x, eps) / maps.B(phi(x))

        p = phi(xi)
        d1 = first(xi)
        d2 = _d1(first, xi, eps) / maps.B(p)
        if which == "v":
            res = maps.B(p) * d2 + d1**2 + c * d1 + maps.h(p)
        else:
            du = _d1(lambda x: maps.lam(np.maximum(phi(x), 0.0)), xi, eps) / maps.B(p)
            res = d2 + c * du + f.f(maps.lam(p))
        keep = p > floor * max(maps.phi_hat)
        if np.any(keep):
            worst = max(worst, float(np.max(np.abs(res[keep]))))
    return worst


@dataclass
class WaveSummary:
    c_s: float
    c_z: float | None
    c_b: float | None
    small: WaveProfile
    front: WaveProfile | None
    big: WaveProfile | None

    @property
    def ordering(self):
        if self.c_z is None:
            return "monostable"
        if abs(self.c_s - self.c_z) <= CRITICAL_BAND:
            return "critical"
        return "c_s<c_b<c_z" if self.c_s < self.c_z else "c_s>c_z"

    def to_dict(self):
        return {"c_s": self.c_s, "c_z": self.c_z, "c_b": self.c_b, "ordering": self.ordering}


def compute_all(maps, tol=SPEED_TOL, delta0=DELTA0):
    c_s, small = find_c_s(maps, tol=tol, delta0=delta0)
    if maps.reaction.kind != "quartic":
        return WaveSummary(c_s, None, None, small, None, None)
    c_z, front = find_c_z(maps, tol=tol, delta0=delta0)
    if abs(c_s - c_z) <= CRITICAL_BAND:
        # c_b is squeezed into (c_s, c_z) and is not resolved separately
        return WaveSummary(c_s, c_z, None, small, front, None)
    res = find_c_b(maps, c_s, c_z, tol=tol, delta0=delta0)
    c_b, big = res if res is not None else (None, None)
    return WaveSummary(c_s, c_z, c_b, small, front, big)
