"""Stationary solutions of ``[A(q)]'' + f(q) = 0``.

With ``p = [A(q)]'`` the stationary system is ``q' = p / A'(q)``,
``p' = -f(q)`` and every orbit lies on a level set of the first integral

    p**2 + 2 F(q) = C,      F(q) = int_0^q A'(r) f(r) dr.

The classes built here are constants, the ground state (homoclinic to
``s1`` with peak ``theta``), compactly supported short/high bumps, monotone
half-line solutions and periodic solutions oscillating around ``s2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import IntegrationStall, InvalidTarget, QuadratureFailure
from .nonlinearity import theta, weighted_integral

CASES = ("Constant", "GroundState", "CompactShort", "CompactHigh", "MonotoneHalf", "Periodic")
Q_FLOOR = 1e-12
RTOL = 1e-11
ATOL = 1e-13
# the x-stepped stretch near a saddle stops this close (relative) to the equilibrium
TAIL_SWITCH = 1e-4

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def first_integral_constant(q_peak, A, f):
    """``C = 2 F(q_peak)``: the level of an orbit with ``p = 0`` at ``q_peak``."""
    if q_peak < 0:
        raise InvalidTarget(f"q_peak must be nonnegative, got {q_peak}")
    return 2.0 * weighted_integral(A, f, 0.0, float(q_peak))


def primitive_F(A, f, q):
    """``F(q)`` for an array of nonnegative ``q`` (vectorized)."""
    q = np.asarray(q, dtype=float)
    flat = q.ravel()
    order = np.argsort(flat)
    qs = flat[order]
    out = np.empty_like(qs)
    pos = qs > 0
    if not np.any(pos):
        return np.zeros_like(q)
    first = np.argmax(pos)
    out[:first] = 0.0
    acc = weighted_integral(A, f, 0.0, qs[first])
    out[first] = acc
    a, b = qs[first:-1], qs[first + 1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    seg = half * np.sum(_GL_W[None, :] * A.dA(nodes) * f.f(nodes), axis=1)
    out[first + 1:] = acc + np.cumsum(seg)
    res = np.empty_like(out)
    res[order] = out
    return res.reshape(q.shape)


@dataclass
class StationaryProfile:
    case_tag: str
    C: float
    x: np.ndarray
    q: np.ndarray
    p: np.ndarray
    support: tuple | None  # None for the whole line
    L: float | None
    peak: float
    meta: dict = field(default_factory=dict)

    @property
    def compact(self):
        return self.support is not None

    def q_at(self, x):
        return np.interp(x, self.x, self.q, left=self.q[0], right=self.q[-1])

    def first_integral_error(self, A, f):
        """Max of ``|p**2 + 2F(q) - C|`` over the samples."""
        return float(np.max(np.abs(self.p**2 + 2.0 * primitive_F(A, f, self.q) - self.C)))

    def summary(self):
        return {"case": self.case_tag, "C": self.C, "L": self.L, "peak": self.peak,
                **{k: v for k, v in self.meta.items() if np.isscalar(v)}}


def default_x_max(A, f):
    s1 = f.zeros[1]
    return 50.0 / math.sqrt(abs(float(f.df(s1)) * float(A.dA(s1))))


# ---------------------------------------------------------------------------
# integrators


def _x_rhs(A, f):
    def rhs(x, y):
        q, p = y
        return [p / float(A.dA(q)), -float(f.f(q))]
    return rhs


def _q_rhs(A, f):
    # state (x, p) as functions of q on a monotone stretch
    def rhs(q, y):
        x, p = y
        a = float(A.dA(q))
        return [a / p, -float(f.f(q)) * a / p]
    return rhs


def _ev(fn, terminal=True, direction=0):
    fn.terminal = terminal
    fn.direction = direction
    return fn


def _solve(rhs, span, y0, events=(), max_step=np.inf):
    sol = integrate.solve_ivp(rhs, span, list(y0), method="DOP853", rtol=RTOL, atol=ATOL,
                              events=list(events), dense_output=True, max_step=max_step)
    if sol.status == -1:
        raise IntegrationStall(sol.message)
    return sol


def _sample_x(sol, x0, x1, dx):
    n = max(2, int(math.ceil(abs(x1 - x0) / dx)) + 1)
    xs = np.linspace(x0, x1, n)
    q, p = sol.sol(xs)
    return xs, q, p


def _descend_from_peak(A, f, q_peak, q_end, dx, x_max):
    """Decreasing half ``q(x)``, ``x >= 0``, from the peak down to ``q_end``.

    x-stepping while ``q > (q_peak + q_end) / 2``, then q-stepping down to
    ``Q_FLOOR`` (``q_end = 0``).  Returns arrays ``x, q, p``.
    """
    q_sw = 0.5 * (q_peak + q_end)
    ev = [_ev(lambda x, y: y[0] - q_sw, direction=-1)]
    s1 = _solve(_x_rhs(A, f), (0.0, x_max), [q_peak, 0.0], ev)
    if s1.t_events[0].size == 0:
        raise IntegrationStall(f"no descent below {q_sw} within x <= {x_max}")
    x_sw = float(s1.t_events[0][0])
    xa, qa, pa = _sample_x(s1, 0.0, x_sw, dx)
    p_sw = float(s1.y_events[0][0][1])

    s2 = _solve(_q_rhs(A, f), (q_sw, Q_FLOOR), [x_sw, p_sw])
    qs = _q_grid(q_sw, x_span=float(s2.y[0, -1]) - x_sw, dx=dx)
    xb, pb = s2.sol(qs)
    return (np.concatenate([xa, xb[1:]]), np.concatenate([qa, qs[1:]]),
            np.concatenate([pa, pb[1:]]))


def _q_grid(q_hi, x_span, dx):
    """Descending q nodes from ``q_hi`` to ``Q_FLOOR``, dense near the edge."""
    n = max(50, int(math.ceil(abs(x_span) / dx)) + 1)
    lin = np.linspace(q_hi, Q_FLOOR, n)
    geo = np.geomspace(Q_FLOOR, 0.01 * q_hi, 40)
    return np.unique(np.concatenate([lin, geo]))[::-1]


def _saddle_tail(A, f, x0, q0, target, x_max, dx):
    """Exponential approach ``q = target + (q0 - target) exp(-mu (x - x0))``."""
    mu = math.sqrt(-float(f.df(target)) / float(A.dA(target)))
    xs = np.arange(x0, x_max + 0.5 * dx, dx)
    q = target + (q0 - target) * np.exp(-mu * (xs - x0))
    p = -mu * (q - target) * A.dA(q)
    return xs, q, p, mu


def _toward_saddle(A, f, y0, target, dx, x_max):
    """x-stepping from ``y0`` toward the saddle equilibrium ``target``, switching
    to the linear exponential tail once ``|q - target|`` is small."""
    gap = abs(y0[0] - target)
    tol = TAIL_SWITCH * max(gap, 1e-3)
    ev = [_ev(lambda x, y: abs(y[0] - target) - tol, direction=-1)]
    sol = _solve(_x_rhs(A, f), (0.0, x_max), y0, ev)
    if sol.t_events[0].size == 0:
        raise IntegrationStall("orbit did not approach the saddle within x_max")
    x_sw = float(sol.t_events[0][0])
    xa, qa, pa = _sample_x(sol, 0.0, x_sw, dx)
    xt, qt, pt, mu = _saddle_tail(A, f, x_sw, float(sol.y_events[0][0][0]), target, x_max, dx)
    return (np.concatenate([xa, xt[1:]]), np.concatenate([qa, qt[1:]]),
            np.concatenate([pa, pt[1:]]), mu, x_sw)


def _mirror(x, q, p):
    """Even extension of a right half (``x >= 0``)."""
    return (np.concatenate([-x[::-1], x[1:]]), np.concatenate([q[::-1], q[1:]]),
            np.concatenate([-p[::-1], p[1:]]))


# ---------------------------------------------------------------------------
# builders


def build_profile(case_tag, target, A, f, x_max=None, dx=0.01):
    """Construct a stationary profile of the given class.

    ``target`` is the constant level (Constant), ignored (GroundState), the
    peak (CompactShort / CompactHigh), the minimum (Periodic), or for
    MonotoneHalf ``+1 / -1`` (increasing / decreasing toward ``s1``) and
    ``+2 / -2`` (toward 1).
    """
    if case_tag not in CASES:
        raise InvalidTarget(f"unknown case {case_tag!r}; expected one of {CASES}")
    if x_max is None:
        x_max = default_x_max(A, f)
    zeros = f.zeros
    s1 = zeros[1]
    multistable = f.kind == "quartic"

    if case_tag == "Constant":
        if not any(abs(target - z) < 1e-12 for z in zeros):
            raise InvalidTarget(f"{target} is not a zero of f", zeros=zeros)
        x = np.arange(-x_max, x_max + 0.5 * dx, dx)
        q = np.full_like(x, float(target))
        return StationaryProfile(case_tag, first_integral_constant(target, A, f), x, q,
                                 np.zeros_like(x), None, None, float(target))

    if case_tag == "CompactShort":
        if not 0.0 < target < s1:
            raise InvalidTarget(f"short peak must lie in (0, {s1})", target=target)
        return _compact(case_tag, target, A, f, dx, x_max)

    if not multistable:
        raise InvalidTarget(f"{case_tag} needs the multistable reaction")
    s2 = zeros[2]
    th = theta(A, f)

    if case_tag == "CompactHigh":
        if not th < target < 1.0:
            raise InvalidTarget(f"high peak must lie in ({th:.6g}, 1)", target=target)
        return _compact(case_tag, target, A, f, dx, x_max)

    if case_tag == "GroundState":
        C = first_integral_constant(th, A, f)
        x, q, p, mu, x_sw = _toward_saddle(A, f, [th, 0.0], s1, dx, x_max)
        x, q, p = _mirror(x, q, p)
        return StationaryProfile(case_tag, C, x, q, p, None, None, th,
                                 meta={"theta": th, "mu": mu, "x_switch": x_sw})

    if case_tag == "MonotoneHalf":
        return _monotone(target, A, f, dx, x_max)

    # Periodic
    if not s1 < target < s2:
        raise InvalidTarget(f"periodic minimum must lie in ({s1}, {s2})", target=target)
    C = first_integral_constant(target, A, f)
    ev = [_ev(lambda x, y: y[1], terminal=False, direction=-1),
          _ev(lambda x, y: y[1] if x > 0 else 1.0, direction=1)]
    sol = _solve(_x_rhs(A, f), (0.0, 1e4), [target, 0.0], ev)
    if sol.t_events[1].size == 0 or sol.t_events[0].size == 0:
        raise IntegrationStall("periodic orbit did not close")
    period = float(sol.t_events[1][0])
    qmax = float(sol.y_events[0][0][0])
    x, q, p = _sample_x(sol, 0.0, period, dx)
    return StationaryProfile(case_tag, C, x, q, p, None, None, qmax,
                             meta={"period": period, "min": float(target), "max": qmax})


def _compact(case_tag, q_peak, A, f, dx, x_max):
    C = first_integral_constant(q_peak, A, f)
    x, q, p = _descend_from_peak(A, f, q_peak, 0.0, dx, x_max)
    L = float(x[-1])
    x, q, p = _mirror(x, q, p)
    edge_slope = -math.sqrt(C)
    return StationaryProfile(case_tag, C, x, q, p, (-L, L), L, float(q_peak),
                             meta={"edge_slope": edge_slope, "edge_slope_integrated": float(p[-1])})


def _monotone(target, A, f, dx, x_max):
    if target not in (1, -1, 2, -2):
        raise InvalidTarget("MonotoneHalf target must be +-1 (to s1) or +-2 (to 1)")
    limit = f.zeros[1] if abs(target) == 1 else 1.0
    if abs(target) == 2 and f.kind != "quartic":
        raise InvalidTarget("the half-line solution toward 1 needs the multistable reaction")
    C = first_integral_constant(limit, A, f)
    # increasing branch from the free boundary at x = 0: q-stepping up to a
    # switch level, then x-stepping toward the saddle
    q_sw = 0.5 * limit
    p0 = math.sqrt(C - 2.0 * float(primitive_F(A, f, Q_FLOOR)))
    s_up = _solve(_q_rhs(A, f), (Q_FLOOR, q_sw), [0.0, p0])
    x_sw, p_sw = float(s_up.y[0, -1]), float(s_up.y[1, -1])
    qs = _q_grid(q_sw, x_span=x_sw, dx=dx)[::-1]
    xa, pa = s_up.sol(qs)
    xb, qb, pb, mu, _ = _toward_saddle(A, f, [q_sw, p_sw], limit, dx, x_max - x_sw)
    x = np.concatenate([xa, x_sw + xb[1:]])
    q = np.concatenate([qs, qb[1:]])
    p = np.concatenate([pa, pb[1:]])
    if target < 0:
        x, q, p = -x[::-1], q[::-1], -p[::-1]
    support = (0.0, float(x[-1])) if target > 0 else (float(x[0]), 0.0)
    return StationaryProfile("MonotoneHalf", C, x, q, p, support, None, float(limit),
                             meta={"limit": float(limit), "mu": mu, "sign": int(np.sign(target))})


def half_support_length(q1, A, f):
    """Half-width ``L = int_0^{q1} A'(q) / sqrt(C - 2F(q)) dq`` of a compact bump.

    The turning-point singularity is removed with ``q = q1 - s**2``.
    """
    q1 = float(q1)
    if q1 <= 0:
        raise InvalidTarget("peak must be positive")

    def integrand(s):
        if s == 0.0:
            return 2.0 * float(A.dA(q1)) / math.sqrt(2.0 * float(f.f(q1)) * float(A.dA(q1)))
        q = q1 - s * s
        drop = 2.0 * weighted_integral(A, f, q, q1)
        if drop <= 0:
            raise QuadratureFailure("first integral not positive below the peak", q=q)
        return 2.0 * s * float(A.dA(q)) / math.sqrt(drop)

    val, err = integrate.quad(integrand, 0.0, math.sqrt(q1), epsabs=1e-13, epsrel=1e-11, limit=200)
    if not np.isfinite(val) or err > 1e-7 * max(1.0, val):
        raise QuadratureFailure("half-support quadrature did not converge", error=err)
    return val
