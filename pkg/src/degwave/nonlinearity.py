"""Diffusion and reaction nonlinearities and the pressure calculus.

The diffusion ``A`` is degenerate at zero (``A(0) = A'(0) = 0``) and the
reaction ``f`` is monostable on ``[0, s1]`` and bistable on ``[s1, 1]``.
Everything downstream works with the pressure variable

    v = Lambda(u) = int_0^u A'(r) / r dr,

its inverse ``lambda`` and the coefficients ``B(v) = A'(lambda(v))`` and
``h(v) = f(lambda(v)) / lambda'(v)`` of the pressure equation
``v_t = B(v) v_xx + v_x**2 + h(v)``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, optimize

from .errors import (
    DivergentPressureIntegral,
    IntegralConditionFailed,
    InversionTolExceeded,
    NonDegenerate,
    NonMonotone,
    QuadratureFailure,
    SignPatternViolation,
    ThetaNotFound,
)

# below this pressure h is replaced by its linearization f'(0) A_* v
H_CROSSOVER = 1e-8
# split point of the pressure integral for tabulated (custom) diffusions
PRESSURE_EPS = 1e-6

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


# ---------------------------------------------------------------------------
# diffusion


def _u32_plus_u2(u, order):
    if order == 0:
        return u**1.5 + u**2
    if order == 1:
        return 1.5 * np.sqrt(u) + 2.0 * u
    with np.errstate(divide="ignore"):
        return 0.75 / np.sqrt(u) + 2.0


def _u2_log1p(u, order):
    lg = np.log1p(u)
    if order == 0:
        return u**2 * lg
    if order == 1:
        return 2.0 * u * lg + u**2 / (1.0 + u)
    return 2.0 * lg + 2.0 * u / (1.0 + u) + (2.0 * u + u**2) / (1.0 + u) ** 2


CUSTOM_DIFFUSIONS = {
    "u32_plus_u2": _u32_plus_u2,
    "u2_log1p": _u2_log1p,
}


@dataclass(frozen=True)
class DiffusionSpec:
    """Degenerate diffusion ``A``: either ``u**m`` or a named built-in."""

    kind: str = "power"
    m: float | None = 2.0
    name: str | None = None
    table_nodes: int = field(default=2048, compare=False)

    def __post_init__(self):
        if self.kind == "power":
            if self.m is None or not self.m > 1.0:
                raise NonDegenerate(f"power-law diffusion needs m > 1, got m={self.m}")
        elif self.kind == "custom":
            if self.name not in CUSTOM_DIFFUSIONS:
                raise ValueError(
                    f"unknown custom diffusion {self.name!r}; "
                    f"choose from {sorted(CUSTOM_DIFFUSIONS)}"
                )
        else:
            raise ValueError(f"unknown diffusion kind {self.kind!r}")

    @classmethod
    def power(cls, m):
        return cls(kind="power", m=float(m))

    @classmethod
    def custom(cls, name):
        return cls(kind="custom", m=None, name=name)

    @property
    def label(self):
        return f"u^{self.m:g}" if self.kind == "power" else self.name

    # evaluators ------------------------------------------------------------
    def A(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "power":
            return u**self.m
        return CUSTOM_DIFFUSIONS[self.name](u, 0)

    def dA(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "power":
            return self.m * u ** (self.m - 1.0)
        return CUSTOM_DIFFUSIONS[self.name](u, 1)

    def d2A(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "power":
            with np.errstate(divide="ignore"):
                return self.m * (self.m - 1.0) * u ** (self.m - 2.0)
        return CUSTOM_DIFFUSIONS[self.name](u, 2)

    # the limit A_* of r A''(r) / A'(r) ---------------------------------------
    @cached_property
    def a_star(self):
        if self.kind == "power":
            return self.m - 1.0
        return _aitken(self.ratio_table()[1])

    def ratio_table(self, kmin=2, kmax=8):
        """Return ``(r, r A''(r) / A'(r))`` on ``r = 10**-k``."""
        r = 10.0 ** -np.arange(kmin, kmax + 1, dtype=float)
        return r, r * self.d2A(r) / self.dA(r)

    # pressure ----------------------------------------------------------------
    @cached_property
    def _table(self):
        return _PressureTable(self, n=self.table_nodes)

    def pressure(self, u):
        """Lambda(u); closed form for power laws, tabulated quadrature otherwise."""
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("pressure is defined for u >= 0 only")
        if self.kind == "power":
            return self.m / (self.m - 1.0) * u ** (self.m - 1.0)
        return self._table.pressure(u)

    def pressure_quad(self, u):
        """Lambda(u) by adaptive quadrature, independent of the closed form."""
        return pressure_by_quadrature(self, u)

    def pressure_inverse(self, v, tol=1e-12):
        v = np.asarray(v, dtype=float)
        if np.any(v < 0):
            raise ValueError("pressure_inverse is defined for v >= 0 only")
        if self.kind == "power":
            return ((self.m - 1.0) / self.m * v) ** (1.0 / (self.m - 1.0))
        return self._table.inverse(v, tol)


def _aitken(seq):
    """Aitken delta-squared extrapolation of the last three terms."""
    s0, s1, s2 = seq[-3:]
    den = s2 - 2.0 * s1 + s0
    if abs(den) < 1e-14 * max(1.0, abs(s2)):
        return float(s2)
    return float(s2 - (s2 - s1) ** 2 / den)


def pressure_by_quadrature(spec, u, eps=PRESSURE_EPS):
    """Scalar-or-array ``int_0^u A'(r)/r dr`` by adaptive quadrature.

    ``[0, eps]`` is integrated after the substitution ``r = t**(1/A_*)`` which
    makes the integrand bounded at the origin; ``[eps, u]`` directly.
    """
    k = 1.0 / spec.a_star

    def head(b):
        tb = b**spec.a_star
        val, err = integrate.quad(
            lambda t: k * float(spec.dA(t**k)) / t, 0.0, tb, epsabs=1e-15, epsrel=1e-13
        )
        return val, err

    def one(x):
        if x == 0.0:
            return 0.0
        a = min(x, eps)
        val, err = head(a)
        if x > eps:
            v2, e2 = integrate.quad(
                lambda r: float(spec.dA(r)) / r, eps, x, epsabs=1e-15, epsrel=1e-13, limit=200
            )
            val, err = val + v2, err + e2
        if not np.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
            raise QuadratureFailure(f"pressure quadrature failed at u={x}", error=err)
        return val

    u = np.asarray(u, dtype=float)
    return np.vectorize(one, otypes=[float])(u) if u.ndim else np.float64(one(float(u)))


class _PressureTable:
    """Cumulative Lambda on a geometric u-grid; segments by Gauss-Legendre
    quadrature in the variable ``t = u**A_*`` (smooth down to u = 0)."""

    def __init__(self, spec, n=2048, u_hi=4.0, u_lo=1e-10):
        self.spec = spec
        self.n = n
        self.a = spec.a_star
        self.k = 1.0 / self.a
        self.u_lo = u_lo
        self._lock = threading.Lock()
        self._build(u_hi)

    def _build(self, u_hi):
        nodes = np.concatenate([[0.0], np.geomspace(self.u_lo, u_hi, self.n - 1)])
        seg = self._segment(nodes[:-1], nodes[1:])
        self.nodes = nodes
        self.cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.u_hi = u_hi

    def _segment(self, ua, ub):
        ta = np.asarray(ua) ** self.a
        tb = np.asarray(ub) ** self.a
        half = 0.5 * (tb - ta)
        t = (ta + half)[..., None] + half[..., None] * _GL_X
        vals = self.k * self.spec.dA(t**self.k) / t
        return half * (vals @ _GL_W)

    def _ensure(self, umax=None, vmax=None):
        with self._lock:
            while (umax is not None and umax > self.u_hi) or (
                vmax is not None and vmax > self.cum[-1]
            ):
                self._build(2.0 * self.u_hi)

    def pressure(self, u):
        if u.size and u.max() > self.u_hi:
            self._ensure(umax=float(u.max()))
        idx = np.clip(np.searchsorted(self.nodes, u, side="right") - 1, 0, self.n - 1)
        base = self.nodes[idx]
        out = self.cum[idx] + np.where(u > base, self._segment(base, np.maximum(u, base)), 0.0)
        return out

    def inverse(self, v, tol):
        if v.size and v.max() > self.cum[-1]:
            self._ensure(vmax=float(v.max()))
        idx = np.clip(np.searchsorted(self.cum, v, side="right") - 1, 0, self.n - 2)
        lo, hi = self.nodes[idx], self.nodes[idx + 1]
        # linear interpolation in t = u**A_* (Lambda is nearly linear in t)
        tlo, thi = lo**self.a, hi**self.a
        w = (v - self.cum[idx]) / (self.cum[idx + 1] - self.cum[idx])
        u = (tlo + w * (thi - tlo)) ** self.k
        for _ in range(4):
            safe = np.maximum(u, 1e-300)
            g = self.pressure(u) - v
            u = np.clip(u - g * safe / self.spec.dA(safe), lo, hi)
        res = np.abs(self.pressure(u) - v)
        if np.any(res > tol * (1.0 + v) + 1e-15):
            raise InversionTolExceeded("pressure inversion did not converge", residual=res.max())
        return np.where(v == 0.0, 0.0, u)


# ---------------------------------------------------------------------------
# reaction


@dataclass(frozen=True)
class ReactionSpec:
    """Reaction ``f``.

    ``quartic``:  K u (u - s1)(u - s2)(1 - u), the multistable reaction.
    ``logistic``: K u (1 - u), a monostable test reaction (``s1`` is 1).
    ``zero``:     f = 0, pure degenerate diffusion.
    """

    kind: str = "quartic"
    K: float = 8.0
    s1: float | None = 0.3
    s2: float | None = 0.55

    def __post_init__(self):
        if self.kind == "logistic":
            object.__setattr__(self, "s1", 1.0)
            object.__setattr__(self, "s2", None)
        elif self.kind == "zero":
            object.__setattr__(self, "s1", None)
            object.__setattr__(self, "s2", None)
        elif self.kind != "quartic":
            raise ValueError(f"unknown reaction kind {self.kind!r}")

    @classmethod
    def quartic(cls, K=8.0, s1=0.3, s2=0.55):
        return cls("quartic", float(K), float(s1), float(s2))

    @classmethod
    def logistic(cls, K=1.0):
        return cls("logistic", float(K))

    @classmethod
    def zero(cls):
        return cls("zero", 0.0)

    @property
    def monostable(self):
        return self.kind == "logistic"

    @property
    def zeros(self):
        if self.kind == "quartic":
            return (0.0, self.s1, self.s2, 1.0)
        if self.kind == "logistic":
            return (0.0, 1.0)
        return None

    @cached_property
    def poly(self):
        if self.kind == "quartic":
            return -self.K * Polynomial.fromroots([0.0, self.s1, self.s2, 1.0])
        if self.kind == "logistic":
            return -self.K * Polynomial.fromroots([0.0, 1.0])
        return Polynomial([0.0])

    def f(self, u):
        return self.poly(np.asarray(u, dtype=float))

    def df(self, u):
        return self.poly.deriv()(np.asarray(u, dtype=float))


def weighted_integral(A, f, a, b):
    """``int_a^b A'(r) f(r) dr`` by adaptive quadrature."""
    if a == b:
        return 0.0
    pts = [z for z in (f.zeros or ()) if min(a, b) < z < max(a, b)]
    val, err = integrate.quad(
        lambda r: float(A.dA(r) * f.f(r)), a, b, points=pts or None,
        epsabs=1e-15, epsrel=1e-13, limit=200,
    )
    if not np.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
        raise QuadratureFailure(f"quadrature of A'f on [{a}, {b}] failed", error=err)
    return val


def theta(A, f):
    """Root in (s2, 1) of ``int_{s1}^theta A' f = 0`` (peak of the ground state)."""
    if f.kind != "quartic":
        raise ThetaNotFound("theta exists for the multistable reaction only")

    def g(q):
        return weighted_integral(A, f, f.s1, q)

    lo, hi = f.s2, 1.0
    if not (g(lo) < 0.0 < g(hi)):
        raise ThetaNotFound("G(theta) does not change sign on (s2, 1)", g_lo=g(lo), g_hi=g(hi))
    return optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-14)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    subject: str
    checks: list = field(default_factory=list)
    values: dict = field(default_factory=dict)

    def add(self, name, passed, measured=None):
        self.checks.append((name, bool(passed), measured))

    @property
    def ok(self):
        return all(p for _, p, _ in self.checks)

    def failed(self):
        return [name for name, p, _ in self.checks if not p]

    def to_dict(self):
        return {
            "subject": self.subject,
            "ok": self.ok,
            "checks": [
                {"name": n, "passed": p, "measured": _jsonable(m)} for n, p, m in self.checks
            ],
            "values": {k: _jsonable(v) for k, v in self.values.items()},
        }


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return x


def _sample_grid(u_max, n=200):
    return np.concatenate([np.geomspace(1e-8 * u_max, u_max, n), [u_max]])


def validate_diffusion(spec, tol=1e-8, u_max=2.0):
    """Check membership of ``A`` in the admissible class on a sample grid."""
    rep = ValidationReport(f"diffusion {spec.label}")
    u = _sample_grid(u_max)
    a0 = float(spec.A(0.0))
    da0 = float(spec.dA(0.0))
    rep.add("A(0) = 0", abs(a0) <= tol, a0)
    rep.add("A'(0) = 0", abs(da0) <= tol, da0)
    mins = {name: float(np.min(fn(u))) for name, fn in
            (("A", spec.A), ("A'", spec.dA), ("A''", spec.d2A))}
    for name, mn in mins.items():
        rep.add(f"{name} > 0 on samples", mn > 0.0, mn)

    # convergence of int_delta^1 A'(r)/r dr as delta -> 0
    deltas = 10.0 ** -np.arange(4, 11, dtype=float)
    partial = np.array([
        integrate.quad(lambda r: float(spec.dA(r)) / r, d, 1.0, epsrel=1e-12, limit=200)[0]
        for d in deltas
    ])
    tail = float(np.abs(np.diff(partial))[-1])
    converged = bool(np.all(np.isfinite(partial)) and tail < 1e-3 * max(1.0, partial[-1]))
    rep.add("int_0^1 A'(r)/r dr finite", converged, tail)

    r, ratio = spec.ratio_table()
    steps = np.abs(np.diff(ratio))
    stable = bool(np.all(np.isfinite(ratio)) and steps[-1] < 1e-2 and steps[-1] <= steps[0] + 1e-15)
    a_star = spec.a_star
    rep.add("r A''/A' stabilizes", stable, ratio.tolist())
    rep.add("A_* > 0", a_star > 0.0, a_star)
    rep.values["a_star"] = a_star

    if abs(da0) > tol:
        raise NonDegenerate(f"A'(0) = {da0} exceeds {tol}", report=rep)
    if abs(a0) > tol or min(mins.values()) <= 0.0:
        raise NonMonotone(f"A, A', A'' must be positive for u > 0: minima {mins}", report=rep)
    if not converged:
        raise DivergentPressureIntegral("int_0^1 A'(r)/r dr does not converge", report=rep)
    if not (stable and a_star > 0):
        raise NonDegenerate(f"r A''/A' does not settle to a positive limit: {ratio}", report=rep)
    return rep


def validate_reaction(f, A, tol=1e-8):
    """Check the sign structure of ``f`` and the weighted integral condition.

    For the monostable test reaction only the monostable part is checked and
    no theta is computed.
    """
    rep = ValidationReport(f"reaction {f.kind}")
    if f.kind == "zero":
        raise SignPatternViolation("f = 0 is not a multistable reaction", report=rep)
    zeros = f.zeros
    ordered = all(a < b for a, b in zip(zeros, zeros[1:]))
    rep.add("0 < s1 < s2 < 1", ordered, list(zeros))
    if not ordered:
        raise SignPatternViolation(f"zeros not ordered: {zeros}", report=rep)

    fz = np.abs(f.f(np.array(zeros)))
    rep.add("f vanishes at its zeros", bool(np.all(fz <= tol)), fz.max())
    d = f.df(np.array(zeros))
    if f.monostable:
        deriv_ok = d[0] > 0 > d[1]
        lobes = [(0.0, 1.0, +1), (1.0, 2.0, -1)]
    else:
        deriv_ok = d[0] > 0 > d[1] and d[3] < 0
        lobes = [(0.0, f.s1, +1), (f.s1, f.s2, -1), (f.s2, 1.0, +1), (1.0, 2.0, -1)]
    rep.add("f'(0) > 0 > f'(s1), f'(1) < 0", deriv_ok, d.tolist())
    sign_ok = True
    for a, b, sgn in lobes:
        s = np.linspace(a, b, 202)[1:-1]
        sign_ok &= bool(np.all(sgn * f.f(s) > 0))
    rep.add("sign pattern + - + -", sign_ok)
    if not (deriv_ok and sign_ok and np.all(fz <= tol)):
        raise SignPatternViolation("reaction sign structure violated", report=rep)
    if f.monostable:
        return rep

    integral = weighted_integral(A, f, f.s1, 1.0)
    rep.add("int_{s1}^1 A' f > 0", integral > 0, integral)
    rep.values["bistable_integral"] = integral
    c_star = 2.0 * weighted_integral(A, f, 0.0, f.s1)
    c_2star = 2.0 * weighted_integral(A, f, 0.0, 1.0)
    rep.values["C_star"] = c_star
    rep.values["C_2star"] = c_2star
    rep.add("C** > C*", c_2star > c_star, c_2star - c_star)
    if integral <= 0:
        raise IntegralConditionFailed(
            f"int_s1^1 A'(s) f(s) ds = {integral:.6g} <= 0", report=rep
        )
    th = theta(A, f)
    rep.add("theta in (s2, 1)", f.s2 < th < 1.0, th)
    rep.values["theta"] = th
    return rep


# ---------------------------------------------------------------------------
# pressure maps


class PressureMaps:
    """Pairing of a diffusion and a reaction in pressure variables.

    Provides ``lam`` (inverse pressure), ``B``, ``h`` and their derivatives,
    the singular abscissae ``phi_hat = Lambda(zeros of f)`` and the limits
    ``B'(0+) = A_*``, ``h'(0+) = f'(0) A_*``.
    """

    def __init__(self, diffusion, reaction, h_crossover=H_CROSSOVER):
        self.diffusion = diffusion
        self.reaction = reaction
        self.h_crossover = h_crossover
        self.a_star = diffusion.a_star
        self.a0 = float(reaction.df(0.0))
        zeros = reaction.zeros or ()
        self.phi_hat = tuple(float(diffusion.pressure(z)) for z in zeros[1:])

    def __repr__(self):
        return f"PressureMaps({self.diffusion.label}, {self.reaction})"

    @property
    def b_slope0(self):
        return self.a_star

    @property
    def h_slope0(self):
        return self.a0 * self.a_star

    def Lambda(self, u):
        return self.diffusion.pressure(u)

    def lam(self, v):
        return self.diffusion.pressure_inverse(np.maximum(np.asarray(v, dtype=float), 0.0))

    def B(self, v):
        return self.diffusion.dA(self.lam(v))

    def dB(self, v):
        v = np.asarray(v, dtype=float)
        u = self.lam(v)
        safe = np.maximum(u, 1e-300)
        out = safe * self.diffusion.d2A(safe) / self.diffusion.dA(safe)
        return np.where(v > 0, out, self.a_star)

    def h(self, v):
        v = np.asarray(v, dtype=float)
        u = self.lam(v)
        safe = np.maximum(u, 1e-300)
        direct = self.reaction.f(safe) * self.diffusion.dA(safe) / safe
        return np.where(v < self.h_crossover, self.h_slope0 * v, direct)

    def dh(self, v):
        v = np.asarray(v, dtype=float)
        u = self.lam(v)
        safe = np.maximum(u, 1e-300)
        A, f = self.diffusion, self.reaction
        fu = f.f(safe) / safe
        out = f.df(safe) - fu + fu * safe * A.d2A(safe) / A.dA(safe)
        return np.where(v < self.h_crossover, self.h_slope0, out)


def b_of_v(v, maps):
    return maps.B(v)


def h_of_v(v, maps):
    return maps.h(v)


def pressure(u, A):
    return A.pressure(u)


def pressure_inverse(v, A):
    return A.pressure_inverse(v)


def limiting_slope(fn, kmin=3, kmax=7):
    """Slope at 0+ of ``fn`` with ``fn(0) = 0``: secants on ``10**-k``,
    Aitken-extrapolated.  Secant steps stay above ``H_CROSSOVER``."""
    d = 10.0 ** -np.arange(kmin, kmax + 1, dtype=float)
    sec = np.asarray(fn(d), dtype=float) / d
    return _aitken(sec)
