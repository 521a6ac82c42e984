"""Explicit monotone finite differences for ``u_t = [A(u)]_xx - beta u_x + f(u)``.

The update is conservative in ``u``:

    u_i += dt/dx**2 (A_{i+1} - 2 A_i + A_{i-1}) + dt f(u_i)

With ``dt <= 0.4 dx**2 / max A'`` and ``dt <= 0.1 / max|f'|`` every
coefficient is nonnegative, so the scheme is monotone: ordered data stay
ordered, ``u >= 0`` is preserved and the zeros of ``f`` are exact fixed
points.  The drift ``-beta u_x`` is solved exactly: the equation is
translation invariant, so the grid coordinates are shifted by ``beta dt``
after each step (no numerical diffusion, monotonicity untouched).  Only the active window (support plus one cell)
is updated.  Free boundaries are read off the pressure ``v = Lambda(u)``,
which is asymptotically linear at a moving front.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import (
    CflViolation,
    FrontTooThin,
    GridExhausted,
    NegativeUndershoot,
    UnsupportedInitialData,
)
from .nonlinearity import DiffusionSpec, ReactionSpec

# values below this are flushed to zero (the explicit precursor ahead of a
# front decays super-exponentially and would otherwise run into subnormals)
U_FLUSH = 1e-150
EDGE_LEVEL = 1e-5  # pressure level (relative to max v0) tracked for waiting times
ADAPT_CHUNK = 256
CLAMP_REL_TOL = 1e-6
SHAPES = ("cos2", "tent", "plateau", "power_edge", "constant", "array")


# ---------------------------------------------------------------------------
# numba kernel

_POWER, _U32_PLUS_U2, _U2_LOG1P = 0, 1, 2


@njit(cache=True)
def _A(u, code, m):
    if u <= 0.0:
        return 0.0
    if code == 0:
        if m == 2.0:
            return u * u
        if m == 3.0:
            return u * u * u
        return u**m
    if code == 1:
        return u * math.sqrt(u) + u * u
    return u * u * math.log1p(u)


@njit(cache=True)
def _react(roots, scale, u):
    # factored form: zeros of f are exact fixed points in floating point
    acc = scale * u
    for k in range(roots.size):
        acc *= u - roots[k]
    return acc


@njit(cache=True)
def _update(u, abuf, i, il, ir, lam, dt, roots, scale):
    ui = u[i]
    return ui + lam * (abuf[ir] - 2.0 * abuf[i] + abuf[il]) + dt * _react(roots, scale, ui)


@njit(cache=True)
def _advance(u, work, abuf, nsteps, dt, dx, lo, hi, code, m, roots, scale,
             open_left, open_right, guard):
    """Advance ``nsteps`` steps in place; stop early when the active window
    comes within ``guard`` cells of a closed grid end.

    Grid ends use mirror ghosts (zero flux).  Returns
    ``(steps_done, lo, hi, clamped_mass)``.  Every loop runs over a view
    starting at a literal index with the case dispatch hoisted out; otherwise
    LLVM does not vectorize (about 4x slower).
    """
    n = u.size
    lam = dt / (dx * dx)
    nr = roots.size
    r1 = roots[0] if nr > 0 else 0.0
    r2 = roots[1] if nr > 1 else 0.0
    r3 = roots[2] if nr > 2 else 0.0
    c = dt * scale
    sq = code == 0 and m == 2.0
    clamped = 0.0
    done = 0
    for _ in range(nsteps):
        if lo > hi:
            break
        if (not open_left and lo <= guard) or (not open_right and hi >= n - 1 - guard):
            break
        # window [a, b] is updated, its interior part [i0, i1] by the vector loop
        a = lo - 1 if lo > 0 else 0
        b = hi + 1 if hi < n - 1 else n - 1
        i0 = a + 1 if a == 0 else a
        i1 = b - 1 if b == n - 1 else b
        fa = a - 1 if a > 0 else 0
        fb = b + 1 if b < n - 1 else n - 1
        uf = u[fa:fb + 1]
        af = abuf[fa:fb + 1]
        if sq:
            for j in range(uf.size):
                af[j] = uf[j] * uf[j]
        else:
            for j in range(uf.size):
                af[j] = _A(uf[j], code, m)
        if a == 0:
            work[0] = _update(u, abuf, 0, 1, 1, lam, dt, roots, scale)
        if b == n - 1:
            work[n - 1] = _update(u, abuf, n - 1, n - 2, n - 2, lam, dt, roots, scale)
        uu = u[i0 - 1:i1 + 2]
        aa = abuf[i0 - 1:i1 + 2]
        ww = work[i0 - 1:i1 + 2]
        L = uu.size
        if nr == 3:
            for j in range(1, L - 1):
                x = uu[j]
                ww[j] = (x + lam * (aa[j + 1] - 2.0 * aa[j] + aa[j - 1])
                         + c * x * (x - r1) * (x - r2) * (x - r3))
        elif nr == 1:
            for j in range(1, L - 1):
                x = uu[j]
                ww[j] = x + lam * (aa[j + 1] - 2.0 * aa[j] + aa[j - 1]) + c * x * (x - r1)
        else:
            for j in range(1, L - 1):
                ww[j] = uu[j] + lam * (aa[j + 1] - 2.0 * aa[j] + aa[j - 1])
        ub = u[a:b + 1]
        wb = work[a:b + 1]
        for j in range(ub.size):
            w = wb[j]
            if w < U_FLUSH:
                if w < 0.0:
                    clamped -= w * dx
                w = 0.0
            ub[j] = w
        lo = a
        while lo <= b and u[lo] == 0.0:
            lo += 1
        hi = b
        while hi >= lo and u[hi] == 0.0:
            hi -= 1
        done += 1
    return done, lo, hi, clamped


# ---------------------------------------------------------------------------
# data types


@dataclass
class Grid1D:
    x_min: float = -40.0
    x_max: float = 40.0
    dx: float = 0.01
    buffer: int = 20
    symmetric: bool = False
    max_nodes: int = 4_000_000

    def nodes(self):
        lo = 0.0 if self.symmetric else self.x_min
        n = int(round((self.x_max - lo) / self.dx)) + 1
        return lo + self.dx * np.arange(n)


@dataclass
class InitialDataSpec:
    """Initial data ``u0``.

    cos2:       sigma cos(pi x / 2b)**2 on (-b, b)
    tent:       sigma (1 - |x|/b)_+
    plateau:    sigma on |x| <= b - width, linear ramps of the given width
    power_edge: sigma ((b**2 - x**2)_+)**p
    constant:   sigma everywhere (no free boundary)
    array:      tabulated ``(x_data, u_data)``, zero outside unless ``fill_left``
                / ``fill_right`` give the far-field values
    """

    shape: str = "cos2"
    b: float = 1.0
    sigma: float = 1.0
    p: float = 2.0
    width: float = 0.25
    center: float = 0.0
    x_data: np.ndarray | None = None
    u_data: np.ndarray | None = None
    fill_left: float = 0.0
    fill_right: float = 0.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise UnsupportedInitialData(f"unknown shape {self.shape!r}; expected {SHAPES}")

    @property
    def even(self):
        return self.shape != "array" and self.center == 0.0

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        y = x - self.center
        b, s = self.b, self.sigma
        inside = np.abs(y) < b
        if self.shape == "cos2":
            u = np.where(inside, s * np.cos(np.pi * y / (2 * b)) ** 2, 0.0)
        elif self.shape == "tent":
            u = s * np.clip(1.0 - np.abs(y) / b, 0.0, None)
        elif self.shape == "plateau":
            ramp = np.clip((b - np.abs(y)) / self.width, 0.0, 1.0)
            u = s * ramp
        elif self.shape == "power_edge":
            u = s * np.clip(b * b - y * y, 0.0, None) ** self.p
        elif self.shape == "constant":
            u = np.full_like(x, s)
        else:
            xd, ud = np.asarray(self.x_data, float), np.asarray(self.u_data, float)
            u = np.interp(y, xd, ud, left=self.fill_left, right=self.fill_right)
        return np.where(u > U_FLUSH, u, 0.0)


@dataclass
class FrontRecord:
    t: float
    l: float
    r: float
    rp: float = np.nan
    lp: float = np.nan
    darcy_l: float = np.nan
    darcy_r: float = np.nan
    vx_l: float = np.nan
    vx_r: float = np.nan
    edge_l: float = np.nan
    edge_r: float = np.nan
    moved_l: bool = False
    moved_r: bool = False


@dataclass
class SolutionState:
    """Evolving solution.  ``x``/``u`` cover the current (possibly extended)
    grid; in symmetric mode only ``x >= 0`` is stored and ``l = -r``."""

    x: np.ndarray
    u: np.ndarray
    t: float
    diffusion: DiffusionSpec
    reaction: ReactionSpec
    dx: float
    dt: float
    beta: float = 0.0
    symmetric: bool = False
    open_left: bool = False
    open_right: bool = False
    buffer: int = 20
    max_nodes: int = 4_000_000
    history: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    clamped_mass: float = 0.0
    initial_mass: float = 0.0
    steps: int = 0
    l0: float = np.nan
    r0: float = np.nan
    edge_level: float = 0.0
    edge0: tuple = (np.nan, np.nan)
    dt_safety: float = 0.4
    adaptive: bool = True

    @property
    def v(self):
        return self.diffusion.pressure(self.u)

    def full(self):
        """``(x, u)`` on the whole line (mirrored in symmetric mode)."""
        if not self.symmetric:
            return self.x, self.u
        return (np.concatenate([-self.x[:0:-1], self.x]),
                np.concatenate([self.u[:0:-1], self.u]))

    def fronts(self):
        r, _ = locate_front(self.x, self.v, self.dx, side="right")
        if self.symmetric:
            return -r, r
        l, _ = locate_front(self.x, self.v, self.dx, side="left")
        return l, r

    def mass(self):
        w = np.full(self.u.size, self.dx)
        if self.symmetric:
            w[0] *= 0.5
            w *= 2.0
        return float(np.sum(w * self.u))

    def history_arrays(self):
        keys = ("t", "l", "r", "rp", "lp", "darcy_l", "darcy_r", "vx_l", "vx_r")
        return {k: np.array([getattr(h, k) for h in self.history]) for k in keys}

    def max_speed(self):
        """Bounded-speed diagnostic: max |r'| and the ratio of max to median."""
        h = self.history_arrays()
        sp = np.abs(np.concatenate([h["rp"], h["lp"]]))
        sp = sp[np.isfinite(sp)]
        if sp.size == 0:
            return 0.0, 0.0
        med = np.median(sp)
        return float(sp.max()), float(sp.max() / med) if med > 0 else np.inf


# ---------------------------------------------------------------------------
# front location


def locate_front(x, v, dx, side="right", skip=6, span=8):
    """Sub-cell position of the free boundary and the one-sided slope of ``v`` there.

    The explicit scheme leaves a super-exponentially small precursor a few
    cells ahead of the front and an O(1)-in-cells kink in the last cells
    behind it.  So ``skip`` cells behind the numerical edge (last node with
    ``v > 1e-12 max v``) a quadratic is fitted by least squares to ``span``
    nodes; its zero beyond the fitted nodes is the front and its derivative
    there is ``v_x(r-0)``.  Returns ``(nan, nan)`` when there is no front (zero
    solution, or support touching the grid end).
    """
    v = np.asarray(v)
    vmax = float(v.max()) if v.size else 0.0
    if vmax <= 0.0:
        return np.nan, np.nan
    if side == "left":
        r, s = locate_front(-x[::-1], v[::-1], dx, "right", skip, span)
        return -r, -s
    pos = np.nonzero(v > 1e-12 * vmax)[0]
    edge = pos[-1]
    if edge >= v.size - 1:
        return np.nan, np.nan
    first = pos[0]
    i = edge - skip
    k = span
    if i - k < first:
        # thin support: use whatever is there
        i, k = edge, min(2, edge - first)
        if k < 2:
            return float(x[edge]), np.nan
    xs, vs = x[i - k:i + 1], v[i - k:i + 1]
    s = xs - xs[-1]
    c2, c1, c0 = np.polyfit(s, vs, 2)
    reach = (skip + 4) * dx
    root = None
    if abs(c2) > 1e-14:
        disc = c1 * c1 - 4 * c2 * c0
        if disc >= 0:
            cands = [(-c1 + sg * math.sqrt(disc)) / (2 * c2) for sg in (1.0, -1.0)]
            cands = [z for z in cands if 0.0 <= z <= reach]
            if cands:
                root = min(cands)
    if root is None:
        if c1 >= 0:
            return float(x[edge]), 0.0
        root = min(-c0 / c1, reach)
        return float(xs[-1] + root), float(c1)
    return float(xs[-1] + root), float(2 * c2 * root + c1)


def level_edges(st):
    """Outermost crossings of ``v = st.edge_level`` (``nan`` where absent).

    On flat edges (``v0 ~ (b - x)**p``, ``p >= 2``) the extrapolated front of
    :func:`locate_front` drifts while the true edge waits; a fixed small
    pressure level stays put until the release.
    """
    lev = st.edge_level
    if not lev > 0:
        return np.nan, np.nan
    x, u = st.full()
    v = st.diffusion.pressure(u)
    above = np.nonzero(v >= lev)[0]
    if above.size == 0:
        return np.nan, np.nan
    out = []
    for i, j in ((above[-1], above[-1] + 1), (above[0], above[0] - 1)):
        if j < 0 or j >= v.size:
            out.append(np.nan)
            continue
        w = (v[i] - lev) / (v[i] - v[j])
        out.append(float(x[i] + w * (x[j] - x[i])))
    return out[1], out[0]


# ---------------------------------------------------------------------------
# setup


def _kernel_params(diffusion, reaction):
    if diffusion.kind == "power":
        code, m = _POWER, float(diffusion.m)
    elif diffusion.name == "u32_plus_u2":
        code, m = _U32_PLUS_U2, 0.0
    else:
        code, m = _U2_LOG1P, 0.0
    if reaction.kind == "quartic":
        roots, scale = [reaction.s1, reaction.s2, 1.0], -reaction.K
    elif reaction.kind == "logistic":
        roots, scale = [1.0], -reaction.K
    else:
        roots, scale = [], 0.0
    return code, m, np.array(roots, dtype=float), float(scale)


def stable_dt(diffusion, reaction, dx, u_bound, dt_safety=0.4):
    """Largest step keeping every coefficient of the update nonnegative."""
    if dt_safety > 0.5:
        raise CflViolation(f"dt_safety={dt_safety} exceeds 0.5; the scheme is no longer monotone")
    us = np.linspace(0.0, u_bound * 1.02 + 1e-12, 2001)
    da = float(np.max(diffusion.dA(us[1:])))
    dfm = float(np.max(np.abs(reaction.df(us)))) if reaction.kind != "zero" else 0.0
    dt = dt_safety * dx * dx / da
    if dfm > 0:
        dt = min(dt, 0.1 / dfm)
    return dt


def max_principle_bound(reaction, sup_u0):
    """Upper bound of the solution: ``sup u0`` if ``f <= 0`` above it, else the
    next zero of ``f`` above ``sup u0`` (a constant supersolution)."""
    if reaction.kind == "zero" or sup_u0 <= 0:
        return sup_u0
    if float(reaction.f(sup_u0)) <= 0:
        return sup_u0
    return min(z for z in reaction.zeros if z >= sup_u0)


def init(u0_spec, grid, diffusion, reaction, dt_safety=0.4, beta=0.0, dt=None):
    """Initial state on ``grid``; checks ``u0 >= 0`` with a single positive interval."""
    symmetric = grid.symmetric and u0_spec.even and beta == 0.0
    g = Grid1D(grid.x_min, grid.x_max, grid.dx, grid.buffer, symmetric, grid.max_nodes)
    x = g.nodes()
    u = u0_spec.evaluate(x)
    if np.any(u < 0) or not np.all(np.isfinite(u)):
        raise UnsupportedInitialData("initial data must be finite and nonnegative")
    pos = np.nonzero(u > 0)[0]
    if pos.size and np.any(np.diff(pos) > 1):
        raise UnsupportedInitialData("support of the initial data is not a single interval")
    open_left = bool(u[0] > 0) and not symmetric
    open_right = bool(u[-1] > 0)
    u_bound = max_principle_bound(reaction, float(u.max()) if u.size else 0.0)
    adaptive = dt is None
    if dt is None:
        dt = stable_dt(diffusion, reaction, g.dx, u_bound, dt_safety)
    else:
        cap = stable_dt(diffusion, reaction, g.dx, u_bound, 0.5)
        if dt > cap:
            raise CflViolation(f"dt={dt} exceeds the monotonicity bound {cap}")
    st = SolutionState(x, u, 0.0, diffusion, reaction, g.dx, dt, beta, symmetric,
                       open_left, open_right, g.buffer, g.max_nodes,
                       dt_safety=dt_safety, adaptive=adaptive)
    st.initial_mass = st.mass()
    st.l0, st.r0 = st.fronts()
    st.edge_level = EDGE_LEVEL * float(st.v.max()) if st.u.size else 0.0
    st.edge0 = level_edges(st)
    _record(st, None)
    return st


def _extend(st):
    """Grow the grid by at least a quarter on each closed side that is near the window."""
    n = st.u.size
    pos = np.nonzero(st.u > 0)[0]
    lo, hi = (pos[0], pos[-1]) if pos.size else (n // 2, n // 2)
    pad = max(n // 4, 4 * st.buffer)
    add_l = pad if (not st.open_left and not st.symmetric and lo <= st.buffer) else 0
    add_r = pad if (not st.open_right and hi >= n - 1 - st.buffer) else 0
    if n + add_l + add_r > st.max_nodes:
        raise GridExhausted(f"grid would exceed {st.max_nodes} nodes at t={st.t:.4g}")
    x0 = st.x[0] - add_l * st.dx
    st.x = x0 + st.dx * np.arange(n + add_l + add_r)
    st.u = np.concatenate([np.zeros(add_l), st.u, np.zeros(add_r)])


def step(st, nsteps=1):
    """Advance ``nsteps`` explicit steps (extending the grid as needed)."""
    code, m, roots, scale = _kernel_params(st.diffusion, st.reaction)
    remaining = int(nsteps)
    while remaining > 0:
        n = st.u.size
        work = np.zeros(n)
        abuf = np.zeros(n)
        pos = np.nonzero(st.u > 0)[0]
        if pos.size == 0:
            st.t += remaining * st.dt
            st.steps += remaining
            return st
        guard = st.buffer
        done, _, _, clamped = _advance(
            st.u, work, abuf, remaining, st.dt, st.dx, pos[0], pos[-1], code, m, roots, scale,
            st.open_left or st.symmetric, st.open_right, guard)
        st.t += done * st.dt
        if st.beta != 0.0:
            st.x = st.x + st.beta * done * st.dt
        st.steps += done
        st.clamped_mass += clamped
        remaining -= done
        if st.clamped_mass > CLAMP_REL_TOL * max(st.initial_mass, 1e-300):
            raise NegativeUndershoot(
                f"clamped mass {st.clamped_mass:.3g} exceeds tolerance", t=st.t)
        if clamped > 0:
            warnings.warn(f"negative undershoot clamped (mass {clamped:.3g})", RuntimeWarning)
        if remaining > 0:
            _extend(st)
    return st


def _record(st, prev):
    l, r = st.fronts()
    rec = FrontRecord(st.t, l, r)
    v = st.v
    if np.isfinite(r):
        _, rec.vx_r = locate_front(st.x, v, st.dx, "right")
        if st.symmetric:
            rec.vx_l = -rec.vx_r
        else:
            _, rec.vx_l = locate_front(st.x, v, st.dx, "left")
    rec.edge_l, rec.edge_r = level_edges(st)
    rec.moved_l = bool(abs(rec.edge_l - st.edge0[0]) > 0.5 * st.dx)
    rec.moved_r = bool(abs(rec.edge_r - st.edge0[1]) > 0.5 * st.dx)
    st.history.append(rec)
    return rec


def _finish_history(st):
    """Front speeds by central differences and Darcy residuals ``|r' + v_x - beta|``."""
    h = st.history
    t = np.array([r.t for r in h])
    for key, sp, vx, res in (("r", "rp", "vx_r", "darcy_r"), ("l", "lp", "vx_l", "darcy_l")):
        pos = np.array([getattr(r, key) for r in h])
        if len(h) < 3:
            continue
        speed = np.gradient(pos, t)
        for rec, s in zip(h, speed):
            setattr(rec, sp, float(s))
            setattr(rec, res, float(abs(s + getattr(rec, vx) - st.beta)))


def _interval_dt(st, span):
    """Step for the next output interval: the stable step (recomputed from the
    current maximum when adaptive) shrunk so the interval is hit exactly."""
    if st.adaptive:
        ub = max_principle_bound(st.reaction, float(st.u.max()) if st.u.size else 0.0)
        cap = stable_dt(st.diffusion, st.reaction, st.dx, ub, st.dt_safety)
    else:
        cap = st.dt
    n = max(1, int(math.ceil(span / cap - 1e-12)))
    return span / n, n


def run(st, T, dt_out=0.1, snapshot_times=(), callbacks=()):
    """Integrate to time ``T`` recording fronts every ``dt_out``.

    The step is chosen per output interval (see ``_interval_dt``): the maximum
    of ``u`` can only decrease below the max-principle bound, so later
    intervals may use longer steps.  ``callbacks`` are called as ``cb(state)``
    after each output; returning ``True`` stops the run early.
    """
    snaps = sorted(float(s) for s in snapshot_times)
    if snaps and snaps[0] <= st.t + 1e-12:
        st.snapshots[round(st.t, 10)] = (st.x.copy(), st.u.copy())
        snaps = [s for s in snaps if s > st.t + 1e-12]
    while st.t < T - 1e-12:
        t_next = min((math.floor(st.t / dt_out + 1e-9) + 1) * dt_out, T)
        base = st.dt
        while True:
            dt_int, n = _interval_dt(st, t_next - st.t)
            if st.adaptive and n > ADAPT_CHUNK:
                # large bound early on: advance a chunk, then re-evaluate
                st.dt = (t_next - st.t) / n
                step(st, ADAPT_CHUNK)
                continue
            st.dt = dt_int
            step(st, n)
            break
        st.t = t_next
        if not st.adaptive:
            st.dt = base
        _record(st, None)
        while snaps and st.t >= snaps[0] - 1e-9:
            st.snapshots[round(snaps.pop(0), 10)] = (st.x.copy(), st.u.copy())
        stop = False
        for cb in callbacks:
            stop = bool(cb(st)) or stop
        if stop:
            break
    _finish_history(st)
    return st


def run_moving_frame(st, beta, T, **kw):
    """Continue ``st`` as a solution of ``u_t = [A(u)]_xx - beta u_x + f(u)``.

    This is the lab-frame solution seen in coordinates shifted by ``beta t``,
    so the fronts obey ``r' = -v_x(r-) + beta``; a wave of speed ``c`` is
    stationary for ``beta = -c``.
    """
    if st.symmetric and beta != 0:
        raise UnsupportedInitialData("a drift breaks the mirror symmetry; use a full grid")
    st.beta = float(beta)
    return run(st, T, **kw)


def waiting_time(st):
    """First output time at which each edge has moved more than ``dx/2``.

    The edge is the outermost crossing of the level ``EDGE_LEVEL * max v0``
    (see :func:`level_edges`).  ``0`` when motion starts within one output interval, ``inf`` when it never
    starts (including the zero solution).
    """
    out = []
    for key in ("moved_l", "moved_r"):
        t_star = np.inf
        for k, rec in enumerate(st.history):
            if getattr(rec, key):
                t_star = 0.0 if k <= 1 else st.history[k - 1].t
                break
        out.append(t_star)
    return tuple(out)


def darcy_residual(st, min_cells=4):
    """Current ``(res_left, res_right)`` from the last recorded speeds."""
    pos = np.nonzero(st.u > 0)[0]
    if pos.size < min_cells:
        raise FrontTooThin(f"support has {pos.size} cells (< {min_cells})")
    if len(st.history) < 3:
        raise FrontTooThin("need at least three recorded frames")
    _finish_history(st)
    rec = st.history[-1]
    return rec.darcy_l, rec.darcy_r


def simulate(diffusion, reaction, u0_spec, grid, T, dt_out=0.1, dt_safety=0.4, beta=0.0,
             snapshot_times=(), callbacks=()):
    """Convenience wrapper: ``init`` followed by ``run``."""
    st = init(u0_spec, grid, diffusion, reaction, dt_safety=dt_safety, beta=beta)
    return run(st, T, dt_out=dt_out, snapshot_times=snapshot_times, callbacks=callbacks)
