"""Long-time behaviour experiments.

Classification of compactly supported data by their omega-limit (``s1``,
``1`` or a shifted ground state), bisection for the threshold amplitude,
least-squares front fits, distances to sharp-wave profiles, level-set tracking
for terraces and a numerical verifier for the super/sub-solution envelopes of
the pressure built from the small sharp wave.
"""

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConstantsInfeasible,
    EnvelopeViolated,
    LevelNotPresent,
    NoBigSpreading,
    NotStabilized,
    RegionOutsideGrid,
    UndecidedAtBudget,
    WindowTooShort,
)
from .nonlinearity import PressureMaps
from . import solver, stationary, waves

VERDICTS = ("SmallSpreading", "BigSpreading", "Transition", "Undecided")
TAGS = ("s1", "one", "ground_state", "undecided")
_VERDICT_OF = dict(zip(TAGS, VERDICTS))

TOL_CLASS = 0.02
N_BAND = 10


# ---------------------------------------------------------------------------
# omega-limit detection


@dataclass
class ClassificationResult:
    verdict: str
    sigma: float
    omega_limit_tag: str
    evidence: dict = field(default_factory=dict)
    T: float = 0.0

    def to_dict(self):
        return {"verdict": self.verdict, "sigma": self.sigma,
                "omega_limit_tag": self.omega_limit_tag, "T": self.T,
                "evidence": {k: _plain(v) for k, v in self.evidence.items()}}


def _plain(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (list, tuple)):
        return [_plain(y) for y in x]
    return x


def ground_state_distance(x, u, ground, W, shift_range=0.0, n_shift=21):
    """``min_{|x0| <= shift_range} sup_{|x| <= W} |u(x) - U*(x - x0)|`` and the best shift."""
    sel = np.abs(x) <= W
    xs, us = x[sel], u[sel]
    shifts = np.linspace(-shift_range, shift_range, n_shift) if shift_range > 0 else np.zeros(1)
    best, best_x0 = np.inf, 0.0
    for x0 in shifts:
        d = float(np.max(np.abs(us - ground.q_at(xs - x0)))) if xs.size else np.inf
        if d < best:
            best, best_x0 = d, float(x0)
    return best, best_x0


def detect_omega_limit(frames, W, tol_class=TOL_CLASS, s1=None, ground=None, b=1.0):
    """Tag the limit of a final band of frames ``(t, x, u)``.

    Raises :class:`NotStabilized` when the band is shorter than ``N_BAND``
    frames or the windowed maximum still drifts by ``tol_class/10`` or more.
    """
    frames = list(frames)
    if len(frames) < N_BAND:
        raise NotStabilized(f"final band has {len(frames)} frames (< {N_BAND})")
    peaks = []
    for _, x, u in frames:
        sel = np.abs(x) <= W
        peaks.append(float(u[sel].max()) if np.any(sel) else 0.0)
    drift = float(np.ptp(peaks))
    if drift >= tol_class / 10:
        raise NotStabilized(f"windowed maximum drifts by {drift:.3g}", drift=drift)
    _, x, u = frames[-1]
    sel = np.abs(x) <= W
    d_s1 = float(np.max(np.abs(u[sel] - s1)))
    d_one = float(np.max(np.abs(u[sel] - 1.0)))
    evidence = {"dist_s1": d_s1, "dist_one": d_one, "drift": drift}
    if ground is not None:
        d_gs, x0 = ground_state_distance(x, u, ground, W, b)
        evidence.update(dist_ground_state=d_gs, shift=x0)
    else:
        d_gs = np.inf
    if d_s1 < tol_class:
        return "s1", evidence
    if d_one < tol_class:
        return "one", evidence
    if d_gs < tol_class:
        return "ground_state", evidence
    return "undecided", evidence


class _Classifier:
    """Run callback: keeps the final band and decides as soon as a limit is reached."""

    def __init__(self, reaction, W, tol_class, ground, b):
        self.s1, self.s2 = reaction.zeros[1], reaction.zeros[2]
        self.W, self.tol, self.ground, self.b = W, tol_class, ground, b
        self.band = deque(maxlen=N_BAND)
        self.umax_band = deque(maxlen=N_BAND)
        self.gs_min, self.gs_t = np.inf, np.nan
        self.umax_peak = 0.0
        self.tag, self.evidence = "undecided", {}

    def __call__(self, st):
        x, u = st.full()
        sel = np.abs(x) <= self.W
        self.band.append((st.t, x[sel].copy(), u[sel].copy()))
        umax = float(u.max()) if u.size else 0.0
        self.umax_band.append(umax)
        self.umax_peak = max(self.umax_peak, umax)
        if self.ground is not None:
            d, _ = ground_state_distance(x, u, self.ground, self.W, self.b)
            if d < self.gs_min:
                self.gs_min, self.gs_t = d, st.t
        if len(self.band) < N_BAND:
            return False
        try:
            tag, ev = detect_omega_limit(self.band, self.W, self.tol, self.s1, None, self.b)
        except NotStabilized:
            return False
        if tag == "s1" and max(self.umax_band) >= self.s2:
            return False
        if tag in ("s1", "one"):
            self.tag, self.evidence = tag, ev
            return True
        return False

    def final(self):
        """Tag at the end of the horizon when no early decision was taken."""
        try:
            tag, ev = detect_omega_limit(self.band, self.W, self.tol, self.s1, self.ground, self.b)
        except NotStabilized as exc:
            return "undecided", {"not_stabilized": str(exc)}
        if tag == "s1" and max(self.umax_band) >= self.s2:
            tag = "undecided"
        return tag, ev


def classify(diffusion, reaction, u0_spec, T=40.0, dx=0.02, dt_out=0.1, W=None,
             tol_class=TOL_CLASS, doublings=4, ground=None, x_half=40.0, dt_safety=0.4):
    """Simulate ``u0_spec`` and classify the omega-limit.

    The horizon ``T`` doubles (at most ``doublings`` times) while the verdict
    is undecided.  The evidence records the minimal distance to the ground
    state over the whole run (``gs_min``) and when it occurred.
    """
    W = 5.0 * u0_spec.b if W is None else W
    if ground is None and reaction.kind == "quartic":
        ground = stationary.build_profile("GroundState", None, diffusion, reaction)
    grid = solver.Grid1D(-x_half, x_half, dx, symmetric=u0_spec.even)
    st = solver.init(u0_spec, grid, diffusion, reaction, dt_safety=dt_safety)
    clf = _Classifier(reaction, W, tol_class, ground, u0_spec.b)
    horizon = T
    for k in range(doublings + 1):
        solver.run(st, horizon, dt_out=dt_out, callbacks=[clf])
        if clf.tag != "undecided":
            tag, ev = clf.tag, clf.evidence
            break
        tag, ev = clf.final()
        if tag != "undecided":
            break
        horizon *= 2.0
    ev = dict(ev, gs_min=clf.gs_min, gs_min_t=clf.gs_t, umax_peak=clf.umax_peak,
              u_max_final=float(st.u.max()), t_final=st.t)
    return ClassificationResult(_VERDICT_OF[tag], float(u0_spec.sigma), tag, ev, st.t)


def _classify_sigma(args):
    diffusion, reaction, u0_spec, sigma, kw = args
    return classify(diffusion, reaction, replace(u0_spec, sigma=sigma), **kw)


def sigma_sweep(diffusion, reaction, u0_spec, sigmas, workers=1, **kw):
    """Classify a list of amplitudes, optionally in a process pool."""
    jobs = [(diffusion, reaction, u0_spec, float(s), kw) for s in sigmas]
    if workers <= 1:
        return [_classify_sigma(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_classify_sigma, jobs))


def verdicts_monotone(results):
    """Along increasing sigma, no SmallSpreading follows a BigSpreading."""
    seen_big = False
    for r in sorted(results, key=lambda r: r.sigma):
        if r.verdict == "BigSpreading":
            seen_big = True
        elif r.verdict == "SmallSpreading" and seen_big:
            return False
    return True


@dataclass
class SigmaStarResult:
    interval: tuple
    lower: ClassificationResult
    upper: ClassificationResult
    path: list
    near_critical: dict

    @property
    def relative_width(self):
        lo, hi = self.interval
        return hi / lo - 1.0

    def to_dict(self):
        return {"sigma_interval": list(self.interval), "relative_width": self.relative_width,
                "lower": self.lower.to_dict(), "upper": self.upper.to_dict(),
                "path": [[s, v] for s, v in self.path], "near_critical": self.near_critical}


def find_sigma_star(diffusion, reaction, u0_spec, bracket=(0.1, 10.0), tol_sigma=1e-2,
                    sigma_max=1e4, max_expand=12, **kw):
    """Bisect the verdict in the amplitude until ``hi/lo - 1 < tol_sigma``.

    The bracket is expanded geometrically (factor 4) until its ends classify
    as SmallSpreading and BigSpreading.  If no big spreading occurs up to
    ``sigma_max`` a :class:`NoBigSpreading` carries the one-sided result.
    """
    lo, hi = map(float, bracket)
    path = []

    def judge(s):
        r = classify(diffusion, reaction, replace(u0_spec, sigma=s), **kw)
        path.append((s, r.verdict))
        if r.verdict in ("Undecided", "Transition"):
            raise UndecidedAtBudget(f"sigma={s:.6g} undecided at T={r.T:.4g}",
                                    sigma=s, evidence=r.evidence, path=path)
        return r

    r_lo, r_hi = judge(lo), None
    for _ in range(max_expand):
        if r_lo.verdict == "SmallSpreading":
            break
        hi, r_hi = lo, r_lo
        lo /= 4.0
        r_lo = judge(lo)
    if r_lo.verdict != "SmallSpreading":
        raise UndecidedAtBudget("no small-spreading amplitude found", path=path)
    if r_hi is None:
        r_hi = judge(hi)
    while r_hi.verdict != "BigSpreading":
        lo, r_lo = hi, r_hi
        hi *= 4.0
        if hi > sigma_max:
            raise NoBigSpreading(
                f"small spreading for every sigma <= {lo:.6g}; sigma* = inf not excluded",
                sigma_small=lo, path=path)
        r_hi = judge(hi)
    while hi / lo - 1.0 >= tol_sigma:
        mid = 0.5 * (lo + hi)
        r = judge(mid)
        if r.verdict == "BigSpreading":
            hi, r_hi = mid, r
        else:
            lo, r_lo = mid, r
    near = min((r_lo, r_hi), key=lambda r: r.evidence.get("gs_min", np.inf))
    near_critical = {"sigma": near.sigma, "gs_min": near.evidence.get("gs_min"),
                     "gs_min_t": near.evidence.get("gs_min_t"),
                     "umax_peak": near.evidence.get("umax_peak")}
    return SigmaStarResult((lo, hi), r_lo, r_hi, path, near_critical)


# ---------------------------------------------------------------------------
# front fits


@dataclass
class SpeedFit:
    c_hat: float
    shift_hat: float
    residual: float
    window: tuple
    drift: float
    t: np.ndarray = field(repr=False, default=None)
    r: np.ndarray = field(repr=False, default=None)

    def drift_against(self, c):
        """Max deviation of ``r(t) - c t`` from its mean over the window."""
        y = self.r - c * self.t
        return float(np.max(np.abs(y - y.mean())))

    def to_dict(self):
        return {"c_hat": self.c_hat, "shift_hat": self.shift_hat, "residual": self.residual,
                "window": list(self.window), "drift": self.drift}


def fit_front(history, window=None, side="right", transient=0.3, min_points=5):
    """Least-squares line through ``r(t)`` (or ``-l(t)`` for ``side='left'``).

    ``history`` is a :class:`SolutionState`, a list of front records or a
    dict of arrays.  The default window drops the first ``transient`` fraction
    of the run.
    """
    if isinstance(history, solver.SolutionState):
        history = history.history_arrays()
    elif not isinstance(history, dict):
        history = {"t": np.array([h.t for h in history]),
                   "r": np.array([h.r for h in history]),
                   "l": np.array([h.l for h in history])}
    t = np.asarray(history["t"], float)
    pos = np.asarray(history["r"] if side == "right" else -np.asarray(history["l"]), float)
    if window is None:
        window = (t[0] + transient * (t[-1] - t[0]), t[-1])
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12) & np.isfinite(pos)
    if sel.sum() < min_points:
        raise WindowTooShort(f"{sel.sum()} points in window {window}", window=window)
    ts, rs = t[sel], pos[sel]
    coef, res, *_ = np.polyfit(ts, rs, 1, full=True)
    c_hat, shift = float(coef[0]), float(coef[1])
    resid = float(np.sqrt(res[0] / ts.size)) if res.size else 0.0
    y = rs - c_hat * ts
    return SpeedFit(c_hat, shift, resid, tuple(map(float, window)),
                    float(np.max(np.abs(y - y.mean()))), ts, rs)


def region_start(case, t, c_s, delta=0.0, c=0.0, H0=0.0):
    """Left end ``H(t)`` of the comparison region (in the frame of ``r(t)``)."""
    if case == "i":
        return -c_s * t
    if case == "ii":
        return (delta - c_s) * t
    if case == "iii":
        return (c - c_s) * t
    if case == "latter":
        return -H0
    raise ValueError(f"unknown case {case!r}")


def profile_error(state, wave, anchor="right_front", region=(0.0, None)):
    """``sup |u(x + r(t), t) - Q(x)|`` over ``x`` in ``region`` (moving frame).

    With ``anchor='left_front'`` the mirrored comparison
    ``sup |u(x + l(t), t) - Q(-x)|`` over ``-x`` in ``region`` is used.
    """
    x, u = state.full()
    l, r = state.fronts()
    lo, hi = region
    if anchor == "right_front":
        xi = x - r
    elif anchor == "left_front":
        xi = -(x - l)
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    hi = np.inf if hi is None else hi
    if lo < xi.min() - 1e-12 or (np.isfinite(hi) and hi > xi.max() + 1e-12):
        raise RegionOutsideGrid(f"region {region} not covered by the grid at t={state.t:.4g}")
    sel = (xi >= lo) & (xi <= hi)
    return float(np.max(np.abs(u[sel] - wave.u_at(xi[sel] - 0.0))))


# ---------------------------------------------------------------------------
# level sets


def rightmost_crossing(x, u, level, x_from=-np.inf):
    """Rightmost ``x >= x_from`` with ``u = level`` (linear interpolation), or ``nan``."""
    idx = np.nonzero((u[:-1] >= level) & (u[1:] < level) & (x[1:] >= x_from))[0]
    if idx.size == 0:
        return np.nan
    i = idx[-1]
    w = (u[i] - level) / (u[i] - u[i + 1])
    return float(x[i] + w * (x[i + 1] - x[i]))


@dataclass
class LevelSetTrack:
    s_star: float
    s_upper: float
    t: np.ndarray
    chi_star: np.ndarray
    chi_upper: np.ndarray

    @property
    def d(self):
        return self.chi_star - self.chi_upper

    def fits(self, transient=0.3):
        """Late-window slopes of ``chi_star``, ``chi_upper`` and ``d``."""
        out = {}
        for name, y in (("chi_star", self.chi_star), ("chi_upper", self.chi_upper),
                        ("d", self.d)):
            f = fit_front({"t": self.t, "r": y, "l": -y}, transient=transient)
            out[name] = f
        return out

    def d_over_t(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.d / self.t

    def rows(self):
        return [(float(t), float(a), float(b), float(a - b))
                for t, a, b in zip(self.t, self.chi_star, self.chi_upper)]


class LevelTracker:
    """Run callback recording the rightmost ``s_star`` and ``s_upper`` crossings."""

    def __init__(self, s_star, s_upper, x_from=0.0):
        self.s_star, self.s_upper, self.x_from = s_star, s_upper, x_from
        self.t, self.a, self.b = [], [], []

    def __call__(self, st):
        x, u = st.full()
        self.t.append(st.t)
        self.a.append(rightmost_crossing(x, u, self.s_star, self.x_from))
        self.b.append(rightmost_crossing(x, u, self.s_upper, self.x_from))
        return False

    def track(self):
        return _make_track(self.s_star, self.s_upper, self.t, self.a, self.b)


def _make_track(s_star, s_upper, t, a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    if np.all(np.isnan(a)):
        raise LevelNotPresent(f"level {s_star} never present")
    if np.all(np.isnan(b)):
        raise LevelNotPresent(f"level {s_upper} never present")
    return LevelSetTrack(s_star, s_upper, np.asarray(t, float), a, b)


def track_levels(frames, s_star, s_upper, x_from=0.0):
    """Level-set positions over frames ``(t, x, u)``."""
    t, a, b = [], [], []
    for ti, x, u in frames:
        t.append(ti)
        a.append(rightmost_crossing(x, u, s_star, x_from))
        b.append(rightmost_crossing(x, u, s_upper, x_from))
    return _make_track(s_star, s_upper, t, a, b)


def regime(c_s, c_z, band=None):
    """``'cs_lt_cz'`` (single big front at ``c_b``), ``'cs_gt_cz'`` (terrace) or ``'critical'``."""
    band = waves.CRITICAL_BAND if band is None else band
    if abs(c_s - c_z) <= band:
        return "critical"
    return "cs_lt_cz" if c_s < c_z else "cs_gt_cz"


@dataclass
class TerraceResult:
    regime: str
    waves: dict
    fits: dict
    track: LevelSetTrack
    profile_errors: dict
    state: object = field(repr=False, default=None)

    def speeds(self):
        return {"c_hat_right": self.fits["right"].c_hat, "c_hat_left": self.fits["left"].c_hat,
                **self.waves, "regime": self.regime}


def _anchored_error(x, u, anchor, wave, lo, hi):
    xi = x - anchor
    sel = (xi >= lo) & (xi <= hi)
    return float(np.max(np.abs(u[sel] - wave.u_at(xi[sel]))))


def terrace_experiment(diffusion, reaction, u0_spec, grid, T, summary, s_star=0.15,
                       s_upper=0.8, dt_out=0.1, transient=0.3, dt_safety=0.4):
    """Big-spreading run with level-set tracking and the regime-appropriate fits.

    ``summary`` is a :class:`waves.WaveSummary`.  In the terrace regime the
    right front is compared with ``Q_{c_s}`` and the interior front (anchored
    at the level ``(1 + s1)/2``) with the bistable wave; otherwise the right
    front is compared with the big sharp wave.
    """
    s1 = reaction.zeros[1]
    reg = regime(summary.c_s, summary.c_z)
    tracker = LevelTracker(s_star, s_upper, 0.0)
    st = solver.init(u0_spec, grid, diffusion, reaction, dt_safety=dt_safety)
    solver.run(st, T, dt_out=dt_out, callbacks=[tracker])
    track = tracker.track()
    fits = {"right": fit_front(st, side="right", transient=transient),
            "left": fit_front(st, side="left", transient=transient)}
    fits.update({k: v for k, v in track.fits(transient).items()})
    x, u = st.full()
    _, r = st.fronts()
    errors = {}
    if reg == "cs_gt_cz" and summary.front is not None:
        mid = rightmost_crossing(x, u, 0.5 * (1.0 + s1), 0.0)
        gap = r - mid
        errors["small_front"] = _anchored_error(x, u, r, summary.small, -0.5 * gap, np.inf)
        errors["interior_front"] = _anchored_error(x, u, mid, summary.front, -0.5 * mid, 0.5 * gap)
    elif summary.big is not None:
        errors["big_front"] = _anchored_error(x, u, r, summary.big, -0.5 * r, np.inf)
    waves_d = {"c_s": summary.c_s, "c_z": summary.c_z, "c_b": summary.c_b}
    return TerraceResult(reg, waves_d, fits, track, errors, st)


# ---------------------------------------------------------------------------
# envelopes of the pressure


def _wave_pressure(wave, phi1):
    """``V(z)`` with ``V = 0`` for ``z >= 0`` and ``V -> phi1`` on the left."""
    z, v = wave.zeta, wave.v

    def V(x):
        x = np.asarray(x, float)
        out = np.interp(x, z, v, left=phi1, right=0.0)
        return np.where(x >= 0.0, 0.0, out)

    return V


def step_one_constants(maps, wave, alpha_up, alpha_low, eps=None, n=2001):
    """Sampled versions of the preliminary constants.

    ``z0, eps0`` describe the sharp-wave pressure, ``B1..B4`` bound ``B`` and
    ``B'`` on ``[0, (1 + alpha_up) phi1]``, ``delta_hat, H_delta`` the
    stability of ``phi1`` and ``H1, H2`` the two scaling defects of ``h``.
    """
    phi1 = maps.phi_hat[0]
    eps = 0.05 * phi1 if eps is None else eps
    z, v, psi = wave.zeta, wave.v, wave.psi
    left = z <= 0
    zl, vl, pl = z[left], v[left], psi[left]
    below = np.nonzero(vl < phi1 - eps)[0]
    z0 = float(-zl[below[0]]) if below.size else float(-zl[0])
    mid = zl >= -z0
    eps0 = float(np.min(-pl[mid]))
    top = (1.0 + alpha_up) * phi1
    r = np.linspace(0.0, top, n)
    rb = np.linspace(phi1 - eps, phi1, n)
    B = maps.B(r)
    dB = maps.dB(r)
    consts = {"phi1": phi1, "eps": eps, "z0": z0, "eps0": eps0,
              "B1": float(B.max()), "B2": float(maps.B(rb).min()),
              "B3": float(dB.max()), "B4": float(dB.min())}
    # stability window of phi1: h' < 0 on [phi1 - dh, phi1 + dh]
    phi2 = maps.phi_hat[1]
    span = np.linspace(0.0, min(phi1, phi2 - phi1), n)[1:]
    ok = np.array([maps.dh(phi1 - s) < 0 and maps.dh(phi1 + s) < 0 for s in span])
    last = np.argmin(ok) if not ok.all() else ok.size
    delta_hat = 0.5 * float(span[max(last - 1, 0)])
    rr = np.linspace(phi1 - delta_hat, phi1 + delta_hat, n)
    consts["delta_hat"] = delta_hat
    consts["H_delta"] = float(np.min(np.abs(maps.dh(rr))))
    consts["H1"] = _scaling_defect(maps, phi1, 1.0, 1.0 + alpha_up, +1)
    consts["H2"] = _scaling_defect(maps, phi1, 1.0 - alpha_low, 1.0, -1)
    return consts


def _scaling_defect(maps, phi1, a_lo, a_hi, sign, nr=300, na=120):
    """``sup sign*(h(a r) - a h(r) B(a r)/B(r)) / |a - 1|`` over the sampled box."""
    r = np.linspace(phi1 / nr, phi1, nr)[:, None]
    a = (np.linspace(a_lo, a_hi, na + 1)[1:] if sign > 0 else
         np.linspace(a_lo, a_hi, na + 1)[:-1])[None, :]
    hr, Br = maps.h(r), maps.B(r)
    ar = a * r
    g = sign * (maps.h(ar) - a * hr * maps.B(ar) / Br) / np.abs(a - 1.0)
    return float(max(np.max(g), 1e-12))


@dataclass
class EnvelopeCheck:
    c_s: float
    constants: dict
    inequalities: dict
    n_samples: int = 0
    n_violations: int = 0
    max_excess_upper: float = -np.inf
    max_excess_lower: float = -np.inf
    worst: dict = field(default_factory=dict)
    decay: dict = field(default_factory=dict)
    tol: float = 0.0

    @property
    def feasible(self):
        return all(ok for _, _, ok in self.inequalities.values())

    @property
    def ok(self):
        return self.feasible and self.n_violations == 0

    def alpha1(self, t):
        k = self.constants
        return 1.0 + k["alpha01"] * np.exp(-k["delta1"] * np.asarray(t, float))

    def X_upper(self, t):
        k = self.constants
        return self.c_s * k["A1"] * (1.0 - np.exp(-k["delta1"] * np.asarray(t, float))) + k["b01"]

    def alpha2(self, t):
        k = self.constants
        return 1.0 - k["alpha02"] * np.exp(-k["delta2"] * np.asarray(t, float))

    def X_lower(self, t):
        k = self.constants
        return self.c_s * k["A2"] * (1.0 - np.exp(-k["delta2"] * np.asarray(t, float))) - k["b02"]

    def to_dict(self):
        return {"c_s": self.c_s, "constants": self.constants,
                "inequalities": {k: {"lhs": a, "rhs": b, "ok": ok}
                                 for k, (a, b, ok) in self.inequalities.items()},
                "n_samples": self.n_samples, "n_violations": self.n_violations,
                "max_excess_upper": self.max_excess_upper,
                "max_excess_lower": self.max_excess_lower, "worst": self.worst,
                "decay": self.decay, "tol": self.tol, "ok": self.ok}


def middle_decay(times, values, s1, floor=1e-9, transient=0.3):
    """Log-linear fit of ``|u(r(t) + H(t), t) - s1|``: returns rate and prefactor."""
    t = np.asarray(times, float)
    g = np.abs(np.asarray(values, float) - s1)
    sel = (t >= t[0] + transient * (t[-1] - t[0])) & (g > floor)
    if sel.sum() < 3:
        return {"rate": np.inf, "M": 0.0, "n": int(sel.sum())}
    k, b = np.polyfit(t[sel], np.log(g[sel]), 1)
    return {"rate": float(-k), "M": float(math.exp(b)), "n": int(sel.sum())}


def verify_envelopes(state, wave, maps=None, v0=None, constants=None, tol=None,
                     eps=None, margin=1.05, raise_on_violation=False):
    """Check ``lower <= v <= upper`` on ``D = {x >= r(t) - c_s t}`` at every snapshot.

    ``state`` must hold snapshots (including ``t = 0`` unless ``v0`` is
    given as ``(x, v)``).  Constants not supplied are chosen by the recipe:
    ``b01 = b + z0`` and the smallest ``alpha01`` keeping ``v0`` under the
    upper envelope, ``b02 = b/2`` and the smallest ``alpha02`` keeping ``v0``
    above the lower one, ``delta1 = min(1, H_delta/2)``,
    ``delta2 = min(1, rate, H_delta/2)`` with ``rate`` the fitted middle decay,
    and ``A1, A2`` a factor ``margin`` above the smallest admissible values.
    """
    maps = PressureMaps(state.diffusion, state.reaction) if maps is None else maps
    c_s, phi1, s1 = wave.c, maps.phi_hat[0], state.reaction.zeros[1]
    V = _wave_pressure(wave, phi1)
    times = sorted(state.snapshots)
    if v0 is None:
        if not times or times[0] > 1e-12:
            raise ConstantsInfeasible("no t = 0 snapshot to fit the initial envelopes")
        x0s, u0s = _full(state, *state.snapshots[times[0]])
        v0 = (x0s, maps.Lambda(u0s))
    xv, vv = v0
    b = float(xv[vv > 0].max())
    tol = 2.0 * state.dx * c_s if tol is None else tol

    # middle estimate along x = r(t) - c_s t
    h = state.history_arrays()
    mid_t, mid_u = [], []
    for t in times:
        x, u = _full(state, *state.snapshots[t])
        r = float(np.interp(t, h["t"], h["r"]))
        mid_t.append(t)
        mid_u.append(float(np.interp(r - c_s * t, x, u)))
    decay = middle_decay(mid_t, mid_u, s1)

    k = dict(constants or {})
    pre = step_one_constants(maps, wave, k.get("alpha01", 1.0), k.get("alpha02", 0.5), eps)
    if "b01" not in k:
        k["b01"] = b + pre["z0"]
    if "alpha01" not in k:
        pos = xv >= 0
        Vs = V(xv[pos] - k["b01"])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(Vs > 0, vv[pos] / Vs, np.where(vv[pos] > 0, np.inf, 0.0))
        k["alpha01"] = max(margin * float(ratio.max()) - 1.0, 0.05)
    if "b02" not in k:
        k["b02"] = 0.5 * b
    if "alpha02" not in k:
        sel = (xv >= 0) & (xv < k["b02"])
        Vs = V(xv[sel] - k["b02"])
        ratio = vv[sel] / Vs
        k["alpha02"] = float(np.clip(1.0 - ratio.min() / margin, 0.05, 0.95))
    pre = step_one_constants(maps, wave, k["alpha01"], k["alpha02"], eps)
    k.update({key: val for key, val in pre.items() if key not in k})
    k.setdefault("delta1", min(1.0, pre["H_delta"] / 2.0))
    k.setdefault("delta2", min(1.0, decay["rate"], pre["H_delta"] / 2.0))
    B2, B3, B4, H1, H2, e0 = (pre[n] for n in ("B2", "B3", "B4", "H1", "H2", "eps0"))
    a1, d1, a2, d2 = k["alpha01"], k["delta1"], k["alpha02"], k["delta2"]
    if "A1" not in k:
        need = max(a1 * phi1 * B3 / (B2 * d1),
                   a1 / d1 * ((phi1 + H1) / (e0 * c_s) + B3 / B4))
        k["A1"] = margin * need
    if "A2" not in k:
        need = max(a2 * phi1 * B3 / (B2 * d2),
                   a2 / d2 * ((phi1 + H2) / (e0 * c_s * (1.0 - a2)) + B3 / B4))
        k["A2"] = margin * need
    A1, A2 = k["A1"], k["A2"]
    ineq = {
        "upper_1": (A1 * d1 / a1, phi1 * B3 / B2),
        "upper_2": (e0 * c_s * (A1 * d1 / a1 - B3 / B4), phi1 + H1),
        "lower_1": (A2 * d2 / a2, phi1 * B3 / B2),
        "lower_2": (e0 * c_s * (1.0 - a2) * (A2 * d2 / a2 - B3 / B4), phi1 + H2),
    }
    ineq = {n: (float(l), float(r), bool(l > r)) for n, (l, r) in ineq.items()}
    chk = EnvelopeCheck(c_s, {n: float(v) for n, v in k.items()}, ineq, decay=decay, tol=tol)
    if not chk.feasible:
        bad = [n for n, (_, _, ok) in ineq.items() if not ok]
        raise ConstantsInfeasible(f"inequalities {bad} fail", check=chk)

    for t in times:
        x, u = _full(state, *state.snapshots[t])
        r = float(np.interp(t, h["t"], h["r"]))
        sel = x >= r - c_s * t
        xs, vs = x[sel], maps.Lambda(u[sel])
        up = chk.alpha1(t) * V(xs - c_s * t - chk.X_upper(t))
        low = chk.alpha2(t) * V(xs - c_s * t + chk.X_lower(t))
        ex_up, ex_lo = vs - up, low - vs
        chk.n_samples += xs.size
        bad = (ex_up > tol) | (ex_lo > tol)
        chk.n_violations += int(bad.sum())
        for name, ex in (("upper", ex_up), ("lower", ex_lo)):
            if ex.size and ex.max() > getattr(chk, f"max_excess_{name}"):
                setattr(chk, f"max_excess_{name}", float(ex.max()))
                if ex.max() > tol:
                    i = int(np.argmax(ex))
                    chk.worst[name] = {"t": float(t), "x": float(xs[i]), "excess": float(ex[i])}
    if raise_on_violation and chk.n_violations:
        raise EnvelopeViolated(f"{chk.n_violations} samples outside the envelopes",
                               worst=chk.worst)
    return chk


def _full(state, x, u):
    if not state.symmetric:
        return x, u
    return np.concatenate([-x[:0:-1], x]), np.concatenate([u[:0:-1], u])
