"""Closed-form sharp wave for ``A(u) = u**2``, ``f(u) = u(1 - u)``.

The ansatz ``Q(z) = 1 - exp(lam z)`` for ``z < 0`` (and ``Q = 0`` for
``z >= 0``) turns the wave equation ``[A(Q)]'' + c Q' + f(Q) = 0`` into a
polynomial identity in ``exp(lam z)``; its coefficients force ``lam = 1/2``
and ``c = 1``.  The Darcy condition ``c = -[Lambda(Q)]'(0-)`` then holds with
``Lambda(u) = 2u``.
"""

import time

import numpy as np
import sympy as sp

from .nonlinearity import DiffusionSpec, PressureMaps, ReactionSpec
from . import waves


def ansatz_solution():
    """Solve the coefficient equations; returns ``(lam, c, residual_expr, z)``."""
    z, lam, c = sp.symbols("z lam c", real=True)
    E = sp.Symbol("E", positive=True)
    Q = 1 - sp.exp(lam * z)
    ode = sp.diff(Q**2, z, 2) + c * sp.diff(Q, z) + Q * (1 - Q)
    poly = sp.Poly(sp.expand(ode).subs(sp.exp(lam * z), E).subs(sp.exp(2 * lam * z), E**2), E)
    sols = sp.solve(poly.coeffs(), [lam, c], dict=True)
    sols = [s for s in sols if s[lam].is_positive]
    if len(sols) != 1:
        raise ArithmeticError(f"ansatz admits {len(sols)} decreasing solutions")
    s = sols[0]
    return s[lam], s[c], sp.simplify(ode.subs(s)), z


def exact_profile(z):
    z = np.asarray(z, float)
    return np.where(z < 0, 1.0 - np.exp(0.5 * np.minimum(z, 0.0)), 0.0)


def check_ansatz(n=2001, z_min=-40.0):
    """Symbolic coefficients plus a sampled residual of the wave ODE and the Darcy law."""
    lam, c, residual, z = ansatz_solution()
    Q = 1 - sp.exp(lam * z)
    ode = sp.diff(Q**2, z, 2) + c * sp.diff(Q, z) + Q * (1 - Q)
    f_ode = sp.lambdify(z, ode, "numpy")
    zs = np.linspace(z_min, 0.0, n)
    res = np.abs(np.broadcast_to(f_ode(zs), zs.shape))
    darcy = float(sp.limit(-sp.diff(2 * Q, z), z, 0, dir="-"))
    return {"lam": float(lam), "c": float(c), "symbolic_residual": str(residual),
            "ode_residual": float(res.max()), "darcy_speed": darcy,
            "darcy_defect": abs(darcy - float(c))}


def check_numeric(tol=waves.SPEED_TOL):
    """Shooting speed and profile error against the closed form."""
    t0 = time.perf_counter()
    maps = PressureMaps(DiffusionSpec.power(2.0), ReactionSpec.logistic())
    c_s, prof = waves.find_c_s(maps, tol=tol)
    err = float(np.max(np.abs(prof.u - exact_profile(prof.zeta))))
    return {"c_s": c_s, "speed_error": abs(c_s - 1.0), "profile_sup_error": err,
            "darcy_slope": prof.darcy_slope, "seconds": time.perf_counter() - t0}


def run_oracle():
    t0 = time.perf_counter()
    out = {"ansatz": check_ansatz(), "numeric": check_numeric()}
    out["seconds"] = time.perf_counter() - t0
    return out
