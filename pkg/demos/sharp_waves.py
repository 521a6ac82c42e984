"""Sharp waves of the default multistable pairing.

Computes the three characteristic speeds, checks the closed-form wave of the
logistic test case and shows how the small-wave speed moves with s2.

    python3 demos/sharp_waves.py
"""

import numpy as np

from degwave import oracle, waves
from degwave.nonlinearity import DiffusionSpec, PressureMaps, ReactionSpec


def main():
    A = DiffusionSpec.power(2.0)

    # closed form first: A = u^2, f = u(1 - u) travels at speed 1
    num = oracle.check_numeric()
    print(f"logistic oracle: c_s = {num['c_s']:.10f}, profile error {num['profile_sup_error']:.1e}")

    maps = PressureMaps(A, ReactionSpec.quartic())
    s = waves.compute_all(maps)
    print(f"\ndefault quartic: c_s = {s.c_s:.8f}  c_b = {s.c_b:.8f}  c_z = {s.c_z:.8f}")
    print(f"ordering {s.ordering}; Darcy defect of the small wave "
          f"{abs(s.small.darcy_slope - s.c_s):.1e}")

    # the small wave sits at u = 0.3 on the left and is exactly zero past its front
    for z in (-40.0, -5.0, -1.0, -0.1, 0.0, 1.0):
        print(f"  Q_cs({z:6.1f}) = {float(s.small.u_at(z)):.6f}")

    # psi where the R1 orbit meets the axis, increasing in c
    sp = np.linspace(s.c_s - 0.05, s.c_s + 0.05, 6)
    psi = waves.axis_intercepts(maps, sp)
    print("\n  c        psi^c")
    for c, p in zip(sp, psi):
        print(f"  {c:.4f}  {p:+.6f}")

    print("\nc_s against s2 (f on [0, s1] carries the factor u - s2):")
    for s2 in (0.5, 0.55, 0.6, 0.65):
        c_s, _ = waves.find_c_s(PressureMaps(A, ReactionSpec.quartic(8.0, 0.3, s2)))
        print(f"  s2 = {s2:.2f}: c_s = {c_s:.6f}")


if __name__ == "__main__":
    main()
