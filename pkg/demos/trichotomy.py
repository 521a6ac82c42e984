"""Small spreading, transition and big spreading of a cos^2 bump.

Classifies a handful of amplitudes, bisects for the threshold sigma* and
reports how close the near-critical run comes to the ground state.

    python3 demos/trichotomy.py
"""

from degwave import asymptotics as A
from degwave import solver, stationary
from degwave.nonlinearity import DiffusionSpec, ReactionSpec


def main():
    D, f = DiffusionSpec.power(2.0), ReactionSpec.quartic()
    ground = stationary.build_profile("GroundState", None, D, f)
    print(f"ground state peak theta = {ground.peak:.6f}")
    u0 = solver.InitialDataSpec("cos2", b=1.0, sigma=0.5)

    for r in A.sigma_sweep(D, f, u0, [0.5, 10.0, 80.0, 150.0, 1000.0], ground=ground):
        ev = r.evidence
        print(f"  sigma = {r.sigma:7.1f}: {r.verdict:15s} t = {r.T:5.1f}  "
              f"closest to ground state {ev['gs_min']:.3f}")

    res = A.find_sigma_star(D, f, u0, (50.0, 200.0), 1e-2, ground=ground)
    lo, hi = res.interval
    nc = res.near_critical
    print(f"\nsigma* in [{lo:.4f}, {hi:.4f}] (relative width {res.relative_width:.1e})")
    print(f"near-critical run sigma = {nc['sigma']:.4f} passes within {nc['gs_min']:.4f} "
          f"of the ground state at t = {nc['gs_min_t']:.1f}")


if __name__ == "__main__":
    main()
