"""Waiting times of flat-edged data.

Data whose pressure vanishes faster than linearly at the edge of the support
hold their fronts fixed for a while; the flatter the edge, the longer.

    python3 demos/waiting_time.py
"""

from degwave import solver
from degwave.nonlinearity import DiffusionSpec, ReactionSpec


def main():
    D, f = DiffusionSpec.power(2.0), ReactionSpec.quartic()
    grid = solver.Grid1D(-5.0, 5.0, 0.005, symmetric=True)
    cases = [("tent", 2.0), ("power_edge", 1.0), ("power_edge", 2.0), ("cos2", 2.0),
             ("power_edge", 3.0), ("power_edge", 4.0)]
    print("  shape        p    t*")
    for shape, p in cases:
        st = solver.simulate(D, f, solver.InitialDataSpec(shape, b=1.0, sigma=0.5, p=p), grid,
                             T=0.5, dt_out=0.01)
        print(f"  {shape:11s} {p:3.0f}  {solver.waiting_time(st)[1]:.2f}")


if __name__ == "__main__":
    main()
