"""Two fronts or one: level sets of a big-spreading run.

With c_s > c_z the solution forms a terrace whose upper step lags behind;
with c_s < c_z a single big front at c_b carries the whole solution.

    python3 demos/terrace.py
"""

from pathlib import Path

from degwave import asymptotics as A
from degwave import waves
from degwave.config import parse_config
from degwave.nonlinearity import PressureMaps

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def show(name):
    cfg = parse_config(CONFIGS / f"{name}.toml")
    D, f = cfg.diffusion(), cfg.reaction()
    s = waves.compute_all(PressureMaps(D, f))
    tr = cfg["terrace"]
    res = A.terrace_experiment(D, f, cfg.init_spec(), cfg.grid(), cfg["time"]["T"], s,
                               tr["s_star"], tr["s_upper"])
    print(f"\n{name}: regime {res.regime}")
    print("  " + ", ".join(f"{k} = {v:.5f}" for k, v in res.waves.items() if v is not None))
    for k in ("chi_star", "chi_upper", "d"):
        print(f"  slope of {k:9s} {res.fits[k].c_hat:.5f}")
    print("    t     chi_*    chi^      d")
    for t, a, b, d in res.track.rows()[::50]:
        print(f"  {t:5.1f} {a:8.3f} {b:8.3f} {d:8.3f}")
    print("  profile errors: " + ", ".join(f"{k} {v:.1e}" for k, v in res.profile_errors.items()))


def main():
    show("terrace_cs_gt_cz")
    show("big_spreading_cb")


if __name__ == "__main__":
    main()
