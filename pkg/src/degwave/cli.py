"""``degwave`` command line.

Every subcommand reads one TOML config (``--config``, scalar keys may be
overridden with ``--set section.key=value``), writes its files into ``--out``
together with ``manifest.json`` and exits with 0 (ok), 2 (config error),
3 (numerical failure) or 4 (classification undecided).
"""

import argparse
import datetime
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, asymptotics, oracle, solver, stationary, waves
from .config import dumps_config, parse_config
from .errors import (AssumptionAError, AssumptionFError, ConfigError, DegwaveError,
                     NoBigSpreading, UndecidedAtBudget)
from .nonlinearity import PressureMaps, validate_diffusion, validate_reaction

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_UNDECIDED = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# output


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _csv_text(header, rows):
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(_fmt(v) for v in row))
    return "\n".join(out) + "\n"


def _fmt(v):
    if isinstance(v, str):
        return v
    v = float(v)
    return "nan" if not math.isfinite(v) else f"{v:.12g}"


def _gnuplot(csv_name, header):
    cols = " ,\\\n     ".join(f"'{csv_name}' using 1:{k} with lines title '{h}'"
                             for k, h in enumerate(header[1:], start=2))
    return (f"set datafile separator ','\nset key autotitle columnhead\n"
            f"set xlabel '{header[0]}'\nplot {cols}\npause -1\n")


def emit_outputs(results, output_dir, cfg=None, command="", plots=False):
    """Write ``results`` (name -> dict for JSON, ``(header, rows)`` for CSV).

    Returns the manifest, which lists every file with its SHA-256, the config
    hash and the tool version.  CSV and JSON payloads are deterministic; only
    the manifest carries a timestamp.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []

    def write(name, text):
        (out / name).write_text(text)
        files.append({"name": name, "bytes": len(text.encode()),
                      "sha256": hashlib.sha256(text.encode()).hexdigest()})

    for name in sorted(results):
        payload = results[name]
        if name.endswith(".csv"):
            header, rows = payload
            write(name, _csv_text(header, rows))
            if plots:
                write(name[:-4] + ".gp", _gnuplot(name, header))
        else:
            write(name, json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")
    if cfg is not None:
        write("resolved_config.toml", dumps_config(cfg))
    manifest = {
        "command": command,
        "version": __version__,
        "config_hash": cfg.digest() if cfg is not None else None,
        "resolved_config": cfg.resolved() if cfg is not None else None,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "files": files,
    }
    (out / "manifest.json").write_text(json.dumps(_clean(manifest), indent=2, sort_keys=True) + "\n")
    return manifest


def _wave_csv(profile):
    return (["zeta", "u", "v", "psi"],
            list(zip(profile.zeta, profile.u, profile.v, profile.psi)))


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(cfg, args):
    A, f = cfg.diffusion(), cfg.reaction()
    res = {"diffusion": validate_diffusion(A).to_dict()}
    if f.kind != "zero":
        res["reaction"] = validate_reaction(f, A).to_dict()
    return {"validation.json": res}, EXIT_OK


def cmd_stationary(cfg, args):
    A, f = cfg.diffusion(), cfg.reaction()
    s = cfg["stationary"]
    case = args.case or s["case"]
    target = s["target"] if args.target is None else args.target
    prof = stationary.build_profile(case, target, A, f, x_max=s["x_max"] or None, dx=s["dx"])
    summary = dict(prof.summary(), first_integral_error=prof.first_integral_error(A, f),
                   support=prof.support)
    return {"stationary.json": summary,
            "stationary.csv": (["x", "q", "p"], list(zip(prof.x, prof.q, prof.p)))}, EXIT_OK


def cmd_waves(cfg, args):
    maps = PressureMaps(cfg.diffusion(), cfg.reaction())
    w = cfg["waves"]
    which = args.which or w["which"]
    tol, delta0 = w["tol"], w["delta0"]
    res, info = {}, {"c_s": None, "c_z": None, "c_b": None}
    quartic = maps.reaction.kind == "quartic"
    if which in ("cs", "all", "types", "cb"):
        info["c_s"], small = waves.find_c_s(maps, tol=tol, delta0=delta0)
        info["darcy_defect_s"] = abs(small.darcy_slope - info["c_s"])
        res["wave_small.csv"] = _wave_csv(small)
    if quartic and which in ("cz", "all", "cb"):
        info["c_z"], front = waves.find_c_z(maps, tol=tol, delta0=delta0)
        res["wave_front.csv"] = _wave_csv(front)
    near = (info["c_z"] is not None and info["c_s"] is not None
            and abs(info["c_s"] - info["c_z"]) <= waves.CRITICAL_BAND)
    if quartic and which in ("cb", "all") and not near:
        got = waves.find_c_b(maps, info["c_s"], info["c_z"], tol=tol, delta0=delta0)
        if got is not None:
            info["c_b"], big = got
            info["darcy_defect_b"] = abs(big.darcy_slope - info["c_b"])
            res["wave_big.csv"] = _wave_csv(big)
    if info["c_z"] is not None and info["c_s"] is not None:
        info["ordering"] = waves.WaveSummary(info["c_s"], info["c_z"], info["c_b"],
                                             None, None, None).ordering
    else:
        info["ordering"] = None
    if which == "types":
        types = waves.classify_wave_types(maps, info["c_s"], type_one=small)
        info["types"] = [{"kind": p.kind, "left_limit": p.left_limit, "front": p.front,
                          **{k: v for k, v in p.meta.items() if np.isscalar(v)}} for p in types]
        for p in types:
            res[f"wave_{p.kind}.csv"] = _wave_csv(p)
    res["waves.json"] = info
    return res, EXIT_OK


def _simulate(cfg, snapshot_times=None, dx=None):
    t = cfg["time"]
    snaps = t["snapshot_times"] if snapshot_times is None else snapshot_times
    return solver.simulate(cfg.diffusion(), cfg.reaction(), cfg.init_spec(), cfg.grid(dx),
                           T=t["T"], dt_out=t["dt_out"], dt_safety=t["dt_safety"],
                           snapshot_times=snaps)


def cmd_simulate(cfg, args):
    st = _simulate(cfg)
    h = st.history_arrays()
    keys = ("t", "l", "r", "rp", "lp", "darcy_l", "darcy_r")
    fronts = (list(keys), list(zip(*(h[k] for k in keys))))
    rows = []
    for t in sorted(st.snapshots):
        x, u = asymptotics._full(st, *st.snapshots[t])
        v = st.diffusion.pressure(u)
        rows.extend((t, xi, ui, vi) for xi, ui, vi in zip(x, u, v))
    l, r = st.fronts()
    vmax, ratio = st.max_speed()
    summary = {"t": st.t, "l": l, "r": r, "steps": st.steps, "dt_last": st.dt,
               "mass": st.mass(), "initial_mass": st.initial_mass,
               "clamped_mass": st.clamped_mass, "u_max": float(st.u.max()),
               "waiting_time": list(solver.waiting_time(st)),
               "max_front_speed": vmax, "max_to_median_speed": ratio}
    return {"fronts.csv": fronts, "snapshots.csv": (["t", "x", "u", "v"], rows),
            "summary.json": summary}, EXIT_OK


def _classify_kw(cfg):
    c, t = cfg["classify"], cfg["time"]
    return {"T": c["T"], "dx": c["dx"], "dt_out": t["dt_out"], "tol_class": c["tol_class"],
            "W": c["W"] or None, "doublings": c["doublings"], "dt_safety": t["dt_safety"]}


def cmd_classify(cfg, args):
    A, f = cfg.diffusion(), cfg.reaction()
    kw = _classify_kw(cfg)
    c = cfg["classify"]
    if args.sigma_bracket is None:
        r = asymptotics.classify(A, f, cfg.init_spec(), **kw)
        out = {"verdict": r.verdict, "sigma_interval": None, "evidence": r.to_dict()}
        code = EXIT_UNDECIDED if r.verdict == "Undecided" else EXIT_OK
        return {"classification.json": out}, code
    lo, hi = (float(s) for s in args.sigma_bracket.split(","))
    try:
        res = asymptotics.find_sigma_star(A, f, cfg.init_spec(), (lo, hi), c["tol_sigma"],
                                          sigma_max=c["sigma_max"], **kw)
    except NoBigSpreading as exc:
        out = {"verdict": "SmallSpreading", "sigma_interval": [exc.details["sigma_small"], None],
               "evidence": {"one_sided": str(exc),
                            "path": [[s, v] for s, v in exc.details["path"]]}}
        return {"classification.json": out}, EXIT_OK
    out = {"verdict": "Transition", "sigma_interval": list(res.interval),
           "evidence": res.to_dict()}
    return {"classification.json": out}, EXIT_OK


def cmd_terrace(cfg, args):
    A, f = cfg.diffusion(), cfg.reaction()
    summary = waves.compute_all(PressureMaps(A, f), tol=cfg["waves"]["tol"])
    t, tr = cfg["time"], cfg["terrace"]
    res = asymptotics.terrace_experiment(A, f, cfg.init_spec(), cfg.grid(), t["T"], summary,
                                         tr["s_star"], tr["s_upper"], t["dt_out"],
                                         tr["transient"], t["dt_safety"])
    speeds = dict(res.speeds())
    speeds.update({f"fit_{k}": v.to_dict() for k, v in res.fits.items()})
    speeds["profile_errors"] = res.profile_errors
    return {"speeds.json": speeds,
            "terrace.csv": (["t", "chi_star", "chi_upper", "d"], res.track.rows())}, EXIT_OK


def cmd_envelopes(cfg, args):
    A, f = cfg.diffusion(), cfg.reaction()
    maps = PressureMaps(A, f)
    c_s, prof = waves.find_c_s(maps, tol=cfg["waves"]["tol"])
    t, e = cfg["time"], cfg["envelopes"]
    times = np.arange(0.0, t["T"] + 1e-9, e["snapshot_dt"])
    st = _simulate(cfg, snapshot_times=times)
    chk = asymptotics.verify_envelopes(st, prof, maps, eps=e["eps"] or None,
                                       tol=e["tol"] or None)
    return {"envelope_report.json": chk.to_dict()}, EXIT_OK


def cmd_oracle(cfg, args):
    return {"oracle.json": oracle.run_oracle()}, EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "stationary": cmd_stationary,
    "waves": cmd_waves,
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "terrace": cmd_terrace,
    "envelopes": cmd_envelopes,
    "oracle": cmd_oracle,
}


def build_parser():
    p = argparse.ArgumentParser(prog="degwave", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"degwave {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=name != "oracle")
        s.add_argument("--out", default=f"out_{name}")
        s.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
        s.add_argument("--plots", action="store_true", help="also write gnuplot scripts")
        if name == "stationary":
            s.add_argument("--case")
            s.add_argument("--target", type=float)
        if name == "waves":
            s.add_argument("--which", choices=("cs", "cz", "cb", "all", "types"))
        if name == "classify":
            s.add_argument("--sigma-bracket", metavar="A,B")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config is None:
            from .config import loads_config
            cfg = loads_config("", args.set)
        else:
            cfg = parse_config(args.config, args.set)
        results, code = COMMANDS[args.command](cfg, args)
        emit_outputs(results, args.out, cfg, args.command, args.plots)
    except (ConfigError, AssumptionAError, AssumptionFError) as exc:
        print(f"degwave: config error [{exc.assumption}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UndecidedAtBudget as exc:
        print(f"degwave: undecided [{exc.assumption}]: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED
    except DegwaveError as exc:
        print(f"degwave: numerical failure [{exc.assumption}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps({"command": args.command, "out": str(args.out), "exit": code}))
    return code


if __name__ == "__main__":
    sys.exit(main())
