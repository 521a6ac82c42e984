"""Experiment configuration files (TOML).

A config has the sections ``diffusion``, ``reaction``, ``grid``, ``time``,
``init`` plus optional per-command sections.  Every key has a default; unknown
sections or keys are rejected so that typos never silently fall back to a
default.  The resolved (fully defaulted) config is echoed into every output.
"""

import copy
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .errors import DomainError, ParseError, UnknownKey
from .nonlinearity import CUSTOM_DIFFUSIONS, DiffusionSpec, ReactionSpec
from .solver import SHAPES, Grid1D, InitialDataSpec

DEFAULTS = {
    "seed": 0,
    "diffusion": {"kind": "power", "m": 2.0, "name": ""},
    "reaction": {"kind": "quartic", "K": 8.0, "s1": 0.3, "s2": 0.55},
    "grid": {"dx": 0.01, "x_min": -40.0, "x_max": 40.0, "buffer": 20, "symmetric": True},
    "time": {"dt_safety": 0.4, "T": 40.0, "dt_out": 0.1, "snapshot_times": []},
    "init": {"shape": "cos2", "b": 1.0, "sigma": 0.5, "p": 2.0, "width": 0.25},
    "stationary": {"case": "GroundState", "target": 0.0, "dx": 0.01, "x_max": 0.0},
    "waves": {"which": "all", "delta0": 1e-8, "tol": 1e-8},
    "classify": {"sigma_lo": 50.0, "sigma_hi": 200.0, "tol_sigma": 1e-2, "tol_class": 0.02,
                 "W": 0.0, "dx": 0.02, "T": 40.0, "doublings": 4, "sigma_max": 1e4},
    "terrace": {"s_star": 0.15, "s_upper": 0.8, "transient": 0.3},
    "envelopes": {"snapshot_dt": 0.5, "eps": 0.0, "tol": 0.0},
}

_KINDS = {
    ("diffusion", "kind"): ("power", "custom"),
    ("diffusion", "name"): ("",) + tuple(CUSTOM_DIFFUSIONS),
    ("reaction", "kind"): ("quartic", "logistic", "zero"),
    ("init", "shape"): tuple(s for s in SHAPES if s != "array"),
    ("stationary", "case"): ("Constant", "GroundState", "CompactShort", "CompactHigh",
                             "MonotoneHalf", "Periodic"),
    ("waves", "which"): ("cs", "cz", "cb", "all", "types"),
}

_LOC = re.compile(r"line (\d+), column (\d+)")


@dataclass
class RunConfig:
    data: dict
    source: str = ""
    overrides: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seed(self):
        return int(self.data["seed"])

    def diffusion(self):
        d = self.data["diffusion"]
        return DiffusionSpec.power(d["m"]) if d["kind"] == "power" else DiffusionSpec.custom(d["name"])

    def reaction(self):
        r = self.data["reaction"]
        if r["kind"] == "quartic":
            return ReactionSpec.quartic(r["K"], r["s1"], r["s2"])
        if r["kind"] == "logistic":
            return ReactionSpec.logistic(r["K"])
        return ReactionSpec.zero()

    def grid(self, dx=None):
        g = self.data["grid"]
        return Grid1D(g["x_min"], g["x_max"], g["dx"] if dx is None else dx, g["buffer"],
                      g["symmetric"])

    def init_spec(self, sigma=None):
        i = self.data["init"]
        return InitialDataSpec(i["shape"], i["b"], i["sigma"] if sigma is None else sigma,
                               i["p"], i["width"])

    def resolved(self):
        return copy.deepcopy(self.data)

    def digest(self):
        blob = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _coerce(section, key, value, default):
    where = f"{section}.{key}" if section else key
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise DomainError(f"{where} must be a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise DomainError(f"{where} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DomainError(f"{where} must be a number")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise DomainError(f"{where} must be a list")
        return [float(v) for v in value]
    if not isinstance(value, str):
        raise DomainError(f"{where} must be a string")
    return value


def _merge(raw):
    data = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if key not in DEFAULTS:
            raise UnknownKey(f"unknown section or key {key!r}")
        if not isinstance(DEFAULTS[key], dict):
            data[key] = _coerce("", key, value, DEFAULTS[key])
            continue
        if not isinstance(value, dict):
            raise ParseError(f"{key!r} must be a table")
        for k, v in value.items():
            if k not in DEFAULTS[key]:
                raise UnknownKey(f"unknown key {key}.{k}")
            data[key][k] = _coerce(key, k, v, DEFAULTS[key][k])
    return data


def _check(data):
    for (sec, key), allowed in _KINDS.items():
        if data[sec][key] not in allowed:
            raise DomainError(f"{sec}.{key} = {data[sec][key]!r}; expected one of {allowed}")
    d, r, g, t, i = (data[k] for k in ("diffusion", "reaction", "grid", "time", "init"))
    if d["kind"] == "power" and not d["m"] > 1.0:
        raise DomainError("m must exceed 1 (degenerate diffusion)")
    if d["kind"] == "custom" and not d["name"]:
        raise DomainError("custom diffusion needs diffusion.name")
    if r["kind"] == "quartic" and not 0.0 < r["s1"] < r["s2"] < 1.0:
        raise DomainError("need 0 < s1 < s2 < 1")
    if r["K"] <= 0:
        raise DomainError("K must be positive")
    if g["dx"] <= 0 or g["x_max"] <= g["x_min"]:
        raise DomainError("grid needs dx > 0 and x_max > x_min")
    if not 0 < t["dt_safety"] <= 0.5:
        raise DomainError("time.dt_safety must lie in (0, 0.5]")
    if t["T"] < 0 or t["dt_out"] <= 0:
        raise DomainError("time.T must be >= 0 and time.dt_out > 0")
    if i["b"] <= 0 or i["sigma"] < 0:
        raise DomainError("init.b must be positive and init.sigma nonnegative")
    c = data["classify"]
    if not 0 < c["sigma_lo"] < c["sigma_hi"]:
        raise DomainError("classify needs 0 < sigma_lo < sigma_hi")
    return data


def _parse_value(text):
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_overrides(raw, overrides):
    """Apply ``section.key=value`` strings (values parsed as TOML scalars)."""
    for item in overrides:
        if "=" not in item:
            raise ParseError(f"override {item!r} is not of the form section.key=value")
        path, text = item.split("=", 1)
        parts = path.strip().split(".")
        if len(parts) == 1:
            raw[parts[0]] = _parse_value(text.strip())
        elif len(parts) == 2:
            raw.setdefault(parts[0], {})[parts[1]] = _parse_value(text.strip())
        else:
            raise ParseError(f"override key {path!r} is nested too deeply")
    return raw


def loads_config(text, overrides=(), source="<string>"):
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = _LOC.search(str(exc))
        loc = {"line": int(m.group(1)), "column": int(m.group(2))} if m else {}
        raise ParseError(f"{source}: {exc}", **loc) from exc
    raw = apply_overrides(raw, overrides)
    return RunConfig(_check(_merge(raw)), source, list(overrides))


def parse_config(path, overrides=()):
    """Read, default and validate a config file."""
    p = Path(path)
    if not p.is_file():
        raise ParseError(f"config file {path} not found")
    return loads_config(p.read_text(), overrides, str(p))


def dumps_config(cfg):
    """TOML text of a resolved config (round-trips through :func:`loads_config`)."""
    lines = [f"seed = {cfg.data['seed']}"]
    for sec, body in cfg.data.items():
        if not isinstance(body, dict):
            continue
        lines.append(f"\n[{sec}]")
        for k, v in body.items():
            lines.append(f"{k} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)
