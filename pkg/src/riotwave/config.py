"""YAML experiment configuration: parsing, defaults, validation, serialization.

A config is kept as a normalized nested dict (every default filled in), so
equality and round-tripping are plain dict operations; typed objects are
built on demand by the accessor methods.
"""
from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass

import numpy as np
import yaml

from . import equilibria as eq
from .errors import CFLError, ConfigError, InvalidParameterError
from .hetero import GapEnv, PeriodicEnv
from .model import PARAM_KEYS, Params
from .pde import Boundary, EnvironmentProfile, Grid1D, KernelSpec, ShockEvent

EXPERIMENTS = ("Simulate", "SteadyStates", "Bifurcate", "WaveSpeed", "SpeedVsDecay",
               "Extinction", "Eigen", "GapScan", "Pulsating")

DEFAULT_DX = 0.05

# section name -> default values; None marks "no default, optional"
SECTION_DEFAULTS = {
    "grid": {"length": 20.0, "dx": DEFAULT_DX, "n": None, "x0": 0.0, "boundary": "NoFlux"},
    "environment": {"kind": "Uniform", "alpha": None, "period": None, "patches": None,
                    "repetitions": 1, "s1": None, "s2": None, "s3": None,
                    "alpha1": None, "alpha2": None},
    "kernel": {"kind": "none", "param": 1.0, "normalize": True},
    "initial": {"kind": "Zero", "x_step": None, "height": None, "k": None,
                "amplitude": 5.0, "path": None, "value": None},
    "schedule": {"t_end": 10.0, "snapshot_times": None, "snapshot_dt": None, "dt": None},
    "bifurcation": {"rho": [0.2, 20.0, 60], "beta": [0.1, 40.0, 60], "beta_scale": "log"},
    "wave": {"tol": 5e-3, "margin": 10.0, "snapshot_dt": 0.25, "k_list": [1.0, 3.0],
             "alpha_sweep": None},
    "gap": {"widths": None, "width_range": None, "t_end": 80.0},
    "pulsating": {"snapshot_dt": 0.1},
}
TOP_KEYS = {"experiment", "params", "seed", "shocks", *SECTION_DEFAULTS}
ENV_KINDS = ("Uniform", "Periodic", "Gap")
INITIAL_KINDS = ("Zero", "Uniform", "Step", "ExpDecay", "FromFile")
KERNEL_KINDS = ("none", "gaussian", "tophat")


def _fail(msg):
    raise ConfigError(msg)


def _as_float(section, key, val):
    try:
        return float(val)
    except (TypeError, ValueError):
        _fail(f"{section}.{key}: expected a number, got {val!r}")


def _merge(section, given):
    defaults = SECTION_DEFAULTS[section]
    if given is None:
        given = {}
    if not isinstance(given, dict):
        _fail(f"{section}: expected a mapping")
    unknown = set(given) - set(defaults)
    if unknown:
        _fail(f"{section}: unknown key {sorted(unknown)[0]!r}")
    out = copy.deepcopy(defaults)
    out.update(given)
    return out


def _num_or_none(section, d, keys):
    for k in keys:
        if d.get(k) is not None:
            d[k] = _as_float(section, k, d[k])


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    data: dict

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.data == other.data

    # --- typed views -------------------------------------------------------------
    @property
    def experiment(self):
        return self.data["experiment"]

    @property
    def seed(self):
        return self.data["seed"]

    def params(self):
        return Params.from_dict(self.data["params"])

    def grid(self):
        gd = self.data["grid"]
        env = self.data["environment"]
        if env["kind"] == "Periodic" and gd["boundary"] == "Periodic":
            length = env["period"] * env["repetitions"]
        elif env["kind"] == "Gap":
            length = env["s3"][1] - env["s1"][0]
        else:
            length = gd["length"]
        x0 = env["s1"][0] if env["kind"] == "Gap" else gd["x0"]
        return Grid1D.from_length(length, dx=gd["dx"], n=gd["n"], x0=x0,
                                  boundary=Boundary(gd["boundary"]))

    def environment(self):
        env = self.data["environment"]
        if env["kind"] == "Uniform":
            return None
        if env["kind"] == "Periodic":
            return PeriodicEnv(env["period"], tuple(tuple(p) for p in env["patches"]),
                               env["repetitions"])
        return GapEnv(tuple(env["s1"]), tuple(env["s2"]), tuple(env["s3"]),
                      env["alpha1"], env["alpha2"])

    def alpha_field(self, g):
        env = self.environment()
        if env is None:
            return None
        if isinstance(env, PeriodicEnv):
            return env.alpha_on(g) if g.periodic else env.profile(g.x0).alpha_on(g)
        return env.profile().alpha_on(g)

    def kernel(self):
        k = self.data["kernel"]
        return None if k["kind"] == "none" else KernelSpec(k["kind"], k["param"], k["normalize"])

    def shocks(self):
        return [ShockEvent(s["t"], s["x"], s.get("A")) for s in self.data["shocks"]]

    def snapshot_times(self):
        sc = self.data["schedule"]
        if sc["snapshot_times"] is not None:
            return list(sc["snapshot_times"])
        if sc["snapshot_dt"] is not None:
            n = int(round(sc["t_end"] / sc["snapshot_dt"]))
            return [round(i * sc["snapshot_dt"], 12) for i in range(n + 1)]
        return [0.0, sc["t_end"]]

    # --- serialization ---------------------------------------------------------------
    def to_yaml(self):
        return yaml.safe_dump(self.data, sort_keys=True, default_flow_style=None)

    def hash(self):
        return hashlib.sha256(self.to_yaml().encode()).hexdigest()


def _normalize_params(raw):
    if not isinstance(raw, dict):
        _fail("params: expected a mapping")
    unknown = set(raw) - set(PARAM_KEYS)
    if unknown:
        _fail(f"params: unknown key {sorted(unknown)[0]!r}")
    for key in ("rho", "beta"):
        if key not in raw:
            _fail(f"params.{key} is required")
    vals = {k: _as_float("params", k, v) for k, v in raw.items()}
    try:
        if "a_bar" not in vals:
            rest = {k: v for k, v in vals.items() if k not in ("rho", "beta")}
            P = eq.normalized_params(vals["rho"], vals["beta"], **rest)
        else:
            P = Params(**vals)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc
    return P.to_dict()


def build_config(raw):
    """Validate a raw mapping and return a normalized :class:`ExperimentConfig`."""
    if not isinstance(raw, dict):
        _fail("config must be a mapping")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        _fail(f"unknown key {sorted(unknown)[0]!r}")
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        _fail(f"experiment must be one of {', '.join(EXPERIMENTS)}; got {exp!r}")
    if "params" not in raw:
        _fail("params section is required")
    data = {"experiment": exp, "params": _normalize_params(raw["params"])}
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        _fail("seed must be an integer")
    data["seed"] = seed
    for section in SECTION_DEFAULTS:
        data[section] = _merge(section, raw.get(section))
    shocks = raw.get("shocks", []) or []
    if not isinstance(shocks, list):
        _fail("shocks: expected a list")
    data["shocks"] = []
    for i, s in enumerate(shocks):
        if not isinstance(s, dict) or set(s) - {"t", "x", "A"} or not {"t", "x"} <= set(s):
            _fail(f"shocks[{i}]: expected keys t, x and optional A")
        ev = {"t": _as_float("shocks", "t", s["t"]), "x": _as_float("shocks", "x", s["x"])}
        if s.get("A") is not None:
            ev["A"] = _as_float("shocks", "A", s["A"])
        data["shocks"].append(ev)
    _validate(data)
    return ExperimentConfig(data)


def _validate(d):
    P = Params.from_dict(d["params"])
    gd = d["grid"]
    _num_or_none("grid", gd, ("length", "dx", "x0"))
    if gd["n"] is not None:
        if not isinstance(gd["n"], int):
            _fail("grid.n must be an integer")
        gd["dx"] = None
    if gd["boundary"] not in ("NoFlux", "Periodic"):
        _fail("grid.boundary must be NoFlux or Periodic")
    if not (gd["length"] > 0 and (gd["dx"] is None or gd["dx"] > 0)):
        _fail("grid.length and grid.dx must be > 0")

    env = d["environment"]
    if env["kind"] not in ENV_KINDS:
        _fail(f"environment.kind must be one of {', '.join(ENV_KINDS)}")
    if env["kind"] == "Uniform":
        if env["alpha"] is not None:
            a = _as_float("environment", "alpha", env["alpha"])
            if not 0 <= a <= 1:
                _fail("alpha must lie in [0,1]")
            env["alpha"] = a
            d["params"]["alpha"] = a
    elif env["kind"] == "Periodic":
        if env["period"] is None or env["patches"] is None:
            _fail("Periodic environment needs period and patches")
        env["period"] = _as_float("environment", "period", env["period"])
        try:
            env["patches"] = [[float(a), float(b), float(al)] for a, b, al in env["patches"]]
        except (TypeError, ValueError):
            _fail("environment.patches: expected [start, end, alpha] triples")
        for p in env["patches"]:
            if not 0 <= p[2] <= 1:
                _fail("alpha must lie in [0,1]")
        if not isinstance(env["repetitions"], int) or env["repetitions"] < 1:
            _fail("environment.repetitions must be a positive integer")
        try:
            PeriodicEnv(env["period"], tuple(tuple(p) for p in env["patches"]), env["repetitions"])
        except ValueError as exc:
            _fail(f"environment: {exc}")
    else:
        for key in ("s1", "s2", "s3"):
            iv = env[key]
            if not (isinstance(iv, list) and len(iv) == 2):
                _fail(f"environment.{key} must be an interval [start, end]")
            env[key] = [float(iv[0]), float(iv[1])]
        for key in ("alpha1", "alpha2"):
            if env[key] is None:
                _fail(f"environment.{key} is required for a Gap environment")
            env[key] = _as_float("environment", key, env[key])
        try:
            ge = GapEnv(tuple(env["s1"]), tuple(env["s2"]), tuple(env["s3"]),
                        env["alpha1"], env["alpha2"])
        except ValueError as exc:
            _fail(f"environment: {exc}")
        if d["experiment"] != "GapScan":
            lo, hi = gd["x0"], gd["x0"] + gd["length"]
            if abs(ge.s1[0] - lo) > 1e-9 or abs(ge.s3[1] - hi) > 1e-9:
                _fail("gap intervals must tile the grid")

    if d["experiment"] == "Eigen":
        if gd["boundary"] != "Periodic":
            _fail("Eigen requires a Periodic grid boundary")
        if env["kind"] == "Gap":
            _fail("Eigen needs a Uniform or Periodic environment")

    k = d["kernel"]
    if k["kind"] not in KERNEL_KINDS:
        _fail(f"kernel.kind must be one of {', '.join(KERNEL_KINDS)}")
    k["param"] = _as_float("kernel", "param", k["param"])
    if k["kind"] != "none" and not k["param"] > 0:
        _fail("kernel.param must be > 0")

    ini = d["initial"]
    if ini["kind"] not in INITIAL_KINDS:
        _fail(f"initial.kind must be one of {', '.join(INITIAL_KINDS)}")
    _num_or_none("initial", ini, ("x_step", "height", "k", "amplitude", "value"))
    if ini["kind"] == "Step" and ini["x_step"] is None:
        _fail("initial.x_step is required for a Step initial condition")
    if ini["kind"] == "ExpDecay" and not (ini["k"] or 0) > 0:
        _fail("initial.k must be > 0 for ExpDecay")
    if ini["kind"] == "Uniform" and ini["value"] is None:
        _fail("initial.value is required for a Uniform initial condition")
    if ini["kind"] == "FromFile" and not ini["path"]:
        _fail("initial.path is required for FromFile")

    sc = d["schedule"]
    _num_or_none("schedule", sc, ("t_end", "snapshot_dt", "dt"))
    if not sc["t_end"] > 0:
        _fail("schedule.t_end must be > 0")
    if sc["snapshot_times"] is not None:
        sc["snapshot_times"] = sorted(float(t) for t in sc["snapshot_times"])
        if sc["snapshot_times"] and (sc["snapshot_times"][-1] > sc["t_end"] or sc["snapshot_times"][0] < 0):
            _fail("snapshot times must lie in [0, t_end]")
    for s in d["shocks"]:
        if s["t"] < 0:
            _fail("shock times must be >= 0")
    if d["experiment"] in ("Simulate", "Extinction") or sc["dt"] is not None:
        g = ExperimentConfig(d).grid()
        for s in d["shocks"]:
            if not g.contains(s["x"]):
                _fail(f"shock location {s['x']} lies outside the grid")
        if sc["dt"] is not None and sc["dt"] > g.cfl_dt(P.D) * (1 + 1e-12):
            raise CFLError(f"schedule.dt={sc['dt']} exceeds the stability bound "
                           f"{g.cfl_dt(P.D):.6g} = 0.4 dx^2 / max(1, D)")

    b = d["bifurcation"]
    for key in ("rho", "beta"):
        ax = b[key]
        if not (isinstance(ax, list) and len(ax) == 3 and isinstance(ax[2], int) and ax[2] >= 1):
            _fail(f"bifurcation.{key} must be [min, max, count]")
        b[key] = [float(ax[0]), float(ax[1]), int(ax[2])]
    if b["beta_scale"] not in ("linear", "log"):
        _fail("bifurcation.beta_scale must be linear or log")

    w = d["wave"]
    _num_or_none("wave", w, ("tol", "margin", "snapshot_dt"))
    w["k_list"] = [float(x) for x in w["k_list"]]
    if w["alpha_sweep"] is not None:
        w["alpha_sweep"] = [float(x) for x in w["alpha_sweep"]]
    gp = d["gap"]
    _num_or_none("gap", gp, ("t_end",))
    if gp["widths"] is not None:
        gp["widths"] = [float(x) for x in gp["widths"]]
    if gp["width_range"] is not None:
        gp["width_range"] = [float(x) for x in gp["width_range"]]
    if d["experiment"] == "GapScan":
        if env["kind"] != "Gap":
            _fail("GapScan requires a Gap environment")
        if gp["widths"] is None and gp["width_range"] is None:
            _fail("GapScan needs gap.widths or gap.width_range")
    if d["experiment"] == "Pulsating" and env["kind"] != "Periodic":
        _fail("Pulsating requires a Periodic environment")
    _num_or_none("pulsating", d["pulsating"], ("snapshot_dt",))


def parse_config_text(text):
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"YAML parse error{where}: {getattr(exc, 'problem', exc)}") from exc
    return build_config(raw)


def parse_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def initial_data(cfg, P, g):
    """(u0, v0) for Simulate-type runs; tension starts on the nullcline."""
    ini = cfg.data["initial"]
    x = g.x
    kind = ini["kind"]
    if kind == "Zero":
        u0 = np.zeros(g.n)
    elif kind == "Uniform":
        u0 = np.full(g.n, ini["value"])
    elif kind == "Step":
        # default height: excited level of the local (k = 0) system
        s = eq.excited_state(P.replace(k=0.0))
        hgt = ini["height"] if ini["height"] is not None else (s.u_c if s else 1.0)
        u0 = np.where(x < ini["x_step"], hgt, 0.0)
    elif kind == "ExpDecay":
        u0 = ini["amplitude"] * np.exp(-ini["k"] * (x - g.x0))
    else:
        arr = np.loadtxt(ini["path"], delimiter=",", ndmin=2)
        if arr.shape[0] != g.n or arr.shape[1] not in (1, 2):
            raise ConfigError(f"initial file must hold {g.n} rows of u or u,v")
        if arr.shape[1] == 2:
            return arr[:, 0].copy(), arr[:, 1].copy()
        u0 = arr[:, 0].copy()
    cap = float(eq.u_bar(P)) * (1 - 1e-9)
    return u0, eq.v_star(np.minimum(u0, cap), P)
