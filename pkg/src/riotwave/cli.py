"""Command-line runner: ``riotwave run|validate|version``.

Exit codes: 0 success, 1 unexpected internal error, 2 configuration error,
3 numerical failure, 4 I/O error.  Failures print a JSON error report on
stderr (and to ``error.json`` in the output directory when possible).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import equilibria as eq
from . import hetero, waves
from .config import ConfigError, initial_data, parse_config
from .errors import InvalidParameterError, NumericalFailure, RiotwaveError
from .pde import simulate

log = logging.getLogger("riotwave")

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3, 4


# --- writers -----------------------------------------------------------------------

class Outputs:
    """Collects files written for one run so the manifest can list them."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.warnings = []

    def _write(self, name, text):
        path = self.dir / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        if name not in self.files:
            self.files.append(name)
        return path

    def json(self, name, obj):
        return self._write(name, json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")

    def csv(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        return self._write(name, buf.getvalue())

    def text(self, name, text):
        return self._write(name, text)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return v


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# --- experiments ---------------------------------------------------------------------

def _run_simulate(cfg, out):
    P = cfg.params()
    g = cfg.grid()
    u0, v0 = initial_data(cfg, P, g)
    sc = cfg.data["schedule"]
    tr = simulate(u0, v0, P, g, sc["t_end"], env=cfg.alpha_field(g), kernel=cfg.kernel(),
                  shocks=cfg.shocks(), snapshot_times=cfg.snapshot_times(), dt=sc["dt"])
    x = g.x
    rows = ((s.t, xi, ui, vi) for s in tr.snapshots for xi, ui, vi in zip(x, s.u, s.v))
    out.csv("snapshots.csv", ["t", "x", "u", "v"], rows)
    summary = {"config": cfg.data, **tr.summary()}
    out.json("summary.json", summary)
    if tr.stats["clipped"]:
        out.warnings.append(f"{tr.stats['clipped']} round-off values clipped to zero")
    if tr.stats["violations"]:
        out.warnings.append(f"{tr.stats['violations']} values below -1e-12 left unclipped")


def _run_steady(cfg, out):
    P = cfg.params()
    states = eq.find_steady_states(P)
    label = eq.classify_region(P)
    out.json("steady_states.json", {
        "params": P.to_dict(),
        "region": {"diagram": label.diagram, "region": label.region, "n_states": label.n_states},
        "states": [{"u": s.u_c, "v": s.v_c, "trace": s.trace, "det": s.det,
                    "stability": s.stability.value, "double_root": s.double_root}
                   for s in states],
    })


def _axes(b):
    rho = np.linspace(*b["rho"][:2], b["rho"][2])
    lo, hi, n = b["beta"]
    beta = np.geomspace(lo, hi, n) if b["beta_scale"] == "log" else np.linspace(lo, hi, n)
    return rho, beta


def _run_bifurcate(cfg, out):
    P = cfg.params()
    rho, beta = _axes(cfg.data["bifurcation"])
    bmap = eq.sweep_bifurcation(rho, beta, P, workers=eq.default_workers())
    rows = []
    for i, be in enumerate(beta):
        for j, rh in enumerate(rho):
            lab = bmap.labels[i][j]
            rows.append((float(rh), float(be), lab.region if lab else "Failed",
                         lab.n_states if lab else 0))
    out.csv("bifurcation.csv", ["rho", "beta", "region", "n_states"], rows)
    if bmap.failures:
        out.warnings.append(f"{len(bmap.failures)} cells failed to classify")


def _wave_ic(cfg, g):
    ini = cfg.data["initial"]
    if ini["kind"] == "ExpDecay":
        return waves.ExpDecayIC(ini["k"], ini["amplitude"])
    if ini["kind"] == "Step":
        return waves.StepIC(ini["x_step"], ini["height"])
    return waves.StepIC(g.x0 + 0.5 * g.length)


def _wave_kw(cfg):
    g = cfg.grid()
    w = cfg.data["wave"]
    return g, dict(length=g.length, dx=g.dx, t_end=cfg.data["schedule"]["t_end"],
                   snapshot_dt=w["snapshot_dt"], margin=w["margin"], tol=w["tol"])


def _run_wave(cfg, out):
    P = cfg.params()
    g, kw = _wave_kw(cfg)
    ic = _wave_ic(cfg, g)
    sweep = cfg.data["wave"]["alpha_sweep"]
    if sweep:
        res = waves.run_wave_batch([P.replace(alpha=a) for a in sweep], [ic] * len(sweep), **kw)
        rows = []
        for a, r in zip(sweep, res):
            if isinstance(r, Exception):
                rows.append((a, None, None, f"error: {r}", None))
            else:
                rows.append((a, r.estimate.c, r.estimate.stderr,
                             r.estimate.classification.value, r.F_phi))
        out.csv("wave_sweep.csv", ["alpha", "c", "stderr", "classification", "F_phi"], rows)
        return
    r = waves.run_wave_experiment(P, ic, **kw)
    out.json("wave_report.json", r.report())
    out.csv("front_trace.csv", ["t", "x_f"], zip(r.trace.times, r.trace.positions))
    x = r.grid.x
    out.csv("profiles.csv", ["t", "x", "u"],
            ((t, xi, ui) for t, u in zip(r.profile_times, r.profiles) for xi, ui in zip(x, u)))


def _run_speed_decay(cfg, out):
    P = cfg.params()
    _, kw = _wave_kw(cfg)
    ks = cfg.data["wave"]["k_list"]
    amp = cfg.data["initial"]["amplitude"]
    res = waves.speed_vs_initial_decay(P, ks, amplitude=amp, **kw)
    out.csv("speed_vs_decay.csv", ["k", "c", "stderr", "r2"],
            ((k, r.estimate.c, r.estimate.stderr, r.estimate.r2) for k, r in res.items()))


def _run_extinction(cfg, out):
    P = cfg.params()
    g = cfg.grid()
    ini = cfg.data["initial"]
    level = ini["value"] if ini["kind"] == "Uniform" else 0.5
    rep = waves.extinction_experiment(P, cfg.shocks() or None, length=g.length, n=g.n,
                                      u0_level=level, t_end=cfg.data["schedule"]["t_end"])
    out.json("extinction.json", {"params": P.to_dict(), **rep.report()})
    out.csv("decay.csv", ["t", "u_sup", "v_err"], zip(rep.times, rep.u_sup, rep.v_err))
    if not rep.decayed:
        out.warnings.append("activity or tension did not settle to the non-excited state")


def _run_eigen(cfg, out):
    P = cfg.params()
    g = cfg.grid()
    env = cfg.environment()
    if env is None:
        env = np.full(g.n, P.alpha)
    res = hetero.instability_check(P, env, g)
    e = res["eigen"]
    out.json("eigen.json", {"params": P.to_dict(), "predicted": res["predicted"].value,
                            **e.report()})
    out.csv("eigenfunctions.csv", ["x", "phi", "psi"], zip(g.x, e.phi, e.psi))


def _run_gap(cfg, out):
    P = cfg.params()
    env = cfg.environment()
    gp = cfg.data["gap"]
    dx = cfg.data["grid"]["dx"] or cfg.grid().dx
    length, left = env.s3[1], env.s1[1]
    if gp["width_range"] is not None:
        cg = hetero.find_critical_gap(P, env.alpha1, env.alpha2, gp["width_range"], dx=dx,
                                      t_end=gp["t_end"], length=length, left=left)
        out.json("critical_gap.json", cg.report())
        probes = sorted(cg.probes, key=lambda p: p.width)
        if not cg.monotone:
            out.warnings.append("gap verdicts are not monotone in width")
    else:
        genvs = [hetero.GapEnv.centered(w, env.alpha1, env.alpha2, length, left)
                 for w in gp["widths"]]
        probes = hetero.gap_experiments([P] * len(genvs), genvs, dx=dx, t_end=gp["t_end"])
    out.csv("gap_scan.csv", ["width", "verdict", "arrival_time"],
            ((round(p.width, 12), p.verdict.value, p.arrival_time) for p in probes))


def _run_pulsating(cfg, out):
    P = cfg.params()
    env = cfg.environment()
    dx = cfg.data["grid"]["dx"] or cfg.grid().dx
    r = hetero.pulsating_front_experiment(P, env, dx=dx, t_end=cfg.data["schedule"]["t_end"],
                                          snapshot_dt=cfg.data["pulsating"]["snapshot_dt"])
    out.json("pulsating.json", {"params": P.to_dict(), **r.report()})
    out.csv("front_trace.csv", ["t", "x_f"], zip(r.trace.times, r.trace.positions))


RUNNERS = {
    "Simulate": _run_simulate, "SteadyStates": _run_steady, "Bifurcate": _run_bifurcate,
    "WaveSpeed": _run_wave, "SpeedVsDecay": _run_speed_decay, "Extinction": _run_extinction,
    "Eigen": _run_eigen, "GapScan": _run_gap, "Pulsating": _run_pulsating,
}


# --- plot data -------------------------------------------------------------------------

RECIPES = {
    "bifurcation.csv": "region map over (rho, beta); codes as in region_codes line",
    "snapshots.csv": "space-time blocks of u and v, one block per snapshot",
    "profiles.csv": "late-time activity profiles of a traveling front, one block per snapshot",
    "front_trace.csv": "front position against time",
    "gap_scan.csv": "gap width against verdict (1 = Crossed, 0 = Blocked)",
    "speed_vs_decay.csv": "front speed against initial decay rate",
    "decay.csv": "sup of activity and tension error against time (log scale in y)",
    "eigenfunctions.csv": "principal eigenfunctions phi, psi over one period",
}


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _blocks(rows, key_col=0):
    lines, last = [], None
    for row in rows:
        if last is not None and row[key_col] != last:
            lines += ["", ""]
        lines.append(" ".join(row))
        last = row[key_col]
    return lines


def emit_plot_data(out_dir, names=None):
    """Write gnuplot-ready ``.dat`` files next to the CSV outputs in ``out_dir``.

    ``names`` restricts the conversion to those CSV files (all known ones
    by default).  Returns the names of the files written.
    """
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise FileNotFoundError(f"output directory {out_dir} does not exist")
    if names is not None:
        for name in names:
            if not (out_dir / name).exists():
                raise FileNotFoundError(f"missing output {out_dir / name}")
    found = [name for name in RECIPES
             if (out_dir / name).exists() and (names is None or name in names)]
    if not found:
        raise FileNotFoundError(f"no plottable outputs in {out_dir}")
    written = []
    for name in found:
        header, rows = _read_csv(out_dir / name)
        lines = [f"# {RECIPES[name]}", f"# source: {name}"]
        if name == "bifurcation.csv":
            codes = eq.REGION_CODES
            lines.append("# region_codes: " + " ".join(f"{k}={v}" for k, v in codes.items()))
            rhos = sorted({float(r[0]) for r in rows})
            lines.append("# matrix rows follow beta, columns follow rho")
            lines.append("# rho: " + " ".join(repr(r) for r in rhos))
            by_beta = {}
            for r in rows:
                by_beta.setdefault(float(r[1]), []).append(str(codes.get(r[2], -1)))
            for be in sorted(by_beta):
                lines.append(" ".join(by_beta[be]))
        elif name == "gap_scan.csv":
            lines.append("# width verdict")
            for r in rows:
                lines.append(f"{r[0]} {1 if r[1] == 'Crossed' else 0}")
        elif name in ("snapshots.csv", "profiles.csv"):
            lines.append("# " + " ".join(header))
            lines += _blocks(rows)
        else:
            lines.append("# " + " ".join(header))
            lines += [" ".join(c if c else "nan" for c in r) for r in rows]
        target = name.replace(".csv", ".dat")
        with open(out_dir / target, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        written.append(target)
    return written


# --- dispatch ----------------------------------------------------------------------------

def dispatch(cfg, out_dir):
    """Run ``cfg`` and write its outputs plus ``manifest.json`` to ``out_dir``."""
    t0 = time.perf_counter()
    out = Outputs(out_dir)
    log.info("running %s", cfg.experiment)
    RUNNERS[cfg.experiment](cfg, out)
    produced = [n for n in out.files if n in RECIPES]
    if produced:
        out.files += emit_plot_data(out.dir, produced)
    out.text("config.yaml", cfg.to_yaml())
    manifest = {
        "config_hash": cfg.hash(),
        "tool_version": __version__,
        "experiment": cfg.experiment,
        "outputs": [{"path": f, "bytes": (out.dir / f).stat().st_size} for f in out.files],
        "wall_time": time.perf_counter() - t0,
        "warnings": out.warnings,
    }
    with open(out.dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _error_report(exc, code, experiment=None, out_dir=None):
    rep = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if experiment:
        rep["experiment"] = experiment
    ctx = getattr(exc, "context", None)
    if ctx:
        rep["context"] = _plain(ctx)
    text = json.dumps(rep, sort_keys=True)
    print(text, file=sys.stderr)
    if out_dir is not None:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass
    return code


def _exit_code(exc):
    if isinstance(exc, (ConfigError, InvalidParameterError, yaml.YAMLError)):
        return EXIT_CONFIG
    if isinstance(exc, (NumericalFailure, RiotwaveError, FloatingPointError)):
        return EXIT_NUMERICAL
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, ValueError):
        return EXIT_CONFIG
    return EXIT_INTERNAL


def build_parser():
    ap = argparse.ArgumentParser(prog="riotwave", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--out-dir", default="riotwave_out")
    run.add_argument("--verbose", action="store_true")
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    val.add_argument("--verbose", action="store_true")
    sub.add_parser("version", help="print the tool version")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
    except FileNotFoundError as exc:
        return _error_report(exc, EXIT_IO)
    except Exception as exc:  # noqa: BLE001 - mapped to documented exit codes
        return _error_report(exc, _exit_code(exc))
    if args.command == "validate":
        print(json.dumps({"valid": True, "experiment": cfg.experiment,
                          "config_hash": cfg.hash()}, sort_keys=True))
        return EXIT_OK
    try:
        manifest = dispatch(cfg, args.out_dir)
    except Exception as exc:  # noqa: BLE001
        return _error_report(exc, _exit_code(exc), cfg.experiment, args.out_dir)
    for w in manifest["warnings"]:
        log.warning(w)
    log.info("wrote %d files to %s in %.2fs", len(manifest["outputs"]), args.out_dir,
             manifest["wall_time"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
