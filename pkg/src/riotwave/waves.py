"""Front tracking and traveling-wave experiments.

Fronts are tracked at a fixed level (default half the excited activity
u*), speeds come from a least-squares fit of front position against time,
and initial tension is placed on the nullcline v = v*(u) so runs start on
the slow manifold of the wave problem.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import equilibria as eq
from .errors import (DomainTooSmallError, FrontAbsentError, InsufficientDataError,
                     InvalidParameterError, NoTransitionError, NonMonotoneFrontError)
from .model import Params, stack_params
from .pde import Grid1D, ShockEvent, simulate, u_sup_level

STATIONARY_TOL = 5e-3
TRANSIENT_FRACTION = 0.3
SETTLED_R2 = 0.9999
MIN_SAMPLES = 10
BOUNDARY_MARGIN = 10.0


# --- front tracking ---------------------------------------------------------------

def _crossings(u, level):
    above = u >= level
    return np.flatnonzero(above[:-1] != above[1:])


def front_position(u, g, level, mode="unique"):
    """Abscissa where u crosses ``level``, by linear interpolation.

    ``mode="unique"`` demands exactly one crossing; ``"leading"`` takes the
    rightmost one, which suits fronts whose profile breathes.
    """
    u = np.asarray(u, dtype=float)
    idx = _crossings(u, level)
    if idx.size == 0:
        raise FrontAbsentError(f"u never crosses level {level:.6g}")
    if mode == "unique" and idx.size > 1:
        raise NonMonotoneFrontError(f"u crosses level {level:.6g} {idx.size} times")
    i = int(idx[-1])
    a, b = u[i], u[i + 1]
    return g.x0 + g.dx * (i + (a - level) / (a - b))


@dataclass(frozen=True)
class FrontTrace:
    times: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.shape != x.shape or t.ndim != 1:
            raise ValueError("times and positions must be 1-D and of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)

    def __len__(self):
        return self.times.size

    def shifted(self, dx):
        return FrontTrace(self.times, self.positions + dx)


class Motion(enum.Enum):
    ADVANCING = "Advancing"
    STATIONARY = "Stationary"
    RETREATING = "Retreating"


@dataclass(frozen=True)
class WaveSpeedEstimate:
    c: float
    r2: float
    classification: Motion
    transient_cut: float
    stderr: float
    n_samples: int
    settled: bool

    def to_dict(self):
        return {"c": self.c, "r2": self.r2, "classification": self.classification.value,
                "transient_cut": self.transient_cut, "stderr": self.stderr,
                "n_samples": self.n_samples, "settled": self.settled}


def _linfit(t, x):
    n = t.size
    tm, xm = t.mean(), x.mean()
    sxx = np.sum((t - tm) ** 2)
    sxy = np.sum((t - tm) * (x - xm))
    slope = sxy / sxx
    resid = x - xm - slope * (t - tm)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((x - xm) ** 2))
    r2 = 1.0 if ss_tot <= 1e-30 else max(0.0, 1.0 - ss_res / ss_tot)
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 else float("inf")
    return float(slope), r2, stderr


def estimate_speed(tr, tol=STATIONARY_TOL, fraction=TRANSIENT_FRACTION, r2_target=SETTLED_R2):
    """Fit the front speed after discarding the transient.

    The cut is the later of ``fraction`` of the run and the first sample
    from which the trailing fit reaches ``r2_target``.  When no trailing
    window reaches it the fraction cut is used and ``settled`` is False.
    """
    t, x = tr.times, tr.positions
    if t.size < MIN_SAMPLES:
        raise InsufficientDataError(f"{t.size} samples, need at least {MIN_SAMPLES}")
    base = t[0] + fraction * (t[-1] - t[0])
    first = int(np.searchsorted(t, base - 1e-12))
    if t.size - first < MIN_SAMPLES:
        raise InsufficientDataError(
            f"only {t.size - first} samples after the transient cut, need {MIN_SAMPLES}")
    chosen, settled = first, False
    for i in range(first, t.size - MIN_SAMPLES + 1):
        _, r2, _ = _linfit(t[i:], x[i:])
        if r2 >= r2_target:
            chosen, settled = i, True
            break
    c, r2, se = _linfit(t[chosen:], x[chosen:])
    if abs(c) < tol:
        cls = Motion.STATIONARY
    else:
        cls = Motion.ADVANCING if c > 0 else Motion.RETREATING
    return WaveSpeedEstimate(c, r2, cls, float(t[chosen]), se, int(t.size - chosen), settled)


# --- initial data -------------------------------------------------------------------

@dataclass(frozen=True)
class StepIC:
    """u = height on x < x_step, 0 beyond; height defaults to u*."""

    x_step: float
    height: float | None = None


@dataclass(frozen=True)
class ExpDecayIC:
    """u = amplitude * exp(-k (x - x_left)) over the whole grid."""

    k: float
    amplitude: float = 5.0

    def __post_init__(self):
        if not (self.k > 0 and self.amplitude > 0):
            raise ValueError("decay rate and amplitude must be > 0")


@dataclass(frozen=True)
class CustomIC:
    u0: np.ndarray = field(compare=False)
    v0: np.ndarray | None = field(default=None, compare=False)


def excited_level(P):
    s = eq.excited_state(P)
    if s is None:
        raise InvalidParameterError("rho", "no stable excited state: parameters do not support a wave")
    return s.u_c


def initial_fields(P, ic, g):
    """(u0, v0) with v0 = v*(min(u0, u*)) unless given explicitly."""
    u_star = excited_level(P)
    x = g.x
    if isinstance(ic, StepIC):
        hgt = u_star if ic.height is None else ic.height
        u0 = np.where(x < ic.x_step, hgt, 0.0)
    elif isinstance(ic, ExpDecayIC):
        u0 = ic.amplitude * np.exp(-ic.k * (x - g.x0))
    elif isinstance(ic, CustomIC):
        u0 = np.asarray(ic.u0, dtype=float)
        if ic.v0 is not None:
            return u0, np.asarray(ic.v0, dtype=float)
    else:
        raise TypeError(f"unsupported initial condition {ic!r}")
    return u0, eq.v_star(np.minimum(u0, u_star), P)


# --- wave experiments ---------------------------------------------------------------

@dataclass
class WaveResult:
    params: Params
    estimate: WaveSpeedEstimate
    trace: FrontTrace
    level: float
    u_star: float
    profile_times: list
    profiles: list
    profile_change: float
    monotone: bool
    F_phi: float
    F_potential: float
    u_max: float
    field_min: float
    grid: Grid1D

    @property
    def translation_invariant(self):
        return self.profile_change < 1e-3

    def report(self):
        return {
            "params": self.params.to_dict(),
            **self.estimate.to_dict(),
            "level": self.level, "u_star": self.u_star,
            "F_phi": self.F_phi, "F_potential": self.F_potential,
            "profile_change": self.profile_change,
            "translation_invariant": self.translation_invariant,
            "monotone": self.monotone, "u_max": self.u_max, "field_min": self.field_min,
        }


def aligned_change(g, u_prev, xf_prev, u_last, xf_last, half_width=BOUNDARY_MARGIN):
    """Sup-norm shape change between two profiles after aligning their fronts."""
    x = g.x
    shift = xf_last - xf_prev
    lo = max(x[0], x[0] + shift, xf_last - half_width)
    hi = min(x[-1], x[-1] + shift, xf_last + half_width)
    m = (x >= lo) & (x <= hi)
    moved = np.interp(x[m] - shift, x, u_prev)
    return float(np.max(np.abs(u_last[m] - moved))) if m.any() else float("inf")


class _RowTracker:
    def __init__(self, g, level, margin, keep, mode):
        self.g, self.level, self.margin, self.mode = g, level, margin, mode
        self.times, self.pos = [], []
        self.recent = deque(maxlen=keep)
        self.active = True
        self.error = None
        self.hit_boundary = False
        self.u_max = 0.0
        self.field_min = np.inf

    def observe(self, t, u, v):
        if not self.active:
            return
        self.u_max = max(self.u_max, float(u.max()))
        self.field_min = min(self.field_min, float(u.min()), float(v.min()))
        try:
            xf = front_position(u, self.g, self.level, self.mode)
        except (FrontAbsentError, NonMonotoneFrontError) as exc:
            self.error, self.active = exc, False
            return
        g = self.g
        if xf < g.x0 + self.margin or xf > g.x0 + g.length - self.margin:
            # fronts may start near a wall; only leaving the window ends a row
            if self.times:
                self.hit_boundary, self.active = True, False
            return
        self.times.append(t)
        self.pos.append(xf)
        self.recent.append((t, u.copy(), xf))


def run_wave_batch(P_list, ic_list, *, length=80.0, dx=0.05, t_end=40.0, snapshot_dt=0.25,
                   margin=BOUNDARY_MARGIN, tol=STATIONARY_TOL, mode="unique", keep=5):
    """Run several wave experiments as one batched simulation.

    Returns one entry per row: a :class:`WaveResult`, or the exception that
    ended that row's measurement.
    """
    P_list, ic_list = list(P_list), list(ic_list)
    if len(P_list) != len(ic_list):
        raise ValueError("need one initial condition per parameter set")
    g = Grid1D.from_length(length, dx=dx)
    levels, u_stars, u0s, v0s = [], [], [], []
    for P, ic in zip(P_list, ic_list):
        u_star = excited_level(P)
        u0, v0 = initial_fields(P, ic, g)
        levels.append(0.5 * u_star)
        u_stars.append(u_star)
        u0s.append(u0)
        v0s.append(v0)
    B = len(P_list)
    trackers = [_RowTracker(g, lv, margin, keep, mode) for lv in levels]
    if B == 1:
        PB, U0, V0 = P_list[0], u0s[0], v0s[0]
    else:
        PB, U0, V0 = stack_params(P_list), np.stack(u0s), np.stack(v0s)

    def observer(snap):
        u, v = np.atleast_2d(snap.u), np.atleast_2d(snap.v)
        for row, trk in enumerate(trackers):
            trk.observe(snap.t, u[row], v[row])
        return not any(t.active for t in trackers)

    n_snap = int(round(t_end / snapshot_dt))
    times = snapshot_dt * np.arange(n_snap + 1)
    simulate(U0, V0, PB, g, float(times[-1]), snapshot_times=times, stop=observer, record=False)

    out = []
    for P, trk, lv, us, u0 in zip(P_list, trackers, levels, u_stars, u0s):
        if trk.error is not None and len(trk.times) < MIN_SAMPLES:
            out.append(trk.error)
            continue
        trace = FrontTrace(np.array(trk.times), np.array(trk.pos))
        try:
            est = estimate_speed(trace, tol=tol)
        except InsufficientDataError as exc:
            if trk.hit_boundary:
                out.append(DomainTooSmallError(
                    f"front reached the boundary margin at t={trk.times[-1] if trk.times else 0.0:.3g}; "
                    f"increase the domain length beyond {length:g}"))
            else:
                out.append(exc)
            continue
        recent = list(trk.recent)
        (_, u_prev, xf_prev), (_, u_last, xf_last) = recent[-2], recent[-1]
        change = aligned_change(g, u_prev, xf_prev, u_last, xf_last)
        monotone = bool(np.all(np.diff(u_last) <= 1e-6))
        out.append(WaveResult(
            params=P, estimate=est, trace=trace, level=lv, u_star=us,
            profile_times=[r[0] for r in recent], profiles=[r[1] for r in recent],
            profile_change=change, monotone=monotone,
            F_phi=eq.F_phi(us, P), F_potential=eq.F_potential(us, P),
            u_max=max(trk.u_max, float(np.max(u0))), field_min=trk.field_min, grid=g))
    return out


def run_wave_experiment(P, ic, **kw):
    """Single wave run; raises whatever ended the measurement."""
    res = run_wave_batch([P], [ic], **kw)[0]
    if isinstance(res, Exception):
        raise res
    return res


def speed_vs_initial_decay(P, k_list, amplitude=5.0, **kw):
    """Front speed for exponentially decaying initial activity, keyed by decay rate."""
    k_list = list(k_list)
    res = run_wave_batch([P] * len(k_list), [ExpDecayIC(k, amplitude) for k in k_list], **kw)
    out = {}
    for k, r in zip(k_list, res):
        if isinstance(r, Exception):
            raise r
        out[k] = r
    return out


def balanced_alpha(P, lo=0.0, hi=None, xtol=1e-12):
    """alpha at which the excited state's F_phi vanishes (stationary bistable front).

    The bracket must keep a stable excited state and give F_phi of
    opposite signs at its ends.
    """
    def f(a):
        s = eq.excited_state(P, a)
        if s is None:
            raise NoTransitionError(f"no excited state at alpha={a:.6g}")
        return eq.F_phi(s.u_c, P, a)

    if hi is None:
        # largest alpha keeping an excited state, found by bisection
        a_ok, a_bad = lo, 1.0
        for _ in range(60):
            mid = 0.5 * (a_ok + a_bad)
            if eq.excited_state(P, mid) is None:
                a_bad = mid
            else:
                a_ok = mid
        hi = a_ok
    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0:
        raise NoTransitionError(
            f"F_phi has one sign on [{lo:.6g}, {hi:.6g}] ({f_lo:.3g}, {f_hi:.3g})")
    return float(optimize.brentq(f, lo, hi, xtol=xtol))


# --- extinction ---------------------------------------------------------------------

@dataclass
class ExtinctionReport:
    times: np.ndarray
    u_sup: np.ndarray
    v_err: np.ndarray
    tau_hat: float
    fit_window: tuple
    decayed: bool
    v_final_err: float
    u_final: float
    resumed: list
    u_bound_ok: bool

    def report(self):
        return {"tau_hat": self.tau_hat, "fit_window": list(self.fit_window),
                "decayed": self.decayed, "v_final_err": self.v_final_err,
                "u_final": self.u_final, "resumed_after_each_shock": self.resumed,
                "u_bound_ok": self.u_bound_ok}


def extinction_experiment(P, shocks=None, *, length=20.0, n=400, u0_level=0.5, t_end=40.0,
                          snapshot_dt=0.1, fit_span=(1.0, 10.0), tol=1e-6):
    """Decay of activity and relaxation of tension towards (0, v*(0)).

    Initial activity is uniform at ``u0_level``; shocks enter the tension.
    The decay rate is fitted to log sup u over ``fit_span`` measured from the
    last shock.  ``decayed`` requires sup u and the tension error to fall
    below ``tol`` at ``t_end``.
    """
    g = Grid1D.from_length(length, n=n)
    if shocks is None:
        shocks = [ShockEvent(0.0, 0.5 * length)]
    shocks = sorted(shocks, key=lambda e: e.t)
    v0_ss = float(eq.v_star(0.0, P))
    u0 = np.full(g.n, float(u0_level))
    v0 = np.full(g.n, v0_ss)
    times = np.round(snapshot_dt * np.arange(int(round(t_end / snapshot_dt)) + 1), 12)
    tr = simulate(u0, v0, P, g, t_end, shocks=shocks, snapshot_times=times)
    u_sup = np.array([s.u.max() for s in tr.snapshots])
    v_err = np.array([np.abs(s.v - v0_ss).max() for s in tr.snapshots])
    t_ref = shocks[-1].t if shocks else 0.0
    a, b = t_ref + fit_span[0], min(t_ref + fit_span[1], t_end)
    m = (times >= a - 1e-12) & (times <= b + 1e-12) & (u_sup > 1e-280)
    if m.sum() < 2:
        raise InsufficientDataError("fit window holds fewer than two positive samples")
    slope = np.polyfit(times[m], np.log(u_sup[m]), 1)[0]
    # decay resumes after each shock: sup u at the next shock (or the end) is
    # below its value one time unit after the shock
    resumed = []
    edges = [e.t for e in shocks] + [t_end]
    for s0, s1 in zip(edges[:-1], edges[1:]):
        i0 = int(np.searchsorted(times, min(s0 + 1.0, s1) - 1e-12))
        i1 = int(np.searchsorted(times, s1 - 1e-12))
        resumed.append(bool(u_sup[min(i1, len(times) - 1)] <= u_sup[min(i0, len(times) - 1)]))
    bound = max(float(u0_level), float(u_sup_level(P, P.alpha)))
    return ExtinctionReport(
        times=times, u_sup=u_sup, v_err=v_err, tau_hat=float(-slope), fit_window=(a, b),
        decayed=bool(u_sup[-1] < tol and v_err[-1] < tol), v_final_err=float(v_err[-1]),
        u_final=float(u_sup[-1]), resumed=resumed,
        u_bound_ok=bool(np.all(u_sup <= bound + 1e-9)))
