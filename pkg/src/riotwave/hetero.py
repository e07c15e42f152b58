"""Heterogeneous environments: periodic patches and the censored gap.

The principal eigenvalue of the linearization at the non-excited state
decides whether activity persists in a periodic environment; simulations
check that verdict, follow pulsating fronts, and locate the critical width
of a fully censored barrier.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from . import equilibria as eq
from .errors import NoTransitionError, NumericalFailure
from .model import G_alpha, h, h_prime, jacobian, r, r_prime, stack_params
from .pde import Boundary, EnvironmentProfile, Grid1D, simulate
from .waves import (STATIONARY_TOL, FrontTrace, estimate_speed, front_position,
                    excited_level)

MAX_ITER = 100_000
EIG_TOL = 1e-11
MARGINAL = 1e-8
STALL_TOL = 1e-9


# --- environments -------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicEnv:
    """alpha(x) repeating with period L; patches are (start, end, alpha) within [0, L)."""

    period: float
    patches: tuple
    repetitions: int = 1

    def __post_init__(self):
        patches = tuple((float(a), float(b), float(al)) for a, b, al in self.patches)
        if not self.period > 0 or self.repetitions < 1:
            raise ValueError("period must be > 0 and repetitions >= 1")
        if not patches or abs(patches[0][0]) > 1e-12 or abs(patches[-1][1] - self.period) > 1e-12:
            raise ValueError("patches must partition [0, L)")
        EnvironmentProfile(patches)
        object.__setattr__(self, "patches", patches)

    @classmethod
    def two_patch(cls, period, frac, alpha1, alpha2, repetitions=1):
        """alpha1 on [0, frac L), alpha2 on the rest of the period."""
        cut = frac * period
        return cls(period, ((0.0, cut, alpha1), (cut, period, alpha2)), repetitions)

    @property
    def extent(self):
        return self.period * self.repetitions

    def profile(self, x0=0.0):
        pieces = []
        for k in range(self.repetitions):
            off = x0 + k * self.period
            pieces += [(a + off, b + off, al) for a, b, al in self.patches]
        return EnvironmentProfile(tuple(pieces))

    def grid(self, dx, boundary=Boundary.PERIODIC):
        return Grid1D.from_length(self.extent, dx=dx, boundary=boundary)

    def alpha_on(self, g):
        """alpha at the grid nodes, folding x into one period."""
        xs = np.mod(g.x - g.x0, self.period)
        eps = 1e-9 * g.dx
        out = np.full(g.n, np.nan)
        for a, b, al in self.patches:
            out[(xs >= a - eps) & (xs < b - eps) & np.isnan(out)] = al
        # nodes within eps below the period wrap into the first patch
        out[np.isnan(out)] = self.patches[0][2]
        return out

    @property
    def alpha_min(self):
        return min(p[2] for p in self.patches)


@dataclass(frozen=True)
class GapEnv:
    """Three consecutive intervals: alpha1 on s1, full censoring on s2, alpha2 on s3."""

    s1: tuple
    s2: tuple
    s3: tuple
    alpha1: float
    alpha2: float

    def __post_init__(self):
        for a in (self.alpha1, self.alpha2):
            if not 0.0 <= a < 1.0:
                raise ValueError("edge-region alpha must lie in [0,1)")
        (a1, b1), (a2, b2), (a3, b3) = self.s1, self.s2, self.s3
        if not (a1 < b1 and a2 < b2 and a3 < b3):
            raise ValueError("gap intervals must have positive length")
        if abs(b1 - a2) > 1e-12 or abs(b2 - a3) > 1e-12:
            raise ValueError("gap intervals must be consecutive")

    @classmethod
    def centered(cls, width, alpha1, alpha2, length=15.0, left=5.0):
        return cls((0.0, left), (left, left + width), (left + width, length), alpha1, alpha2)

    @property
    def width(self):
        return self.s2[1] - self.s2[0]

    def profile(self):
        return EnvironmentProfile(((self.s1[0], self.s1[1], self.alpha1),
                                   (self.s2[0], self.s2[1], 1.0),
                                   (self.s3[0], self.s3[1], self.alpha2)))

    def check_tiles(self, g):
        lo, hi = g.x0, g.x0 + g.length
        if abs(self.s1[0] - lo) > 1e-9 * g.dx or abs(self.s3[1] - hi) > 1e-9 * g.dx:
            raise ValueError("gap intervals must tile the grid")


# --- principal eigenvalue -----------------------------------------------------------

@dataclass
class EigenResult:
    lam: float
    phi: np.ndarray
    psi: np.ndarray
    iterations: int
    residual: float
    reducible: bool
    n: int
    dx: float

    @property
    def norms(self):
        return float(np.max(np.abs(self.phi))), float(np.max(np.abs(self.psi)))

    def report(self):
        nphi, npsi = self.norms
        return {"lambda": self.lam, "residual": self.residual, "iterations": self.iterations,
                "phi_sup": nphi, "psi_sup": npsi, "phi_min": float(self.phi.min()),
                "psi_min": float(self.psi.min()), "reducible": self.reducible,
                "n": self.n, "dx": self.dx}


def _periodic_laplacian(n, dx):
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    A = sparse.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="lil")
    A[0, n - 1] = 1.0
    A[n - 1, 0] = 1.0
    return A.tocsr() / (dx * dx)


def linear_operator(P, alpha, g, strict=False):
    """Sparse 2n x 2n operator of the linearization at the non-excited state.

    Rows act on (phi, psi); the tension coordinate of the base point is
    v*(0), or 0 with ``strict``.
    """
    n = g.n
    v0 = 0.0 if strict else float(eq.v_star(0.0, P))
    alpha = np.asarray(alpha, dtype=float)
    # Phi_u(0, v0) = r(v0) G_alpha'(0) - 1 with G_alpha'(0) = 1 only where alpha = 0
    phi_u = np.where(alpha == 0, float(r(v0, P)), 0.0) - 1.0
    phi_v = float(r_prime(v0, P)) * G_alpha(np.zeros(n), P, alpha)
    psi_u = -float(h_prime(0.0, P)) * v0
    psi_v = -(float(h(0.0, P)) - P.k2)
    lap = _periodic_laplacian(n, g.dx)
    I = sparse.identity(n, format="csr")
    L11 = -lap - sparse.diags(phi_u)
    L12 = -sparse.diags(phi_v)
    L21 = -psi_u * I
    L22 = -P.D * lap - psi_v * I
    return sparse.bmat([[L11, L12], [L21, L22]], format="csc")


def principal_eigenvalue(P, env, g, strict=False, tol=EIG_TOL, max_iter=MAX_ITER):
    """Smallest eigenvalue of the linearized cooperative operator, with its eigenpair.

    Shifted inverse iteration: the shift starts below the Gershgorin bound,
    so the iteration matrix is a nonnegative inverse whose Perron vector is
    the principal eigenpair; once the estimate settles the shift is moved
    just beneath it for fast final convergence.
    """
    if not g.periodic:
        raise ValueError("principal eigenvalue needs a periodic grid")
    if isinstance(env, PeriodicEnv):
        if abs(env.extent - g.length) > 1e-9 * g.dx:
            raise ValueError("grid extent must equal the environment extent")
        alpha = env.alpha_on(g)
    else:
        alpha = np.broadcast_to(np.asarray(env, dtype=float), (g.n,))
    L = linear_operator(P, alpha, g, strict)
    N = L.shape[0]
    diag = L.diagonal()
    offsum = np.asarray(abs(L).sum(axis=1)).ravel() - np.abs(diag)
    sigma = float(np.min(diag - offsum)) - 1.0
    x = np.ones(N)
    lam = sigma
    it = 0
    res = np.inf
    refined = False
    best, stale = np.inf, 0
    lu = spla.splu(L - sigma * sparse.identity(N, format="csc"))
    while it < max_iter:
        it += 1
        y = lu.solve(x)
        ny = np.max(np.abs(y))
        if not np.isfinite(ny) or ny == 0:
            raise NumericalFailure("inverse iteration broke down", iterations=it)
        lam = sigma + 1.0 / ny
        x = y / ny
        res = float(np.max(np.abs(L @ x - lam * x)))
        if res < tol:
            break
        # on fine grids round-off in L @ x floors the residual
        if res < 0.999 * best:
            best, stale = res, 0
        else:
            stale += 1
            if refined and stale > 20 and best < STALL_TOL:
                break
        if not refined and res < 1e-5:
            sigma = lam - 1e-3 * max(1.0, abs(lam))
            lu = spla.splu(L - sigma * sparse.identity(N, format="csc"))
            refined = True
    else:
        raise NumericalFailure("principal eigenvalue did not converge", residual=res, iterations=it)
    n = g.n
    phi, psi = x[:n].copy(), x[n:].copy()
    scale = max(np.max(np.abs(phi)), np.max(np.abs(psi)))
    if phi.sum() < 0 or (phi.sum() == 0 and psi.sum() < 0):
        scale = -scale
    phi /= scale
    psi /= scale
    lam = float(lam)
    res = float(np.max(np.abs(L @ np.concatenate([phi, psi]) - lam * np.concatenate([phi, psi]))))
    reducible = bool(np.max(np.abs(phi)) < 1e-8)
    return EigenResult(lam, phi, psi, it, res, reducible, n, g.dx)


def closed_form_lambda(P, alpha=0.0, strict=False):
    """-max Re mu over the 2x2 Jacobian at the non-excited state (constant environment)."""
    v0 = 0.0 if strict else float(eq.v_star(0.0, P))
    J = jacobian(0.0, v0, P, alpha)
    return float(-np.max(np.linalg.eigvals(J.matrix).real))


def richardson(lam_n, lam_2n, order=2):
    return (2 ** order * lam_2n - lam_n) / (2 ** order - 1)


class Prediction(enum.Enum):
    PERSIST = "Persist"
    VANISH = "Vanish"
    MARGINAL = "Marginal"


def instability_check(P, env, g, strict=False):
    res = principal_eigenvalue(P, env, g, strict)
    if res.lam < -MARGINAL:
        pred = Prediction.PERSIST
    elif res.lam > MARGINAL:
        pred = Prediction.VANISH
    else:
        pred = Prediction.MARGINAL
    return {"lambda": res.lam, "predicted": pred, "eigen": res}


# --- long-run outcomes in periodic environments ---------------------------------------

@dataclass
class PeriodicOutcome:
    outcome: str  # "Persist", "Vanish" or "Undecided"
    t_final: float
    u_final: np.ndarray
    v_final: np.ndarray
    rel_change: float
    u_max: float
    period_mismatch: float


def long_run_outcomes(P_list, envs, dx=0.1, u_init=1e-3, t_max=1500.0, check_every=10.0,
                      change_tol=1e-6, vanish_tol=1e-7, rng=None):
    """Batch-simulate small positive data in each periodic environment.

    Each environment is tiled twice on a periodic grid so that the limit can
    be compared across adjacent periods.  With ``rng`` the initial activity
    is ``u_init`` times a random factor in [0.5, 1.5) at every node, which
    makes that comparison a genuine test.  A row ends as Persist once the
    relative sup change over ``check_every`` falls below ``change_tol`` with
    u bounded away from zero, and as Vanish once sup u drops below
    ``vanish_tol`` while still decreasing.
    """
    P_list, envs = list(P_list), list(envs)
    periods = {e.period for e in envs}
    rows = []
    for P, e in zip(P_list, envs):
        rows.append((P, PeriodicEnv(e.period, e.patches, 2)))
    # rows are grouped by grid, since batching needs one grid
    out = [None] * len(rows)
    for L in sorted(periods):
        idx = [i for i, (_, e) in enumerate(rows) if e.period == L]
        g = rows[idx[0]][1].grid(dx)
        alpha = np.stack([rows[i][1].alpha_on(g) for i in idx])
        Ps = [rows[i][0] for i in idx]
        PB = stack_params(Ps)
        u = np.full((len(idx), g.n), u_init)
        if rng is not None:
            u *= 0.5 + rng.random(u.shape)
        v = np.stack([np.full(g.n, float(eq.v_star(0.0, P))) for P in Ps])
        done = [None] * len(idx)
        t = 0.0
        prev_u = u.copy()
        while t < t_max and any(d is None for d in done):
            tr = simulate(u, v, PB, g, check_every, env=alpha, record=False)
            u, v = tr.final.u, tr.final.v
            t += check_every
            for k in range(len(idx)):
                if done[k] is not None:
                    continue
                um = float(u[k].max())
                change = float(np.max(np.abs(u[k] - prev_u[k])) / max(um, 1e-300))
                if um < vanish_tol and um < float(prev_u[k].max()):
                    done[k] = ("Vanish", t, change)
                elif um > 1e-3 and change < change_tol:
                    done[k] = ("Persist", t, change)
            prev_u = u.copy()
        for k, i in enumerate(idx):
            state = done[k] if done[k] is not None else ("Undecided", t, float("nan"))
            half = g.n // 2
            mismatch = float(np.max(np.abs(u[k, :half] - u[k, half:])))
            out[i] = PeriodicOutcome(state[0], state[1], u[k].copy(), v[k].copy(), state[2],
                                     float(u[k].max()), mismatch)
    return out


# --- pulsating fronts --------------------------------------------------------------------

class PulseVerdict(enum.Enum):
    PULSATING = "Pulsating"
    BLOCKED = "Blocked"
    IRREGULAR = "Irregular"


@dataclass
class PulsatingResult:
    verdict: PulseVerdict
    mean_speed: float
    oscillation_period: float
    expected_period: float
    amplitude: float
    trace: FrontTrace
    late_speed: float

    def report(self):
        return {"verdict": self.verdict.value, "mean_speed": self.mean_speed,
                "oscillation_period": self.oscillation_period,
                "expected_period": self.expected_period, "amplitude": self.amplitude,
                "late_speed": self.late_speed}


def dominant_period(t, y, p_min, p_max, n_freq=4000):
    """Period of the strongest Fourier component of y(t) in [p_min, p_max]."""
    y = y - y.mean()
    freqs = np.linspace(1.0 / p_max, 1.0 / p_min, n_freq)
    ph = 2j * np.pi * np.outer(freqs, t)
    power = np.abs(np.exp(ph) @ y) ** 2
    return float(1.0 / freqs[int(np.argmax(power))])


def classify_pulsating(trace, period, tol=STATIONARY_TOL, fraction=0.3, rel_tol=0.1):
    """Verdict for a front trace in an environment of spatial period ``period``."""
    t, x = trace.times, trace.positions
    keep = t >= t[0] + fraction * (t[-1] - t[0])
    tk, xk = t[keep], x[keep]
    c = float(np.polyfit(tk, xk, 1)[0])
    tail = t >= t[0] + 0.8 * (t[-1] - t[0])
    late = float(np.polyfit(t[tail], x[tail], 1)[0])
    if abs(late) < tol:
        return PulsatingResult(PulseVerdict.BLOCKED, c, float("nan"), float("inf"),
                               0.0, trace, late)
    resid = xk - np.polyval(np.polyfit(tk, xk, 1), tk)
    expected = period / abs(c)
    span = tk[-1] - tk[0]
    p = dominant_period(tk, resid, max(2 * (tk[1] - tk[0]), expected / 4), min(span / 2, 4 * expected))
    ok = abs(p - expected) <= rel_tol * expected and c > tol
    verdict = PulseVerdict.PULSATING if ok else PulseVerdict.IRREGULAR
    return PulsatingResult(verdict, c, p, expected, float(np.ptp(resid)), trace, late)


def pulsating_front_experiment(P_list, env, dx=0.05, t_end=60.0, snapshot_dt=0.05,
                               x_init=None, margin=5.0):
    """Front runs in a tiled periodic environment on a NoFlux grid.

    Accepts one or several parameter sets (batched on one grid); activity
    starts at the excited level on the leftmost ``x_init`` units and the
    leading edge is tracked at half the excited level of the alpha = 0
    medium.
    """
    single = not isinstance(P_list, (list, tuple))
    Ps = [P_list] if single else list(P_list)
    g = Grid1D.from_length(env.extent, dx=dx)
    alpha = env.profile().alpha_on(g)
    x_init = env.period if x_init is None else x_init
    levels, u0s, v0s = [], [], []
    for P in Ps:
        u_star = excited_level(P.replace(alpha=env.alpha_min))
        levels.append(0.5 * u_star)
        u0 = np.where(g.x < x_init, u_star, 0.0)
        u0s.append(u0)
        v0s.append(eq.v_star(np.minimum(u0, u_star), P))
    PB = Ps[0] if len(Ps) == 1 else stack_params(Ps)
    U0 = u0s[0] if len(Ps) == 1 else np.stack(u0s)
    V0 = v0s[0] if len(Ps) == 1 else np.stack(v0s)
    traces = [([], []) for _ in Ps]
    active = [True] * len(Ps)
    right = g.x0 + g.length - margin

    def observer(snap):
        u = np.atleast_2d(snap.u)
        for k in range(len(Ps)):
            if not active[k]:
                continue
            xf = front_position(u[k], g, levels[k], mode="leading")
            if xf > right:
                active[k] = False
                continue
            traces[k][0].append(snap.t)
            traces[k][1].append(xf)
        return not any(active)

    times = snapshot_dt * np.arange(int(round(t_end / snapshot_dt)) + 1)
    simulate(U0, V0, PB, g, float(times[-1]), env=alpha, snapshot_times=times,
             stop=observer, record=False)
    results = [classify_pulsating(FrontTrace(np.array(ts), np.array(xs)), env.period)
               for ts, xs in traces]
    return results[0] if single else results


# --- gap problem -------------------------------------------------------------------------

class GapVerdict(enum.Enum):
    CROSSED = "Crossed"
    BLOCKED = "Blocked"


@dataclass
class GapResult:
    width: float
    verdict: GapVerdict
    arrival_time: float | None
    final_max_s3: float

    def report(self):
        return {"width": round(self.width, 12), "verdict": self.verdict.value,
                "arrival_time": self.arrival_time, "final_max_s3": self.final_max_s3}


def gap_level(P, genv):
    """Half the excited activity of the medium being invaded (alpha2)."""
    s = eq.excited_state(P, genv.alpha2)
    if s is None:
        s = eq.excited_state(P, genv.alpha1)
    return 0.5 * s.u_c


def gap_experiments(P_list, genvs, dx=0.1, t_end=80.0, check_dt=0.5, x_init=None):
    """Batched gap runs on a shared grid; each row has its own parameters and gap.

    Activity starts at the excited level of S1 on [0, x_init) (default all
    of S1).  A row crosses once max u over S3 reaches half the excited level.
    """
    P_list, genvs = list(P_list), list(genvs)
    length = genvs[0].s3[1] - genvs[0].s1[0]
    g = Grid1D.from_length(length, dx=dx, x0=genvs[0].s1[0])
    for ge in genvs:
        ge.check_tiles(g)
    alpha = np.stack([ge.profile().alpha_on(g) for ge in genvs])
    x = g.x
    levels, u0s, v0s, s3 = [], [], [], []
    for P, ge in zip(P_list, genvs):
        us = eq.excited_state(P, ge.alpha1)
        if us is None:
            raise NoTransitionError("S1 has no excited state to launch a wave")
        xi = ge.s1[1] if x_init is None else x_init
        u0 = np.where(x < xi, us.u_c, 0.0)
        u0s.append(u0)
        v0s.append(eq.v_star(u0, P))
        levels.append(gap_level(P, ge))
        s3.append(x >= ge.s3[0] - 1e-9 * dx)
    PB = stack_params(P_list)
    arrivals = [None] * len(P_list)
    last_max = [0.0] * len(P_list)

    def observer(snap):
        for k in range(len(P_list)):
            m = float(snap.u[k][s3[k]].max())
            last_max[k] = m
            if arrivals[k] is None and m >= levels[k]:
                arrivals[k] = snap.t
        return all(a is not None for a in arrivals)

    times = check_dt * np.arange(int(round(t_end / check_dt)) + 1)
    simulate(np.stack(u0s), np.stack(v0s), PB, g, float(times[-1]), env=alpha,
             snapshot_times=times, stop=observer, record=False)
    return [GapResult(ge.width, GapVerdict.CROSSED if a is not None else GapVerdict.BLOCKED,
                      a, lm) for ge, a, lm in zip(genvs, arrivals, last_max)]


def gap_experiment(P, genv, dx=0.1, t_end=80.0, **kw):
    return gap_experiments([P], [genv], dx=dx, t_end=t_end, **kw)[0]


@dataclass
class CriticalGap:
    width: float
    probes: list = field(default_factory=list)
    monotone: bool = True

    def report(self):
        return {"critical_width": self.width, "monotone": self.monotone,
                "probes": [p.report() for p in sorted(self.probes, key=lambda p: p.width)]}


def find_critical_gap(P, alpha1, alpha2, width_range, dx=0.1, t_end=80.0,
                      length=15.0, left=5.0, scan=8):
    """Smallest blocked width on the dx lattice, by bracketing then bisection.

    A coarse batched scan of ``scan`` widths checks verdict monotonicity and
    narrows the bracket; bisection then runs to one grid step.
    """
    lo_m = int(round(width_range[0] / dx))
    hi_m = int(round(width_range[1] / dx))
    if not 0 < lo_m < hi_m:
        raise ValueError("width range must be increasing and positive")

    def gen(m):
        return GapEnv.centered(m * dx, alpha1, alpha2, length, left)

    probes = {}

    def run(ms):
        ms = [m for m in ms if m not in probes]
        if ms:
            for m, res in zip(ms, gap_experiments([P] * len(ms), [gen(m) for m in ms],
                                                  dx=dx, t_end=t_end)):
                probes[m] = res

    grid_m = sorted(set(np.linspace(lo_m, hi_m, scan).round().astype(int).tolist()))
    run(grid_m)
    verdicts = [probes[m].verdict for m in grid_m]
    if verdicts[0] is not GapVerdict.CROSSED or verdicts[-1] is not GapVerdict.BLOCKED:
        raise NoTransitionError(
            f"need Crossed at width {lo_m * dx:g} and Blocked at {hi_m * dx:g}, got "
            f"{verdicts[0].value} and {verdicts[-1].value}")
    first_block = next(i for i, v in enumerate(verdicts) if v is GapVerdict.BLOCKED)
    monotone = all(v is GapVerdict.BLOCKED for v in verdicts[first_block:])
    a, b = grid_m[first_block - 1], grid_m[first_block]
    while b - a > 1:
        mid = (a + b) // 2
        run([mid])
        if probes[mid].verdict is GapVerdict.CROSSED:
            a = mid
        else:
            b = mid
    return CriticalGap(round(b * dx, 12), list(probes.values()), monotone)
