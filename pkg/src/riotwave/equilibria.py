"""Constant steady states of the local system (k = 0) and the (rho, beta) region map."""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericalFailure
from .model import EXP_CLAMP, G_alpha, Params, h, jacobian, r

SCAN_CELLS = 4096
SCAN_EPS = 1e-9
ROOT_XTOL = 1e-12
DOUBLE_ROOT_TOL = 1e-9
DET_TOL = 1e-9


class Stability(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class SteadyState:
    u_c: float
    v_c: float
    trace: float
    det: float
    stability: Stability
    double_root: bool = False


@dataclass(frozen=True)
class RegionLabel:
    diagram: str   # "AlphaZero" | "AlphaMid" | "AlphaOne"
    region: str    # I, IIa, IIb, IIIa, IIIb, OnBeta1
    n_states: int


REGION_CODES = {"I": 1, "IIa": 2, "IIb": 3, "IIIa": 4, "IIIb": 5, "OnBeta1": 6, "Failed": 0}


@dataclass
class BifurcationMap:
    rho_axis: np.ndarray
    beta_axis: np.ndarray
    labels: list            # labels[i][j] at (beta_axis[i], rho_axis[j]); None on failure
    failures: dict

    def __post_init__(self):
        if np.any(np.diff(self.rho_axis) <= 0) or np.any(np.diff(self.beta_axis) <= 0):
            raise ValueError("axes must be strictly increasing")
        if len(self.labels) != len(self.beta_axis) or any(
                len(row) != len(self.rho_axis) for row in self.labels):
            raise ValueError("label matrix does not match axes")

    def region_matrix(self):
        return np.array([[lab.region if lab else "Failed" for lab in row] for row in self.labels])

    def count_matrix(self):
        return np.array([[lab.n_states if lab else 0 for lab in row] for row in self.labels])

    def regions_present(self):
        return set(self.region_matrix().ravel()) - {"Failed"}


# --- closed forms -------------------------------------------------------------

def u_bar(P):
    """Pole of v*: the activity where h(u) = k2."""
    return ((1.0 / P.k2) ** (1.0 / P.p) - 1.0) / P.m_bar


def v_star(u, P):
    """Tension nullcline 1 / (h(u) - k2), valid for 0 <= u < u_bar."""
    u = np.asarray(u, dtype=float)
    if np.any(u >= u_bar(P)):
        raise DomainError("v_star evaluated at or beyond the pole u_bar")
    return 1.0 / (h(u, P) - P.k2)


def default_a(P):
    """Critical tension halfway between v*(0) and v*(1)."""
    if u_bar(P) <= 1.0:
        raise DomainError("default_a needs u_bar > 1 so that v*(1) is finite")
    return 0.5 * (v_star(0.0, P) + v_star(1.0, P))


def normalized_params(rho, beta, **kw):
    """Params with a_bar set by :func:`default_a` for the given k2, m_bar, p."""
    probe = Params(rho=rho, beta=beta, a_bar=0.0, **kw)
    return probe.replace(a_bar=float(default_a(probe)))


def H(u, P, alpha=None):
    """Activity reaction restricted to the tension nullcline."""
    u = np.asarray(u, dtype=float)
    return r(v_star(u, P), P) * G_alpha(u, P, alpha) - u


def H_prime0(P):
    """Closed-form H'(0) for alpha = 0."""
    return float(r(v_star(0.0, P), P)) - 1.0


def beta1_curve(rho, P):
    """beta where H'(0) = 0 at alpha = 0: ln(rho - 1) / (a_bar - v*(0))."""
    if rho <= 1:
        raise DomainError("beta1 exists only for rho > 1")
    gap = P.a_bar - float(v_star(0.0, P))
    if gap <= 0:
        raise DomainError("beta1 needs a_bar > v*(0)")
    return float(np.log(rho - 1.0) / gap)


def beta3_curve(rho, P):
    """beta where the origin's Jacobian trace vanishes at alpha = 0.

    Below this curve the non-excited state is an unstable node (trace > 0),
    between it and beta1 it is a saddle.
    """
    k2 = P.k2
    if rho <= 2 - k2:
        raise DomainError("beta3 exists only for rho > 2 - k2")
    gap = P.a_bar - float(v_star(0.0, P))
    if gap <= 0:
        raise DomainError("beta3 needs a_bar > v*(0)")
    return float(np.log(rho / (2.0 - k2) - 1.0) / gap)


def g_alpha(u, P, alpha=None):
    """Nullcline growth term without the decay: r(v*(u)) G_alpha(u)."""
    return r(v_star(u, P), P) * G_alpha(u, P, alpha)


def _scalar_g(P, a):
    # plain-float integrand for quad; same formula as g_alpha
    rho, beta, abar, k2, m, p = (float(P.rho), float(P.beta), float(P.a_bar),
                                 float(P.k2), float(P.m_bar), float(P.p))

    def g(s):
        if s <= a:
            return 0.0
        v = 1.0 / ((1.0 + m * s) ** (-p) - k2)
        z = min(max(beta * (v - abar), -EXP_CLAMP), EXP_CLAMP)
        return rho / (1.0 + math.exp(-z)) * (s - a) * (1.0 - s)
    return g


def _check_range(u_hi, P):
    if u_hi < 0:
        raise DomainError("u_hi must be >= 0")
    if u_hi >= u_bar(P):
        raise DomainError("integration range crosses the pole u_bar")


def F_potential(u_hi, P, alpha=None):
    """Integral of g_alpha over [0, u_hi] (no decay term)."""
    _check_range(u_hi, P)
    if u_hi == 0:
        return 0.0
    a = float(P.alpha if alpha is None else alpha)
    pts = [a] if 0 < a < u_hi else None
    val, _ = integrate.quad(_scalar_g(P, a), 0.0, u_hi,
                            points=pts, epsabs=1e-12, epsrel=1e-12, limit=200)
    return float(val)


def F_phi(u_hi, P, alpha=None):
    """Integral of H = g_alpha - u over [0, u_hi].

    Its sign at the excited state decides the direction of bistable fronts.
    """
    return F_potential(u_hi, P, alpha) - 0.5 * u_hi * u_hi


# --- root finding -------------------------------------------------------------

def _scan_limit(P):
    return min(1.0, float(u_bar(P))) - SCAN_EPS


def _classify(jac):
    tr, det = jac.trace, jac.det
    if abs(det) < DET_TOL:
        return Stability.DEGENERATE
    if tr < 0 and det > 0:
        return Stability.STABLE
    return Stability.UNSTABLE


def _state(u, P, alpha, double=False):
    v = float(v_star(u, P))
    jac = jacobian(u, v, P, alpha)
    stab = Stability.DEGENERATE if double else _classify(jac)
    return SteadyState(float(u), v, jac.trace, jac.det, stab, double)


def _root(f, a, b):
    try:
        return optimize.brentq(f, a, b, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise NumericalFailure("root polish failed", bracket=(a, b)) from exc


def nonzero_roots(P, alpha=None, cells=SCAN_CELLS):
    """Roots of H on (0, min(1, u_bar)) as ``(u, is_double)`` pairs, sorted."""
    a = P.alpha if alpha is None else alpha
    umax = _scan_limit(P)
    lo = a if a > 0 else 0.0
    if lo >= umax:
        return []
    f = lambda s: float(H(s, P, alpha))  # noqa: E731
    grid = np.linspace(lo, umax, cells + 1)
    vals = H(grid, P, alpha)
    # H(0) = 0 and H = -u on [0, alpha]: start strictly inside
    vals[0] = f(grid[0] + 1e-14) if lo == 0 else vals[0]
    roots = []
    sg = np.sign(vals)
    for i in np.flatnonzero(sg[1:-1] == 0) + 1:
        roots.append((float(grid[i]), False))
    for i in np.flatnonzero(sg[:-1] * sg[1:] < 0):
        roots.append((_root(f, grid[i], grid[i + 1]), False))
    # interior extrema of one sign that may hide a tangency or a close root pair
    d = np.diff(vals)
    turn = np.flatnonzero(d[:-1] * d[1:] < 0) + 1
    for i in turn:
        if not (sg[i - 1] == sg[i] == sg[i + 1] != 0):
            continue
        is_max = d[i - 1] > 0
        if (is_max and sg[i] > 0) or (not is_max and sg[i] < 0):
            continue
        sign = -1.0 if is_max else 1.0
        res = optimize.minimize_scalar(lambda s: sign * f(s), bounds=(grid[i - 1], grid[i + 1]),
                                       method="bounded", options={"xatol": 1e-13})
        xe, fe = float(res.x), f(float(res.x))
        if abs(fe) < DOUBLE_ROOT_TOL:
            roots.append((xe, True))
        elif np.sign(fe) != sg[i]:
            roots.append((_root(f, grid[i - 1], xe), False))
            roots.append((_root(f, xe, grid[i + 1]), False))
    roots.sort()
    # drop duplicates produced by sign-zero nodes
    out = []
    for u, d in roots:
        if out and abs(u - out[-1][0]) < 1e-10:
            continue
        out.append((u, d))
    return out


def find_steady_states(P, alpha=None):
    """All constant steady states of the local system, sorted by activity."""
    if np.any(np.asarray(P.k) != 0):
        raise DomainError("steady-state classification applies to the local system k = 0")
    states = [_state(0.0, P, alpha)]
    for u, double in nonzero_roots(P, alpha):
        states.append(_state(u, P, alpha, double))
    return states


def excited_state(P, alpha=None):
    """Largest stable non-zero steady state, or None."""
    stable = [s for s in find_steady_states(P, alpha)[1:] if s.stability is Stability.STABLE]
    return stable[-1] if stable else None


def classify_region(P):
    """Region label in the (rho, beta) diagram for P (k = 0)."""
    states = find_steady_states(P)
    n = len(states)
    a = float(P.alpha)
    if a >= 1.0:
        return RegionLabel("AlphaOne", "I", n)
    if a == 0:
        if n == 1:
            region = "I"
        elif n == 2:
            region = "IIa" if states[0].trace < 0 else "IIb"
        else:
            region = "IIIb" if F_phi(states[-1].u_c, P) > 0 else "IIIa"
        return RegionLabel("AlphaZero", region, n)
    if n == 1:
        region = "I"
    elif n == 2:
        region = "OnBeta1"
    else:
        region = "IIb" if F_phi(states[-1].u_c, P) > 0 else "IIa"
    return RegionLabel("AlphaMid", region, n)


def _classify_cell(args):
    P = args
    try:
        return classify_region(P), None
    except NumericalFailure as exc:
        return None, str(exc)


def default_workers():
    env = os.environ.get("RIOTWAVE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep_bifurcation(rho_grid, beta_grid, P_base, workers=1):
    """Classify every (rho, beta) cell; rows follow beta, columns follow rho."""
    rho_axis = np.asarray(rho_grid, dtype=float)
    beta_axis = np.asarray(beta_grid, dtype=float)
    if rho_axis.size == 0 or beta_axis.size == 0:
        raise ValueError("grids must be nonempty")
    jobs = [P_base.replace(rho=float(rh), beta=float(be)) for be in beta_axis for rh in rho_axis]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_classify_cell, jobs, chunksize=64))
    else:
        results = [_classify_cell(j) for j in jobs]
    labels, failures = [], {}
    nr = len(rho_axis)
    for i in range(len(beta_axis)):
        row = []
        for j in range(nr):
            lab, err = results[i * nr + j]
            row.append(lab)
            if err is not None:
                failures[(i, j)] = err
        labels.append(row)
    return BifurcationMap(rho_axis, beta_axis, labels, failures)


def extract_boundaries(bmap):
    """Boundary polylines between differently labeled neighbour cells.

    For each pair of regions, returns the midpoints between horizontally
    adjacent cells (one per beta row), sorted by beta.
    """
    reg = bmap.region_matrix()
    curves = {}
    for i, beta in enumerate(bmap.beta_axis):
        for j in range(len(bmap.rho_axis) - 1):
            a, b = reg[i, j], reg[i, j + 1]
            if a != b:
                key = f"{a}|{b}"
                rho_mid = 0.5 * (bmap.rho_axis[j] + bmap.rho_axis[j + 1])
                curves.setdefault(key, []).append([float(rho_mid), float(beta)])
    return curves
