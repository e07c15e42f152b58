"""Explicit finite-difference solver for the non-dimensional system on a 1-D grid.

State arrays have shape ``(n,)`` or ``(B, n)``; in the batched case every
row is an independent simulation sharing grid, kernel, shocks and schedule
while parameters (see :func:`riotwave.model.stack_params`), the alpha field
and initial data may differ per row.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import signal

from .errors import BlowUpError, CFLError, DomainError, InvalidKernelError, ShapeError
from .model import EXP_CLAMP

CFL_FACTOR = 0.4
CLIP_FLOOR = -1e-12


class Boundary(enum.Enum):
    NO_FLUX = "NoFlux"
    PERIODIC = "Periodic"


@dataclass(frozen=True)
class Grid1D:
    n: int
    dx: float
    x0: float = 0.0
    boundary: Boundary = Boundary.NO_FLUX

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("grid needs at least 8 nodes")
        if not self.dx > 0:
            raise ValueError("dx must be > 0")
        if not isinstance(self.boundary, Boundary):
            object.__setattr__(self, "boundary", Boundary(self.boundary))

    @classmethod
    def from_length(cls, length, dx=None, n=None, x0=0.0, boundary=Boundary.NO_FLUX):
        """Grid covering [x0, x0 + length].

        NoFlux grids include both endpoints; periodic grids identify them.
        """
        boundary = Boundary(boundary)
        periodic = boundary is Boundary.PERIODIC
        if n is None:
            if dx is None:
                raise ValueError("give dx or n")
            cells = int(round(length / dx))
            n = cells if periodic else cells + 1
        dx = length / n if periodic else length / (n - 1)
        return cls(n=int(n), dx=float(dx), x0=float(x0), boundary=boundary)

    @property
    def periodic(self):
        return self.boundary is Boundary.PERIODIC

    @property
    def x(self):
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def length(self):
        return self.dx * (self.n if self.periodic else self.n - 1)

    @property
    def weights(self):
        """Trapezoid quadrature weights (uniform for periodic grids)."""
        w = np.full(self.n, self.dx)
        if not self.periodic:
            w[0] = w[-1] = 0.5 * self.dx
        return w

    def integrate(self, f):
        return np.asarray(f) @ self.weights

    def contains(self, x):
        lo = self.x0
        if self.periodic:
            return lo <= x < lo + self.length
        return lo - 1e-12 <= x <= lo + self.length + 1e-12

    def nearest(self, x):
        if not self.contains(x):
            raise DomainError(f"location {x!r} lies outside the grid")
        i = int(round((x - self.x0) / self.dx))
        return i % self.n if self.periodic else min(max(i, 0), self.n - 1)

    def cfl_dt(self, D):
        return CFL_FACTOR * self.dx ** 2 / max(1.0, float(np.max(D)))


def laplacian(f, g):
    """Second-order centered Laplacian along the last axis.

    NoFlux uses ghost reflection f[-1] = f[1], f[n] = f[n-2].
    """
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != g.n:
        raise ShapeError(f"expected last axis of length {g.n}, got {f.shape[-1]}")
    out = np.empty_like(f)
    out[..., 1:-1] = f[..., :-2] - 2.0 * f[..., 1:-1] + f[..., 2:]
    if g.periodic:
        out[..., 0] = f[..., -1] - 2.0 * f[..., 0] + f[..., 1]
        out[..., -1] = f[..., -2] - 2.0 * f[..., -1] + f[..., 0]
    else:
        out[..., 0] = 2.0 * (f[..., 1] - f[..., 0])
        out[..., -1] = 2.0 * (f[..., -2] - f[..., -1])
    out *= 1.0 / (g.dx * g.dx)
    return out


# --- non-local kernel ----------------------------------------------------------

@dataclass(frozen=True)
class KernelSpec:
    """Non-local interaction kernel.

    kind: "none", "gaussian" (param = sigma), "tophat" (param = radius) or
    "general" (matrix J[i, j] >= 0 given directly on the grid nodes).
    With ``normalize`` the translation-invariant profile is scaled to unit
    discrete mass on the lattice.
    """

    kind: str = "none"
    param: float = 1.0
    normalize: bool = True
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "tophat", "general"):
            raise InvalidKernelError(f"unknown kernel kind {self.kind!r}")
        if self.kind in ("gaussian", "tophat") and not self.param > 0:
            raise InvalidKernelError("kernel width must be > 0")
        if self.kind == "general":
            if self.matrix is None:
                raise InvalidKernelError("general kernel needs a matrix")
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise InvalidKernelError("kernel matrix must be square")
            if np.any(m < 0) or not np.all(np.isfinite(m)):
                raise InvalidKernelError("kernel entries must be finite and >= 0")

    def profile(self, z):
        z = np.abs(np.asarray(z, dtype=float))
        if self.kind == "gaussian":
            s = self.param
            out = np.exp(-0.5 * (z / s) ** 2) / (s * math.sqrt(2 * math.pi))
            return np.where(z <= 12 * s, out, 0.0)
        if self.kind == "tophat":
            return np.where(z <= self.param, 0.5 / self.param, 0.0)
        raise InvalidKernelError("profile is defined only for translation-invariant kernels")

    def offsets_weights(self, g):
        """Profile sampled at lattice offsets j*dx, |j| <= n-1."""
        j = np.arange(-(g.n - 1), g.n)
        w = self.profile(j * g.dx)
        if self.normalize:
            mass = w.sum() * g.dx
            if mass > 0:
                w = w / mass
        return j, w

    def wrapped(self, g):
        """Periodically summed kernel on n offsets (periodic grids)."""
        L = g.length
        reach = 12 * self.param if self.kind == "gaussian" else self.param
        images = int(math.ceil(reach / L)) + 1
        j = np.arange(g.n)
        kw = np.zeros(g.n)
        for m in range(-images, images + 1):
            kw += self.profile((j + m * g.n) * g.dx)
        if self.normalize:
            mass = kw.sum() * g.dx
            if mass > 0:
                kw = kw / mass
        return kw

    def dense(self, g):
        """Dense operator K with (K v)_i = sum_j K[i, j] v_j (weights included)."""
        if self.kind == "none":
            return np.zeros((g.n, g.n))
        if self.kind == "general":
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (g.n, g.n):
                raise ShapeError("kernel matrix does not match the grid")
            return m * g.weights[None, :]
        i = np.arange(g.n)
        if g.periodic:
            kw = self.wrapped(g)
            return kw[(i[:, None] - i[None, :]) % g.n] * g.dx
        j, w = self.offsets_weights(g)
        return w[(i[:, None] - i[None, :]) + (g.n - 1)] * g.weights[None, :]

    def row_sum_bound(self, g):
        """sup_i sum_j J(x_i, y_j) w_j, the discrete analogue of sup_x int J(x,y) dy."""
        if self.kind == "none":
            return 0.0
        return float(np.max(self.dense(g).sum(axis=1)))


class NonlocalOperator:
    """Applies k-free non-local integral to arrays along the last axis."""

    def __init__(self, ks, g):
        self.kind = ks.kind
        self.g = g
        self.M = ks.row_sum_bound(g) if ks.kind != "none" else 0.0
        if ks.kind == "general":
            self.K = ks.dense(g)
        elif ks.kind in ("gaussian", "tophat"):
            if g.periodic:
                self.kw_hat = sfft.rfft(ks.wrapped(g) * g.dx)
            else:
                _, self.w = ks.offsets_weights(g)
                self.weights = g.weights

    def __call__(self, v):
        if self.kind == "none":
            return np.zeros_like(v)
        if self.kind == "general":
            return v @ self.K.T
        g = self.g
        if g.periodic:
            return sfft.irfft(sfft.rfft(v, axis=-1) * self.kw_hat, n=g.n, axis=-1)
        wv = v * self.weights
        full = signal.fftconvolve(np.atleast_2d(wv), self.w[None, :], mode="full", axes=-1)
        out = full[:, g.n - 1: 2 * g.n - 1]
        return out.reshape(v.shape)


def nonlocal_term(v, ks, g):
    """Discrete integral of J(x, y) v(y) dy on the grid (without the factor k)."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != g.n:
        raise ShapeError(f"expected last axis of length {g.n}")
    return NonlocalOperator(ks, g)(v)


# --- environment and shocks ------------------------------------------------------

@dataclass(frozen=True)
class EnvironmentProfile:
    """Piecewise-constant alpha(x): pieces are (x_left, x_right, alpha).

    A node belongs to the piece with x_left <= x < x_right (up to 1e-9 dx);
    the last piece also owns its right end.
    """

    pieces: tuple

    def __post_init__(self):
        pieces = tuple((float(a), float(b), float(al)) for a, b, al in self.pieces)
        if not pieces:
            raise ValueError("environment needs at least one piece")
        for a, b, al in pieces:
            if not b > a:
                raise ValueError("environment pieces must have positive length")
            if not 0.0 <= al <= 1.0:
                raise ValueError("alpha must lie in [0,1]")
        for (_, b, _), (a2, _, _) in zip(pieces, pieces[1:]):
            if abs(b - a2) > 1e-12:
                raise ValueError("environment pieces must be contiguous")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def uniform(cls, alpha, g):
        return cls(((g.x0, g.x0 + g.length + g.dx, alpha),))

    def alpha_on(self, g):
        x = g.x
        eps = 1e-9 * g.dx
        lo, hi = self.pieces[0][0], self.pieces[-1][1]
        if x[0] < lo - eps or x[-1] > hi + eps:
            raise ValueError("environment pieces do not cover the grid")
        out = np.empty(g.n)
        assigned = np.zeros(g.n, dtype=bool)
        for k, (a, b, al) in enumerate(self.pieces):
            last = k == len(self.pieces) - 1
            m = (x >= a - eps) & ((x < b - eps) | (last & (x <= b + eps)))
            m &= ~assigned
            out[m] = al
            assigned |= m
        if not assigned.all():
            raise ValueError("environment pieces do not cover the grid")
        return out


@dataclass(frozen=True)
class ShockEvent:
    t: float
    x: float
    A: float | None = None

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("shock time must be >= 0")


def apply_shock(u, v, e, g, A_default=1.0):
    """Deposit a grid Dirac of mass A into v at the node nearest e.x.

    Returns new (u, v); the trapezoid integral of the increment equals A.
    """
    i = g.nearest(e.x)
    A = A_default if e.A is None else e.A
    v = np.array(v, dtype=float, copy=True)
    v[..., i] += A / g.weights[i]
    return np.array(u, dtype=float, copy=True), v


# --- time stepping -----------------------------------------------------------------

@dataclass
class Fields:
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def copy(self):
        return Fields(self.u.copy(), self.v.copy(), self.t)


class _Rhs:
    """Method-of-lines right-hand side with pre-broadcast coefficients."""

    def __init__(self, P, alpha, g, ks, reactions=True):
        self.g = g
        self.reactions = reactions
        self.rho, self.beta, self.abar = P.rho, P.beta, P.a_bar
        self.k, self.k2, self.D = P.k, P.k2, P.D
        self.m, self.p = P.m_bar, P.p
        self.alpha = np.asarray(alpha, dtype=float)
        self.alpha_zero = bool(np.all(self.alpha == 0))
        self.p_one = bool(np.all(np.asarray(self.p) == 1.0))
        self.has_D = bool(np.any(np.asarray(self.D) != 0))
        self.nl = NonlocalOperator(ks, g) if ks is not None and ks.kind != "none" else None
        self.has_k = self.nl is not None and bool(np.any(np.asarray(self.k) != 0))
        self.inv_dx2 = 1.0 / (g.dx * g.dx)

    def _lap(self, f):
        out = np.empty_like(f)
        out[..., 1:-1] = f[..., :-2] + f[..., 2:]
        out[..., 1:-1] -= 2.0 * f[..., 1:-1]
        if self.g.periodic:
            out[..., 0] = f[..., -1] - 2.0 * f[..., 0] + f[..., 1]
            out[..., -1] = f[..., -2] - 2.0 * f[..., -1] + f[..., 0]
        else:
            out[..., 0] = 2.0 * (f[..., 1] - f[..., 0])
            out[..., -1] = 2.0 * (f[..., -2] - f[..., -1])
        out *= self.inv_dx2
        return out

    def __call__(self, u, v):
        du = self._lap(u)
        dv = self._lap(v) * self.D if self.has_D else np.zeros_like(v)
        if self.has_k:
            dv += self.k * self.nl(v)
        if not self.reactions:
            return du, dv
        z = np.clip(self.beta * (v - self.abar), -EXP_CLAMP, EXP_CLAMP)
        rv = self.rho / (1.0 + np.exp(-z))
        if self.alpha_zero:
            G = u * (1.0 - u)
        else:
            G = np.where(u > self.alpha, (u - self.alpha) * (1.0 - u), 0.0)
        du += rv * G - u
        base = 1.0 + self.m * u
        hu = 1.0 / base if self.p_one else base ** (-self.p)
        dv -= (hu - self.k2) * v
        dv += 1.0
        return du, dv


def _floor(a, stats):
    neg = a < 0
    if neg.any():
        small = neg & (a >= CLIP_FLOOR)
        stats["clipped"] += int(small.sum())
        stats["violations"] += int((neg & ~small).sum())
        a[small] = 0.0
    return a


def _rk2(rhs, u, v, dt, stats):
    du, dv = rhs(u, v)
    um = u + 0.5 * dt * du
    vm = v + 0.5 * dt * dv
    du, dv = rhs(um, vm)
    un = u + dt * du
    vn = v + dt * dv
    return _floor(un, stats), _floor(vn, stats)


def _check_dt(dt, g, P):
    limit = g.cfl_dt(P.D)
    if dt > limit * (1 + 1e-12):
        raise CFLError(f"dt={dt!r} exceeds the stability bound {limit!r} = 0.4 dx^2 / max(1, D)")


def _alpha_field(P, env, g):
    if env is None:
        return np.asarray(P.alpha, dtype=float)
    if isinstance(env, EnvironmentProfile):
        return env.alpha_on(g)
    a = np.asarray(env, dtype=float)
    if a.shape[-1] != g.n:
        raise ShapeError("alpha field does not match the grid")
    if np.any((a < 0) | (a > 1)):
        raise ValueError("alpha must lie in [0,1]")
    return a


def step(F, P, env, ks, g, dt, reactions=True, stats=None):
    """One explicit midpoint (RK2) step; returns new Fields."""
    _check_dt(dt, g, P)
    rhs = _Rhs(P, _alpha_field(P, env, g), g, ks, reactions)
    stats = stats if stats is not None else {"clipped": 0, "violations": 0}
    u, v = _rk2(rhs, np.asarray(F.u, float), np.asarray(F.v, float), dt, stats)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise BlowUpError("non-finite state", t=F.t + dt)
    return Fields(u, v, F.t + dt)


@dataclass
class Snapshot:
    t: float
    u: np.ndarray
    v: np.ndarray


@dataclass
class Trajectory:
    grid: Grid1D
    snapshots: list
    kernel_bound: float
    stats: dict
    stopped_early: bool = False

    @property
    def times(self):
        return np.array([s.t for s in self.snapshots])

    @property
    def final(self):
        return self.snapshots[-1]

    def summary(self):
        rows = []
        for s in self.snapshots:
            rows.append({
                "t": s.t,
                "u_max": float(np.max(s.u)), "u_min": float(np.min(s.u)),
                "v_max": float(np.max(s.v)), "v_min": float(np.min(s.v)),
            })
        return {"kernel_row_sum_bound": self.kernel_bound,
                "clipped": self.stats["clipped"],
                "violations": self.stats["violations"],
                "snapshots": rows}


def simulate(u0, v0, P, g, t_end, *, env=None, kernel=None, shocks=(), snapshot_times=None,
             dt=None, reactions=True, stop=None, record=True):
    """Integrate from t = 0 to ``t_end``.

    Shocks at time t_i are applied before the step leaving t_i, and a
    snapshot requested at t_i records the post-shock state.  Steps are
    subdivided uniformly between consecutive event times so events are
    hit exactly.  ``stop(snapshot)`` may return True to end the run at a
    snapshot.  With ``record=False`` only the last snapshot is kept, which
    suits long runs observed through ``stop``.
    """
    u = np.array(u0, dtype=float, copy=True)
    v = np.array(v0, dtype=float, copy=True)
    if u.shape != v.shape or u.shape[-1] != g.n:
        raise ShapeError("initial u and v must share a shape ending in grid.n")
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    dt_max = g.cfl_dt(P.D) if dt is None else float(dt)
    _check_dt(dt_max, g, P)
    rhs = _Rhs(P, _alpha_field(P, env, g), g, kernel, reactions)
    kernel_bound = kernel.row_sum_bound(g) if kernel is not None else 0.0
    snaps = sorted(set(float(t) for t in (snapshot_times if snapshot_times is not None else [t_end])))
    if snaps and snaps[-1] > t_end + 1e-12:
        raise ValueError("snapshot times must not exceed t_end")
    shocks = sorted(shocks, key=lambda e: e.t)
    for e in shocks:
        g.nearest(e.x)
    events = sorted(set(snaps) | {float(e.t) for e in shocks if e.t <= t_end} | {float(t_end)})
    A_default = float(np.asarray(P.A_tilde).reshape(-1)[0])
    stats = {"clipped": 0, "violations": 0}
    out = []
    t = 0.0
    si = 0
    snap_set = set(snaps)
    stopped = False
    for te in events:
        if te > t:
            nsteps = max(1, int(math.ceil((te - t) / dt_max - 1e-9)))
            h = (te - t) / nsteps
            for _ in range(nsteps):
                u, v = _rk2(rhs, u, v, h, stats)
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                raise BlowUpError("non-finite state", t=te,
                                  u_max=float(np.nanmax(np.abs(u))), v_max=float(np.nanmax(np.abs(v))))
            t = te
        while si < len(shocks) and shocks[si].t <= t + 1e-12:
            u, v = apply_shock(u, v, shocks[si], g, A_default)
            si += 1
        if te in snap_set:
            snap = Snapshot(te, u.copy(), v.copy())
            if record or not out:
                out.append(snap)
            else:
                out[-1] = snap
            if stop is not None and stop(snap):
                stopped = True
                break
    return Trajectory(g, out, kernel_bound, stats, stopped)


def u_sup_level(P, alpha_min=0.0):
    """Largest root of rho G_alpha(u) = u: activity above it always decays.

    Holds whatever the tension, so it bounds the sup norm of u for all time.
    """
    rho = np.asarray(P.rho, dtype=float)
    a = np.asarray(alpha_min, dtype=float)
    # rho (u - a)(1 - u) = u  ->  rho u^2 - (rho (1 + a) - 1) u + rho a = 0
    b = rho * (1 + a) - 1.0
    disc = b * b - 4 * rho * rho * a
    root = np.where(disc >= 0, (b + np.sqrt(np.maximum(disc, 0))) / (2 * rho), 0.0)
    return np.maximum(root, 0.0)
