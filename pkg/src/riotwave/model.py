"""Model parameters and the pointwise reaction terms.

Non-dimensional system (one space dimension)::

    u_t = u_xx + r(v) G_alpha(u) - u
    v_t = D v_xx + k (J * v) - (h(u) - k2) v + 1 + shocks

Every function here broadcasts over numpy arrays.  ``Params`` fields are
normally floats; :func:`stack_params` builds a batched ``Params`` whose
fields are ``(B, 1)`` columns so that a single simulation can advance B
independent parameter sets on the same grid.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .errors import DomainError, InvalidParameterError

# exponent clamp for the sigmoid
EXP_CLAMP = 700.0

PARAM_KEYS = ("rho", "beta", "a_bar", "k", "k2", "D", "m_bar", "p", "alpha", "A_tilde")


def _check(name, ok, message):
    if not np.all(ok):
        raise InvalidParameterError(name, message)


@dataclass(frozen=True)
class Params:
    """Non-dimensional model constants.

    rho: self-reinforcement strength; beta: sigmoid sharpness; a_bar:
    critical tension; k: non-local coupling; k2: tension growth offset;
    D: tension/activity diffusivity ratio; m_bar, p: shape of the tension
    decay h; alpha: restriction-of-information level; A_tilde: shock size.
    """

    rho: float
    beta: float
    a_bar: float
    k: float = 0.0
    k2: float = 0.25
    D: float = 1.0
    m_bar: float = 1.0
    p: float = 1.0
    alpha: float = 0.0
    A_tilde: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not np.all(np.isfinite(val)):
                raise InvalidParameterError(f.name, "must be finite")
        _check("rho", np.asarray(self.rho) > 0, "rho must be > 0")
        _check("beta", np.asarray(self.beta) > 0, "beta must be > 0")
        _check("D", np.asarray(self.D) >= 0, "D must be >= 0")
        _check("k", np.asarray(self.k) >= 0, "k must be >= 0")
        _check("m_bar", np.asarray(self.m_bar) > 0, "m_bar must be > 0")
        _check("p", np.asarray(self.p) > 0, "p must be > 0")
        _check("A_tilde", np.asarray(self.A_tilde) >= 0, "A_tilde must be >= 0")
        a = np.asarray(self.alpha)
        _check("alpha", (a >= 0) & (a <= 1), "alpha must lie in [0,1]")
        k2 = np.asarray(self.k2)
        _check("k2", (k2 > 0) & (k2 < 1), "k2 must lie in (0,1)")

    @property
    def batched(self):
        return np.ndim(self.rho) > 0

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        if self.batched:
            raise TypeError("batched Params cannot be serialized")
        return {k: float(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(PARAM_KEYS)
        if unknown:
            raise InvalidParameterError(sorted(unknown)[0], "unknown parameter key")
        return cls(**{k: float(v) for k, v in d.items()})


def stack_params(plist):
    """Batch a sequence of scalar Params into one Params of (B, 1) columns."""
    plist = list(plist)
    if not plist:
        raise ValueError("empty parameter list")
    cols = {}
    for key in PARAM_KEYS:
        cols[key] = np.array([getattr(p, key) for p in plist], dtype=float)[:, None]
    return Params(**cols)


def unstack_params(P):
    """Inverse of :func:`stack_params`."""
    if not P.batched:
        return [P]
    B = np.shape(P.rho)[0]
    return [Params(**{k: float(np.asarray(getattr(P, k)).reshape(-1)[i]) for k in PARAM_KEYS})
            for i in range(B)]


@dataclass(frozen=True)
class DimensionalParams:
    """Constants of the dimensional model (units in the field comments)."""

    D1: float        # activity diffusivity, length^2/time
    D2: float        # tension diffusivity, length^2/time
    kappa: float     # non-local coupling, 1/time
    omega: float     # activity decay rate, 1/time
    theta: float     # baseline tension decay, 1/time
    eta: float       # tension growth offset, 1/time
    gamma: float     # transition amplitude, 1/time
    beta_dim: float  # transition sharpness, 1/tension
    a_dim: float     # critical tension
    m_dim: float     # inverse activity scale
    p: float
    z0: float        # activity carrying capacity
    v_b: float       # base tension source
    A0: float        # shock amplitude
    alpha_dim: float = 0.0  # ignition threshold, activity units

    def validate(self):
        for name in ("D1", "omega", "theta", "eta", "gamma", "beta_dim",
                     "a_dim", "m_dim", "p", "z0", "v_b"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise InvalidParameterError(name, "must be finite and > 0")
        for name in ("D2", "kappa", "A0", "alpha_dim"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val >= 0):
                raise InvalidParameterError(name, "must be finite and >= 0")
        if not self.omega > self.theta:
            raise InvalidParameterError("omega", "requires omega > theta (time-scale ordering)")
        if not self.eta < self.omega:
            raise InvalidParameterError("eta", "requires eta < omega so that k2 < 1")
        if self.alpha_dim > self.z0:
            raise InvalidParameterError("alpha_dim", "ignition threshold exceeds carrying capacity")


def nondimensionalize(dp):
    """Map dimensional constants to :class:`Params`.

    Time is scaled by 1/omega, length by sqrt(D1/omega), activity by z0 and
    tension by v_b/omega.  theta is absorbed so that h(0) = 1.
    """
    dp.validate()
    return Params(
        rho=dp.gamma / dp.omega,
        beta=dp.beta_dim * dp.v_b / dp.omega,
        a_bar=dp.a_dim * dp.omega / dp.v_b,
        k=dp.kappa * dp.v_b / dp.omega,
        k2=dp.eta / dp.omega,
        D=dp.D2 / dp.D1,
        m_bar=dp.m_dim * dp.z0,
        p=dp.p,
        alpha=dp.alpha_dim / dp.z0,
        A_tilde=dp.A0 / dp.v_b,
    )


# --- pointwise nonlinearities -------------------------------------------------

def _sigmoid(P, v):
    z = np.clip(P.beta * (np.asarray(v, dtype=float) - P.a_bar), -EXP_CLAMP, EXP_CLAMP)
    return 1.0 / (1.0 + np.exp(-z))


def r(v, P):
    """Transition rate rho / (1 + exp(-beta (v - a_bar)))."""
    return P.rho * _sigmoid(P, v)


def r_prime(v, P):
    s = _sigmoid(P, v)
    return P.rho * P.beta * s * (1.0 - s)


def _require_nonneg(u, name="u"):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise DomainError(f"{name} must be >= 0, got min {float(np.min(u))!r}")
    return u


def h(u, P):
    """Tension decay 1 / (1 + m_bar u)^p, defined for u >= 0."""
    u = _require_nonneg(u)
    return (1.0 + P.m_bar * u) ** (-P.p)


def h_prime(u, P):
    u = _require_nonneg(u)
    return -P.p * P.m_bar * (1.0 + P.m_bar * u) ** (-P.p - 1.0)


def _alpha(P, alpha):
    return P.alpha if alpha is None else alpha


def G_alpha(u, P, alpha=None):
    """Ignition growth: 0 on [0, alpha], (u - alpha)(1 - u) beyond.

    ``alpha`` overrides ``P.alpha`` (used for heterogeneous environments).
    """
    u = _require_nonneg(u)
    a = _alpha(P, alpha)
    return np.where(u > a, (u - a) * (1.0 - u), 0.0)


def G_alpha_prime(u, P, alpha=None):
    """Derivative of G_alpha; the right-hand value 1 - alpha is used at u = alpha.

    Returns ``(value, one_sided)`` where ``one_sided`` is True if any point
    sat exactly on the kink of a strictly positive alpha.
    """
    u = _require_nonneg(u)
    a = _alpha(P, alpha)
    val = np.where(u >= a, 1.0 + a - 2.0 * u, 0.0)
    one_sided = bool(np.any((u == a) & (np.asarray(a) > 0)))
    return val, one_sided


def Phi(u, v, P, alpha=None):
    """Activity reaction r(v) G_alpha(u) - u."""
    u = _require_nonneg(u)
    return r(v, P) * G_alpha(u, P, alpha) - u


def Psi(u, v, P):
    """Tension reaction -(h(u) - k2) v + 1."""
    return -(h(u, P) - P.k2) * np.asarray(v, dtype=float) + 1.0


@dataclass(frozen=True)
class Jacobian:
    """Linearization of (Phi, Psi) at one point."""

    matrix: np.ndarray
    one_sided: bool = False

    @property
    def trace(self):
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def det(self):
        m = self.matrix
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    @property
    def eigenvalues(self):
        return np.linalg.eigvals(self.matrix)


def jacobian(u, v, P, alpha=None):
    """2x2 Jacobian [[Phi_u, Phi_v], [Psi_u, Psi_v]] at scalar (u, v)."""
    u = float(u)
    v = float(v)
    if u < 0:
        raise DomainError("u must be >= 0")
    gp, one_sided = G_alpha_prime(u, P, alpha)
    m = np.array([
        [float(r(v, P) * gp) - 1.0, float(r_prime(v, P) * G_alpha(u, P, alpha))],
        [float(-h_prime(u, P) * v), float(-(h(u, P) - P.k2))],
    ])
    return Jacobian(m, one_sided)
