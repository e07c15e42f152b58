import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from riotwave.equilibria import (F_potential, F_phi, H, H_prime0, REGION_CODES, Stability,
                                 beta1_curve, classify_region, default_a, excited_state,
                                 find_steady_states, normalized_params, sweep_bifurcation,
                                 u_bar, v_star)
from riotwave.errors import DomainError
from riotwave.model import Params, Phi, Psi, h


def test_v_star_examples():
    P = Params(rho=1, beta=1, a_bar=1, k2=0.5)
    assert v_star(0.0, P) == 2.0
    P = Params(rho=1, beta=1, a_bar=1, k2=0.25)
    assert v_star(1.0, P) == pytest.approx(4.0)
    assert v_star(0.1, P) < v_star(0.2, P)
    with pytest.raises(DomainError):
        v_star(u_bar(P), P)


def test_u_bar_examples():
    assert u_bar(Params(rho=1, beta=1, a_bar=1, k2=0.5)) == pytest.approx(1.0)
    assert u_bar(Params(rho=1, beta=1, a_bar=1, k2=0.25, m_bar=2, p=2)) == pytest.approx(0.5)
    assert 0 < u_bar(Params(rho=1, beta=1, a_bar=1, k2=1 - 1e-9)) < 1e-8


@given(st.floats(0.05, 0.95), st.floats(0.2, 5), st.floats(0.3, 4))
def test_h_at_pole_equals_k2(k2, m, p):
    P = Params(rho=1, beta=1, a_bar=1, k2=k2, m_bar=m, p=p)
    assert h(u_bar(P), P) == pytest.approx(k2, abs=1e-12)


def test_default_a_examples():
    P = Params(rho=1, beta=1, a_bar=0, k2=0.25)
    assert default_a(P) == pytest.approx(8 / 3)
    assert v_star(0.0, P) < default_a(P) < v_star(1.0, P)
    with pytest.raises(DomainError):
        default_a(Params(rho=1, beta=1, a_bar=0, k2=0.5))


def test_H_examples():
    P = normalized_params(1.0, 5.0)
    assert H(0.0, P) == 0.0
    u = np.linspace(1e-6, 1 - 1e-6, 2001)
    assert np.all(H(u, P) < 0)
    P = normalized_params(4.0, 2.0)
    eps = 1e-7
    fd = (H(eps, P) - H(0.0, P)) / eps
    assert H_prime0(P) == pytest.approx(fd, abs=1e-6)


@given(st.floats(0.01, 0.99), st.floats(0.5, 30), st.floats(0.1, 20))
def test_H_prime0_negative_for_positive_alpha(alpha, rho, beta):
    P = normalized_params(rho, beta, alpha=alpha)
    eps = 1e-9
    assert H(eps, P) < 0


def test_beta1_examples():
    P = normalized_params(2.0, 1.0)
    assert beta1_curve(2.0, P) == 0.0
    for rho in (2.5, 3.0, 10.0):
        Q = P.replace(rho=rho, beta=beta1_curve(rho, P))
        assert abs(H_prime0(Q)) < 1e-10
    assert beta1_curve(3.0, P) < beta1_curve(5.0, P)
    with pytest.raises(DomainError):
        beta1_curve(1.0, P)


def test_steady_state_examples():
    for beta in (0.5, 8.0):
        for alpha in (0.0, 0.4):
            s = find_steady_states(normalized_params(0.5, beta, alpha=alpha))
            assert len(s) == 1 and s[0].u_c == 0 and s[0].stability is Stability.STABLE
    states = find_steady_states(normalized_params(6.0, 8.0))
    assert [s.stability for s in states] == [Stability.STABLE, Stability.UNSTABLE, Stability.STABLE]
    assert len(find_steady_states(normalized_params(30.0, 2.0, alpha=1.0))) == 1


@given(st.floats(0.5, 30), st.floats(0.1, 20), st.floats(0, 0.9))
def test_steady_state_invariants(rho, beta, alpha):
    P = normalized_params(rho, beta, alpha=alpha)
    states = find_steady_states(P)
    assert 1 <= len(states) <= 3
    assert states[0].u_c == 0 and states[0].v_c == pytest.approx(1 / (1 - P.k2))
    for s in states:
        assert abs(Phi(s.u_c, s.v_c, P)) < 1e-10 and abs(Psi(s.u_c, s.v_c, P)) < 1e-10
        assert 0 <= s.u_c < min(1.0, u_bar(P))
        assert s.v_c == pytest.approx(float(v_star(s.u_c, P)), abs=1e-10)
        if s.stability is Stability.STABLE:
            assert s.trace < 0 and s.det > 0
        elif s.stability is Stability.UNSTABLE:
            assert s.det < 0 or s.trace > 0
    assert [s.u_c for s in states] == sorted(s.u_c for s in states)


def test_F_potential_examples():
    P = normalized_params(6.0, 8.0)
    assert F_potential(0.0, P) == 0.0
    assert F_potential(0.9, P, alpha=1.0) == 0.0
    us = np.linspace(0, 0.99, 30)
    vals = [F_potential(u, P, alpha=0.2) for u in us]
    assert np.all(np.diff(vals) >= -1e-14)
    with pytest.raises(DomainError):
        F_potential(1.5, Params(rho=6, beta=8, a_bar=2, k2=0.5))


@given(st.floats(0.5, 20), st.floats(0.1, 15), st.floats(0, 0.8), st.floats(0.05, 0.99))
def test_F_potential_matches_simpson(rho, beta, alpha, u_hi):
    P = normalized_params(rho, beta, alpha=alpha)
    from riotwave.equilibria import g_alpha
    xs = np.concatenate([np.linspace(0, min(alpha, u_hi), 2001),
                         np.linspace(min(alpha, u_hi), u_hi, 20001)[1:]])
    ref = integrate.simpson(g_alpha(np.linspace(0, min(alpha, u_hi), 2001), P), x=xs[:2001]) \
        + integrate.simpson(g_alpha(np.linspace(min(alpha, u_hi), u_hi, 20001), P),
                            x=np.linspace(min(alpha, u_hi), u_hi, 20001))
    assert F_potential(u_hi, P) == pytest.approx(ref, abs=1e-8)
    assert F_phi(u_hi, P) == pytest.approx(F_potential(u_hi, P) - u_hi ** 2 / 2, abs=1e-14)


def test_classify_examples():
    assert classify_region(normalized_params(0.5, 3.0)).region == "I"
    assert classify_region(normalized_params(0.5, 3.0, alpha=0.3)).region == "I"
    lab = classify_region(normalized_params(6.0, 8.0))
    assert lab.n_states == 3
    u_star = excited_state(normalized_params(6.0, 8.0)).u_c
    assert (lab.region == "IIIa") == (F_phi(u_star, normalized_params(6.0, 8.0)) < 0)
    lab = classify_region(normalized_params(10.0, 8.0))
    assert lab.region == "IIIb"


def test_small_sweep_properties():
    base = normalized_params(1.0, 1.0)
    bmap = sweep_bifurcation([0.8, 3.0, 8.0, 20.0], [0.5, 4.0, 10.0], base)
    reg = bmap.region_matrix()
    assert reg.shape == (3, 4)
    assert all(r == "I" for r in reg[:, 0])
    assert set(reg.ravel()) <= set(REGION_CODES)
    assert not bmap.failures
    again = sweep_bifurcation([0.8, 3.0, 8.0, 20.0], [0.5, 4.0, 10.0], base)
    assert (again.region_matrix() == reg).all()


def test_bifurcation_map_rejects_bad_axes():
    with pytest.raises(ValueError):
        sweep_bifurcation([], [1.0], normalized_params(1.0, 1.0))
    with pytest.raises(ValueError):
        sweep_bifurcation([2.0, 1.0], [1.0], normalized_params(1.0, 1.0))
