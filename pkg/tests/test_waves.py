import numpy as np
import pytest
from hypothesis import given, strategies as st

from riotwave.equilibria import excited_state, normalized_params, v_star
from riotwave.errors import (FrontAbsentError, InsufficientDataError, InvalidParameterError,
                             NonMonotoneFrontError)
from riotwave.pde import Grid1D, ShockEvent
from riotwave.waves import (ExpDecayIC, FrontTrace, Motion, StepIC, estimate_speed,
                            extinction_experiment, front_position, initial_fields,
                            run_wave_batch)

G = Grid1D.from_length(20.0, dx=0.05)


def test_front_position_step():
    m = 100
    u = np.where(np.arange(G.n) <= m, 1.0, 0.0)
    xf = front_position(u, G, 0.5)
    assert G.x[m] <= xf <= G.x[m + 1]


@given(st.integers(20, 350))
def test_front_position_translates_by_dx(m):
    x = G.x
    u = 0.5 * (1 - np.tanh(x - x[m] - 0.013))
    u1 = np.roll(u, 1)
    u1[0] = u[0]
    assert front_position(u1, G, 0.3) - front_position(u, G, 0.3) == pytest.approx(G.dx, abs=1e-12)


def test_front_position_tanh():
    u = 0.4 * (1 - np.tanh(2.0 * (G.x - 7.30)))
    assert abs(front_position(u, G, 0.4) - 7.30) < G.dx / 2


def test_front_position_errors():
    with pytest.raises(FrontAbsentError):
        front_position(np.zeros(G.n), G, 0.5)
    bump = np.exp(-(G.x - 10) ** 2)
    with pytest.raises(NonMonotoneFrontError):
        front_position(bump, G, 0.5)
    assert front_position(bump, G, 0.5, mode="leading") > 10


def test_front_trace_validation():
    with pytest.raises(ValueError):
        FrontTrace([0, 1, 1], [0, 0, 0])
    with pytest.raises(ValueError):
        FrontTrace([0, 1], [0])


def test_estimate_speed_examples():
    t = np.linspace(0, 20, 81)
    est = estimate_speed(FrontTrace(t, 3.0 + 0.42 * t))
    assert est.c == pytest.approx(0.42, abs=1e-12) and est.r2 == pytest.approx(1.0)
    assert est.classification is Motion.ADVANCING
    assert estimate_speed(FrontTrace(t, np.full_like(t, 5.0))).classification is Motion.STATIONARY
    est = estimate_speed(FrontTrace(t, 10 - 0.1 * t))
    assert est.c < 0 and est.classification is Motion.RETREATING
    with pytest.raises(InsufficientDataError):
        estimate_speed(FrontTrace(t[:9], t[:9]))


@given(st.floats(-2, 2), st.floats(-50, 50))
def test_estimate_speed_shift_invariant(c, shift):
    t = np.linspace(0, 10, 41)
    x = 5 + c * t + 0.3 * np.exp(-t)
    a = estimate_speed(FrontTrace(t, x))
    b = estimate_speed(FrontTrace(t, x + shift))
    assert b.c == pytest.approx(a.c, abs=1e-9)
    assert 0 <= a.r2 <= 1
    assert (a.classification is Motion.STATIONARY) == (abs(a.c) < 5e-3)


def test_estimate_speed_discards_transient():
    t = np.linspace(0, 40, 161)
    x = 0.2 * t + 4 * np.exp(-t)
    est = estimate_speed(FrontTrace(t, x))
    assert est.transient_cut >= 12.0 and est.settled
    assert est.c == pytest.approx(0.2, abs=1e-6)


def test_initial_fields_on_nullcline():
    P = normalized_params(10.0, 8.0, D=0.0)
    u_star = excited_state(P).u_c
    u0, v0 = initial_fields(P, StepIC(5.0), G)
    assert u0.max() == pytest.approx(u_star)
    np.testing.assert_allclose(v0, v_star(u0, P))
    u0, v0 = initial_fields(P, ExpDecayIC(1.0, 5.0), G)
    assert u0[0] == 5.0
    np.testing.assert_allclose(v0, v_star(np.minimum(u0, u_star), P))
    with pytest.raises(InvalidParameterError):
        initial_fields(normalized_params(0.5, 1.0), StepIC(5.0), G)


def test_translation_invariance_of_measurement():
    P = normalized_params(10.0, 8.0, D=0.0)
    shift = 2.0
    a, b = run_wave_batch([P, P], [StepIC(25.0), StepIC(25.0 + shift)], length=60.0, t_end=30.0)
    assert not isinstance(a, Exception) and not isinstance(b, Exception)
    assert abs(b.estimate.c - a.estimate.c) < 1e-4
    n = min(len(a.trace), len(b.trace))
    np.testing.assert_allclose(b.trace.positions[:n] - a.trace.positions[:n], shift,
                               atol=a.grid.dx / 2)
    assert a.estimate.classification is Motion.ADVANCING
    assert a.monotone and a.translation_invariant


def test_extinction_region_one():
    P = normalized_params(0.5, 3.0)
    rep = extinction_experiment(P, t_end=40.0, n=200)
    assert rep.decayed and rep.u_bound_ok


def test_extinction_three_shocks():
    P = normalized_params(6.0, 8.0, alpha=1.0)
    shocks = [ShockEvent(t, x, A=2.0) for t, x in ((0.0, 5.0), (5.0, 10.0), (10.0, 15.0))]
    rep = extinction_experiment(P, shocks, t_end=40.0, n=200)
    assert all(rep.resumed) and rep.decayed
    assert rep.u_final < 1e-6 and rep.v_final_err < 1e-6
