import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plap.errors import DomainError, PreconditionError
from plap.nonlinearity import PowerLog, Tabulated, no_absorption
from plap.ode_flow import (
    FlatFlow,
    extinction_time,
    log_phi_inf,
    phi,
    phi_inf,
    phi_trace,
    time_to_reach,
)

SQUARE = PowerLog(2.0)


def test_square_oracle_on_grid():
    # phi' = -phi^2, phi(0) = a  =>  phi = a / (1 + a t)
    rng = np.random.default_rng(7)
    a_vals = 10 ** rng.uniform(-2, 3, 100)
    t_vals = 10 ** rng.uniform(-3, 2, 100)
    for a, t in zip(a_vals, t_vals):
        assert phi(FlatFlow(SQUARE, a), t) == pytest.approx(a / (1 + a * t), rel=1e-8)


@given(st.floats(0.01, 100.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
@settings(max_examples=60, deadline=None)
def test_semigroup_property(a, s, t):
    spec = PowerLog(1.5, 1.0)
    mid = phi(FlatFlow(spec, a), s)
    assert phi(FlatFlow(spec, mid), t) == pytest.approx(phi(FlatFlow(spec, a), s + t), rel=1e-8)


@pytest.mark.parametrize("t", [1e-3, 0.1, 1.0, 30.0])
def test_phi_inf_square(t):
    assert phi_inf(SQUARE, t) == pytest.approx(1.0 / t, rel=1e-8)


def test_phi_inf_cube():
    # phi' = -phi^3 from infinity: phi = (2 t)^(-1/2)
    for t in (0.01, 1.0, 9.0):
        assert phi_inf(PowerLog(3.0), t) == pytest.approx((2 * t) ** -0.5, rel=1e-8)


def test_maximal_flow_is_limit_of_large_data():
    spec = PowerLog(1.5, 1.0)
    big = phi(FlatFlow(spec, 1e8), 1.0)
    assert big <= phi_inf(spec, 1.0)
    assert big == pytest.approx(phi_inf(spec, 1.0), rel=1e-3)
    assert phi(FlatFlow(spec, math.inf), 1.0) == pytest.approx(phi_inf(spec, 1.0), rel=1e-14)


def test_flow_is_decreasing_in_time_and_increasing_in_data():
    spec = PowerLog(1.0, 2.0)
    times = np.linspace(0, 3, 31)
    trace = phi_trace(FlatFlow(spec, 5.0), times)
    assert trace[0] == 5.0
    assert np.all(np.diff(trace) < 0)
    assert np.all(phi_trace(FlatFlow(spec, 6.0), times) > trace)


def test_phi_inf_requires_J_finite():
    with pytest.raises(PreconditionError):
        phi_inf(PowerLog(1.0, 0.5), 1.0)


def test_log_phi_inf_for_slow_growth():
    # J barely finite: phi_inf(1) is astronomically large but its log is finite
    x = log_phi_inf(PowerLog(1.0, 1.1), 1.0)
    assert math.isfinite(x) and x > 100


def test_extinction_for_sublinear_absorption():
    # f = s^(1/2): phi = (sqrt(a) - t/2)^2 until t = 2 sqrt(a)
    spec = PowerLog(0.5)
    a = 4.0
    assert extinction_time(spec, a) == pytest.approx(4.0, rel=1e-10)
    assert phi(FlatFlow(spec, a), 1.0) == pytest.approx((2.0 - 0.5) ** 2, rel=1e-8)
    assert phi(FlatFlow(spec, a), 5.0) == 0.0


def test_no_extinction_for_superlinear():
    assert extinction_time(SQUARE, 1.0) == math.inf


def test_zero_absorption_is_constant():
    assert phi(FlatFlow(no_absorption(), 3.0), 10.0) == 3.0


def test_tabulated_linear_decay():
    # f = s on [0, 10]: exponential decay below the table edge
    tab = Tabulated(((0.0, 0.0), (10.0, 10.0)))
    assert phi(FlatFlow(tab, 2.0), 1.0) == pytest.approx(2.0 * math.exp(-1.0), rel=1e-6)


def test_time_to_reach_inverts_phi():
    spec = PowerLog(1.5, 1.0)
    t = time_to_reach(spec, 10.0, 2.0)
    assert phi(FlatFlow(spec, 10.0), t) == pytest.approx(2.0, rel=1e-10)


@pytest.mark.parametrize("a", [-1.0, float("nan")])
def test_invalid_initial_value(a):
    with pytest.raises(DomainError):
        FlatFlow(SQUARE, a)


def test_negative_time_rejected():
    with pytest.raises(DomainError):
        phi(FlatFlow(SQUARE, 1.0), -0.1)
