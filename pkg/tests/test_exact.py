import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from oracles import beta_function_mass
from plap.errors import DomainError
from plap.exact import (
    barenblatt_params,
    decay_bound,
    eval_barenblatt,
    eval_razor_blade,
    fundamental_params,
    h_p,
    profile_mass,
    razor_blade_params,
    sphere_area,
    support_radius,
)

CASES = [(3.0, 1), (3.0, 2), (4.0, 3), (2.5, 1), (1.5, 1), (1.5, 2), (1.6, 3), (1.2, 1)]


def radial_mass(params, t):
    N = params.N
    top = support_radius(params, t) if params.p > 2 else np.inf
    g = lambda r: sphere_area(N) * r ** (N - 1) * eval_barenblatt(params, r, t)
    cut = min(top, t ** (params.lam / N))
    pieces = [(0.0, cut), (cut, top)]
    return sum(integrate.quad(g, a, b, epsabs=0, epsrel=1e-10, limit=400)[0] for a, b in pieces)


@pytest.mark.parametrize("p,N", CASES)
def test_profile_mass_matches_beta_closed_form(p, N):
    for C in (0.3, 1.0, 2.7):
        assert profile_mass(p, N, C) == pytest.approx(beta_function_mass(p, N, C), rel=1e-12)


@pytest.mark.parametrize("p,N", CASES)
@pytest.mark.parametrize("k", [0.5, 1.0, 40.0])
def test_mass_equals_k(p, N, k):
    params = barenblatt_params(p, N, k)
    for t in (0.1, 1.0, 3.0):
        assert radial_mass(params, t) == pytest.approx(k, rel=1e-8)


def test_heat_kernel_mass_and_value():
    params = fundamental_params(2.0, 2, 3.0)
    assert radial_mass(params, 0.7) == pytest.approx(3.0, rel=1e-10)
    assert eval_barenblatt(params, 0.0, 1.0) == pytest.approx(3.0 / (4 * math.pi))


@pytest.mark.parametrize("p,N", [(3.0, 1), (1.5, 1), (4.0, 2)])
def test_pde_residual_vanishes(p, N):
    # v_t = r^(1-N) (r^(N-1) |v_r|^(p-2) v_r)_r checked by finite differences
    params = barenblatt_params(p, N, 1.0)
    t, dt, dr = 1.0, 1e-5, 1e-4
    rmax = support_radius(params, t) if p > 2 else 3.0
    for r in np.linspace(0.2, 0.8, 4) * rmax:
        vt = (eval_barenblatt(params, r, t + dt) - eval_barenblatt(params, r, t - dt)) / (2 * dt)

        def flux(x):
            d = (eval_barenblatt(params, x + dr, t) - eval_barenblatt(params, x - dr, t)) / (2 * dr)
            return x ** (N - 1) * abs(d) ** (p - 2) * d

        lap = (flux(r + dr) - flux(r - dr)) / (2 * dr) / r ** (N - 1)
        assert vt == pytest.approx(lap, rel=1e-4, abs=1e-8)


def test_support_and_scaling():
    params = barenblatt_params(3.0, 1, 1.0)
    for t in (0.5, 2.0):
        R = support_radius(params, t)
        assert eval_barenblatt(params, 0.999 * R, t) > 0
        assert eval_barenblatt(params, 1.001 * R, t) == 0.0
    assert support_radius(params, 2.0) / support_radius(params, 1.0) == pytest.approx(2 ** (params.lam / 1))
    assert support_radius(fundamental_params(1.5, 1, 1.0), 1.0) == math.inf


def test_known_constants():
    # p = 3, N = 1: lambda = 1/(1 + 3) = 1/4, d = (1/3) (1/4)^(1/2) = 1/6
    params = barenblatt_params(3.0, 1, 1.0)
    assert params.lam == pytest.approx(0.25, rel=1e-15)
    assert params.d == pytest.approx(1 / 6, rel=1e-15)


@pytest.mark.parametrize("p,N,k", [(3.0, 1, 0.0), (3.0, 0, 1.0), (1.2, 3, 1.0)])
def test_invalid_parameters(p, N, k):
    with pytest.raises(DomainError):
        barenblatt_params(p, N, k)


def test_razor_blade_constant():
    # Lambda_1 = (-d)^((p-1)/(p-2)) with p = 1.5, N = 1 equals 3
    assert razor_blade_params(1.5, 1).lambda_1 == pytest.approx(3.0, rel=1e-14)


def test_razor_blade_solves_pde():
    rb = razor_blade_params(1.5, 1)
    t, r, dt, dr = 0.8, 1.3, 1e-6, 1e-4
    vt = (eval_razor_blade(rb, r, t + dt) - eval_razor_blade(rb, r, t - dt)) / (2 * dt)

    def flux(x):
        d = (eval_razor_blade(rb, x + dr, t) - eval_razor_blade(rb, x - dr, t)) / (2 * dr)
        return abs(d) ** (1.5 - 2) * d

    lap = (flux(r + dr) - flux(r - dr)) / (2 * dr)
    assert vt == pytest.approx(lap, rel=1e-4)


@given(st.floats(0.01, 10.0))
@settings(max_examples=30, deadline=None)
def test_decay_bound_time_scaling(t):
    rb = razor_blade_params(1.5, 1)
    r = np.array([2.0, 5.0])
    ratio = decay_bound(rb, r, 2 * t, 1.0) / decay_bound(rb, r, t, 1.0)
    assert np.allclose(ratio, 2 ** (1 / (2 - 1.5)), rtol=1e-12)


def test_decay_bound_inside_is_infinite():
    rb = razor_blade_params(1.5, 1)
    assert decay_bound(rb, 0.5, 1.0, 1.0) == math.inf


def test_razor_blade_singular_at_origin():
    with pytest.raises(DomainError):
        eval_razor_blade(razor_blade_params(1.5, 1), 0.0, 1.0)


@given(st.floats(1e-3, 50.0), st.sampled_from([-1.0, 1.0]), st.floats(1.2, 5.0))
@settings(max_examples=50, deadline=None)
def test_h_p_inverts_the_power(mag, sign, p):
    s = sign * mag
    assert h_p(abs(s) ** (p - 2) * s, p) == pytest.approx(s, rel=1e-12)
