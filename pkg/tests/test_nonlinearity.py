import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from plap.errors import DomainError, NumericalError
from plap.nonlinearity import (
    PowerLog,
    Tabulated,
    Verdict,
    cfs_threshold,
    check_superadditive,
    classify,
    classify_CFS,
    classify_J,
    classify_K,
    from_dict,
    no_absorption,
    numeric_verdict,
    partial_integrals,
    tail_integral,
)


def expected_J(a, b):
    return a > 1 or (a == 1 and b > 1)


def expected_K(a, b, p):
    return a > p - 1 or (a == p - 1 and b > p)


def expected_CFS(a, p, N):
    return a < p * (1 + 1 / N) - 1


# --- evaluation ---------------------------------------------------------------


@pytest.mark.parametrize("alpha,beta", [(1.0, 0.0), (2.0, 1.0), (0.5, 2.0), (3.0, 3.5)])
def test_powerlog_values(alpha, beta):
    f = PowerLog(alpha, beta)
    s = np.array([0.0, 0.5, 1.0, 7.0])
    expect = s**alpha * np.log1p(s) ** beta
    assert np.allclose(f.f(s), expect, rtol=1e-14, atol=0)
    assert f.f(0.0) == 0.0


@pytest.mark.parametrize("alpha,beta", [(2.0, 0.0), (1.5, 1.0), (1.0, 2.0)])
def test_primitive_matches_quadrature(alpha, beta):
    f = PowerLog(alpha, beta)
    for s in (0.3, 2.0, 50.0):
        ref = integrate.quad(lambda x: x**alpha * math.log1p(x) ** beta, 0, s, epsabs=0, epsrel=1e-13)[0]
        assert f.F(s) == pytest.approx(ref, rel=1e-10)


@given(st.floats(0.01, 50.0), st.floats(0.5, 4.0), st.floats(0.0, 3.0))
@settings(max_examples=60, deadline=None)
def test_derivative_is_consistent(s, alpha, beta):
    f = PowerLog(alpha, beta)
    h = 1e-6 * s
    fd = (f.f(s + h) - f.f(s - h)) / (2 * h)
    assert float(f.df(s)) == pytest.approx(fd, rel=1e-5, abs=1e-12)


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        PowerLog(2.0).f(-1.0)


@pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (-1.0, 0.0), (1.0, -0.5)])
def test_invalid_exponents(alpha, beta):
    with pytest.raises(DomainError):
        PowerLog(alpha, beta)


def test_tabulated_is_monotone_and_flat_beyond_table():
    tab = Tabulated(((0.0, 0.0), (1.0, 1.0), (2.0, 4.0), (3.0, 9.0)))
    s = np.linspace(0, 3, 301)
    assert np.all(np.diff(tab.f(s)) >= -1e-15)
    assert tab.f(10.0) == pytest.approx(9.0)
    assert tab.F(4.0) == pytest.approx(tab.F(3.0) + 9.0)


def test_tabulated_inserts_origin():
    tab = Tabulated(((1.0, 1.0), (2.0, 3.0)))
    assert tab.points[0] == (0.0, 0.0)
    assert tab.f(0.0) == 0.0


def test_dict_round_trip():
    for spec in (PowerLog(1.5, 2.0), Tabulated(((0.0, 0.0), (1.0, 2.0))), no_absorption()):
        assert from_dict(spec.to_dict()) == spec


# --- growth classifiers --------------------------------------------------------


GRID = [
    (p, N, a, b)
    for p in (1.5, 2.0, 2.5, 3.0, 4.0)
    for N in (1, 2, 3)
    for a in (0.5, 1.0, 1.5, 2.0, 3.0)
    for b in (0.0, 0.5, 1.0, 1.5, 2.0, 3.5)
    if p > 2 * N / (N + 1)
]


@pytest.mark.parametrize("a,b", sorted({(a, b) for _, _, a, b in GRID}))
def test_classify_J_truth_table(a, b):
    got = classify_J(PowerLog(a, b), evidence=False).verdict
    assert got is (Verdict.FINITE if expected_J(a, b) else Verdict.INFINITE)


@pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 3.0, 4.0])
def test_classify_K_truth_table(p):
    for a in (0.5, 1.0, 1.5, 2.0, 3.0):
        for b in (0.0, 0.5, 1.0, 1.5, 2.0, 3.5):
            got = classify_K(PowerLog(a, b), p, evidence=False).verdict
            assert got is (Verdict.FINITE if expected_K(a, b, p) else Verdict.INFINITE), (a, b, p)


def test_classify_CFS_truth_table():
    for p, N, a, b in GRID:
        got = classify_CFS(PowerLog(a, b), p, N, evidence=False).verdict
        assert got is (Verdict.FINITE if expected_CFS(a, p, N) else Verdict.INFINITE), (p, N, a, b)


def test_boundary_cases():
    # alpha = 1: J finite only for beta > 1
    assert classify_J(PowerLog(1.0, 1.0), evidence=False).verdict is Verdict.INFINITE
    assert classify_J(PowerLog(1.0, 1.5), evidence=False).verdict is Verdict.FINITE
    # alpha = p - 1: K finite only for beta > p
    assert classify_K(PowerLog(2.0, 3.0), 3.0, evidence=False).verdict is Verdict.INFINITE
    assert classify_K(PowerLog(2.0, 3.5), 3.0, evidence=False).verdict is Verdict.FINITE
    # critical CFS exponent fails
    assert classify_CFS(PowerLog(cfs_threshold(3.0, 2)), 3.0, 2, evidence=False).verdict is Verdict.INFINITE


def test_cli_example_classification():
    rep = classify(PowerLog(2.0, 0.0), 3.0, 2)
    assert (rep.j_finite, rep.k_finite, rep.cfs_holds) == (Verdict.FINITE, Verdict.INFINITE, Verdict.FINITE)


def test_tabulated_is_undecided():
    tab = Tabulated(((0.0, 0.0), (1.0, 1.0), (10.0, 100.0)))
    assert classify_J(tab).verdict is Verdict.UNDECIDED
    assert classify_K(tab, 3.0).verdict is Verdict.UNDECIDED


def test_invalid_medium_rejected():
    with pytest.raises(DomainError):
        classify_CFS(PowerLog(2.0), 1.2, 3)


# log-borderline tails (alpha = 1) move too slowly for the decade rule
@pytest.mark.parametrize("a,b", [(2.0, 0.0), (0.5, 0.0), (3.0, 1.0), (0.5, 2.0)])
def test_numeric_evidence_agrees_with_closed_form(a, b):
    c = classify_J(PowerLog(a, b))
    if c.numeric is not Verdict.UNDECIDED:
        assert c.numeric is c.verdict


def test_partial_integrals_of_inverse_square():
    # int_1^M ds / s^2 = 1 - 1/M
    vals = partial_integrals(PowerLog(2.0), "J")
    for M, v in vals[1:12]:
        assert v == pytest.approx(1.0 - 1.0 / M, rel=1e-12)


def test_tail_integral_closed_form():
    assert tail_integral(lambda s: s**-3.0, 2.0) == pytest.approx(1 / 8, rel=1e-10)


def test_tail_integral_divergent_raises():
    with pytest.raises(NumericalError):
        tail_integral(lambda s: 1 / s, 1.0, decades=20)


def test_numeric_verdict_needs_data():
    assert numeric_verdict([(1, 0.0), (10, 1.0)]) is Verdict.UNDECIDED


def test_superadditivity():
    assert check_superadditive(PowerLog(3.0))
    assert check_superadditive(PowerLog(1.0, 2.0))
    res = check_superadditive(PowerLog(0.5))
    assert not res and res.counterexample is not None
