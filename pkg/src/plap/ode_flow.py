"""Spatially flat solutions of ``phi' + f(phi) = 0``.

``phi_a`` starts from ``phi(0) = a`` and is characterised by

    int_{phi_a(t)}^{a} ds / f(s) = t,

and, when ``J = int_1^inf ds/f`` is finite, the maximal solution ``phi_inf``
solves ``int_{phi_inf(t)}^{inf} ds / f(s) = t``. Both are obtained by
inverting the time integral with a bracketed root find in ``log(phi)``;
no time stepping is involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericalError, PreconditionError
from .nonlinearity import Nonlinearity, PowerLog, Tabulated, Verdict, classify_J

__all__ = ["MAX_SOLUTION", "FlatFlow", "phi", "phi_inf", "log_phi_inf", "phi_trace", "extinction_time", "time_to_reach"]

MAX_SOLUTION = math.inf
_QUAD = dict(epsabs=0.0, epsrel=1e-13, limit=500)
_LOG_XTOL = 1e-15


@dataclass(frozen=True)
class FlatFlow:
    """Flat solution with initial value ``a``; ``a = MAX_SOLUTION`` selects ``phi_inf``."""

    spec: Nonlinearity
    a: float

    def __post_init__(self):
        if not self.a >= 0:
            raise DomainError(f"initial value must be nonnegative, got {self.a}")
        if math.isinf(self.a):
            _require_J_finite(self.spec)

    @property
    def is_maximal(self) -> bool:
        return math.isinf(self.a)


def _require_J_finite(spec):
    verdict = classify_J(spec, evidence=False).verdict
    if verdict is not Verdict.FINITE:
        raise PreconditionError(f"the maximal solution needs J finite, classifier says {verdict.value}")


def _zero_level(spec: Nonlinearity) -> float:
    """Largest ``z`` with ``f = 0`` on ``[0, z]``; flows never cross it."""
    if isinstance(spec, Tabulated):
        s, v = np.asarray(spec.points, dtype=float).T
        zeros = s[v == 0.0]
        return float(zeros.max()) if v[0] == 0.0 and len(zeros) else 0.0
    return 0.0


def _log_inv_f(spec, z, x):
    """``log(e^x / f(z + e^x))``, the log of the integrand of ``int ds/f`` in ``x = log(s - z)``."""
    if isinstance(spec, PowerLog) and z == 0.0:
        # combined by hand so that the alpha x terms cancel exactly when alpha = 1
        out = (1.0 - spec.alpha) * x
        if spec.beta != 0.0:
            out -= spec.beta * math.log(np.logaddexp(0.0, x))
        return out
    with np.errstate(divide="ignore"):
        return x - math.log(float(spec.f(z + math.exp(x))))


def _segment_time(spec, z, x_lo, x_hi):
    """``int ds/f`` over ``s - z`` in ``[e^x_lo, e^x_hi]``."""
    if x_hi <= x_lo:
        return 0.0
    return integrate.quad(lambda x: math.exp(_log_inv_f(spec, z, x)), x_lo, x_hi, **_QUAD)[0]


def extinction_time(spec: Nonlinearity, a: float) -> float:
    """``int_0^a ds/f``: finite only for sublinear ``PowerLog`` (``alpha + beta < 1``).

    Tabulated nonlinearities are Lipschitz at their zero level, so they never
    extinguish.
    """
    if a == 0.0:
        return 0.0
    if isinstance(spec, PowerLog) and spec.alpha + spec.beta < 1.0:
        return integrate.quad(lambda x: math.exp(_log_inv_f(spec, 0.0, x)), -np.inf, math.log(a), **_QUAD)[0]
    return math.inf


def time_to_reach(spec: Nonlinearity, a: float, value: float) -> float:
    """``int_value^a ds/f``, the time the flow from ``a`` needs to reach ``value``."""
    z = _zero_level(spec)
    if value <= z:
        return math.inf if a > z else 0.0
    return _segment_time(spec, z, math.log(value - z), math.log(a - z))


def phi(flow: FlatFlow, t: float) -> float:
    """``phi_a(t)`` for ``t >= 0``."""
    if not t >= 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    if flow.is_maximal:
        return phi_inf(flow.spec, t)
    spec, a = flow.spec, float(flow.a)
    z = _zero_level(spec)
    if t == 0.0 or a <= z or float(spec.f(a)) == 0.0:
        return a
    if t >= extinction_time(spec, a):
        return 0.0
    x_hi = math.log(a - z)

    def resid(x):
        return _segment_time(spec, z, x, x_hi) - t

    # expand the lower bracket until the flow time exceeds t
    step = 1.0
    x_lo = x_hi - step
    while resid(x_lo) < 0.0:
        step *= 2.0
        x_lo = x_hi - step
        if x_lo < -745.0:
            return z
    x = optimize.brentq(resid, x_lo, x_hi, xtol=_LOG_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200)
    return z + math.exp(x)


def _tail_time_log(spec: Nonlinearity, log_S: float) -> float:
    """``int_S^inf ds/f`` for ``log S >= 1``."""
    if isinstance(spec, PowerLog) and spec.beta == 0.0:
        return math.exp((1.0 - spec.alpha) * log_S) / (spec.alpha - 1.0)
    if not isinstance(spec, PowerLog):
        raise PreconditionError("tail of 1/f needs a power-log nonlinearity")
    a, b = spec.alpha, spec.beta

    # s = exp(exp(y)) turns both power and log-power decay into fast decay in y;
    # for x = e^y > 40, log(1 + e^x) = x to double precision
    def g(y):
        if y > 700.0:
            return 0.0 if a > 1.0 else math.exp(y * (1.0 - b))
        x = math.exp(y)
        log_lf = y if x > 40.0 else math.log(np.logaddexp(0.0, x))
        return math.exp((1.0 - a) * x + y - b * log_lf)

    return integrate.quad(g, math.log(log_S), np.inf, **_QUAD)[0]


def _time_from_log(spec, x):
    """``int_{e^x}^inf ds/f``."""
    log_S = max(1.0, x + math.log(2.0))
    return _segment_time(spec, 0.0, x, log_S) + _tail_time_log(spec, log_S)


def log_phi_inf(spec: Nonlinearity, t: float) -> float:
    """``log phi_inf(t)``; stays finite where ``phi_inf`` itself overflows."""
    _require_J_finite(spec)
    if not t > 0:
        raise DomainError(f"time must be positive, got {t}")

    def resid(x):
        return _time_from_log(spec, x) - t

    lo, hi = -1.0, 1.0
    while resid(hi) > 0.0:
        lo, hi = hi, 2.0 * hi + 1.0
        if hi > 1e300:
            raise NumericalError(f"log phi_inf({t}) exceeds the floating range")
    while resid(lo) < 0.0:
        hi, lo = lo, 2.0 * lo - 1.0
    return optimize.brentq(resid, lo, hi, xtol=_LOG_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200)


def phi_inf(spec: Nonlinearity, t: float) -> float:
    """Maximal flat solution ``phi_inf(t)``, ``t > 0``; needs ``J`` finite."""
    x = log_phi_inf(spec, t)
    if x > 709.0:
        raise NumericalError(f"phi_inf({t}) = exp({x:.6g}) overflows", partial=x)
    return math.exp(x)


def phi_trace(flow: FlatFlow, times) -> np.ndarray:
    """``phi`` at each of ``times``."""
    return np.array([phi(flow, float(t)) for t in np.atleast_1d(times)])
