"""Absorption nonlinearities and the integral growth conditions J, K and CFS.

Two families are supported:

* :class:`PowerLog` -- ``f(s) = s**alpha * ln(1 + s)**beta``
* :class:`Tabulated` -- a monotone (PCHIP) interpolant of a table of values,
  held constant beyond the last breakpoint.

The growth conditions are

.. math::

    J = \\int_1^\\infty \\frac{ds}{f(s)}, \\qquad
    K = \\int_1^\\infty \\frac{ds}{F(s)^{1/p}}, \\qquad
    \\int_1^\\infty s^{-p - p/N} f(s)\\,ds < \\infty \\quad (\\mathrm{CFS}).

For ``PowerLog`` the verdicts are decided from the exponents; the numeric
partial integrals are still reported as evidence.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate

from .errors import DomainError, NumericalError

__all__ = [
    "Nonlinearity",
    "PowerLog",
    "Tabulated",
    "no_absorption",
    "from_dict",
    "Verdict",
    "Classification",
    "ClassificationReport",
    "SuperadditivityResult",
    "eval_f",
    "eval_F",
    "classify_J",
    "classify_K",
    "classify_CFS",
    "classify",
    "check_superadditive",
    "partial_integrals",
    "tail_integral",
    "numeric_verdict",
    "cfs_threshold",
]

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
# cutoffs 10**0 .. 10**12 for tail evidence
EVIDENCE_DECADES = 12
_EXACT_TOL = 1e-12

_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)
_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


class Nonlinearity:
    """Base class for a continuous nondecreasing f with f(0) = 0."""

    family: str = ""

    def f(self, s):
        raise NotImplementedError

    def df(self, s):
        raise NotImplementedError

    def F(self, s):
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __call__(self, s):
        return self.f(s)


def _check_nonneg(s):
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("f is only defined on [0, inf); got a negative argument")
    return arr


def _as_output(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


@dataclass(frozen=True)
class PowerLog(Nonlinearity):
    """``f(s) = s**alpha * ln(s + 1)**beta`` with ``alpha > 0, beta >= 0``."""

    alpha: float
    beta: float = 0.0
    family: str = field(default="power_log", init=False, repr=False)

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be a positive real, got {self.alpha}")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be a nonnegative real, got {self.beta}")

    def f(self, s):
        arr = _check_nonneg(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = arr**self.alpha * np.log1p(arr) ** self.beta
        return _as_output(out, s)

    def df(self, s):
        # derivative on (0, inf); arguments <= 0 are moved to a tiny positive value
        arr = np.maximum(np.asarray(s, dtype=float), 1e-12)
        a, b = self.alpha, self.beta
        lg = np.log1p(arr)
        out = a * arr ** (a - 1.0) * lg**b
        if b != 0.0:
            out = out + b * arr**a * lg ** (b - 1.0) / (1.0 + arr)
        return _as_output(out, s)

    def log_f_of_log(self, x):
        """``log f(exp(x))``, stable for very large or very negative ``x``."""
        x = np.asarray(x, dtype=float)
        out = self.alpha * x
        if self.beta != 0.0:
            out = out + self.beta * np.log(np.logaddexp(0.0, x))
        return out

    def F(self, s):
        arr = _check_nonneg(s)
        if self.beta == 0.0:
            out = arr ** (self.alpha + 1.0) / (self.alpha + 1.0)
            return _as_output(out, s)
        flat = np.atleast_1d(arr).ravel()
        vals = np.array([_primitive_quad(self.f, float(v)) for v in flat])
        return _as_output(vals.reshape(np.shape(arr)), s)

    def to_dict(self) -> dict:
        return {"family": "power_log", "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True, eq=False)
class Tabulated(Nonlinearity):
    """Monotone piecewise-cubic interpolant through ``(s, f(s))`` pairs.

    A leading ``(0, 0)`` pair is inserted when the table starts above zero.
    Beyond the last breakpoint the function is held constant.
    """

    points: tuple
    family: str = field(default="tabulated", init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
            raise DomainError("tabulated nonlinearity needs a list of (s, f) pairs")
        if pts[0, 0] > 0:
            pts = np.vstack([[0.0, 0.0], pts])
        s, v = pts[:, 0], pts[:, 1]
        if s[0] != 0.0 or v[0] != 0.0:
            raise DomainError("table must satisfy f(0) = 0 with s >= 0")
        if np.any(np.diff(s) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if np.any(np.diff(v) < 0):
            raise DomainError("tabulated f must be nondecreasing")
        if len(s) == 1:
            s, v = np.array([0.0, 1.0]), np.array([0.0, 0.0])
        object.__setattr__(self, "points", tuple(map(tuple, np.column_stack([s, v]))))
        interp = interpolate.PchipInterpolator(s, v, extrapolate=False)
        object.__setattr__(self, "_s", s)
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_deriv", interp.derivative())
        object.__setattr__(self, "_anti", interp.antiderivative())

    @property
    def s_max(self) -> float:
        return float(self._s[-1])

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self._v == 0.0))

    def f(self, s):
        arr = _check_nonneg(s)
        inside = np.minimum(arr, self.s_max)
        out = np.asarray(self._interp(inside), dtype=float)
        return _as_output(np.maximum(out, 0.0), s)

    def df(self, s):
        arr = np.maximum(np.asarray(s, dtype=float), 0.0)
        out = np.where(arr < self.s_max, self._deriv(np.minimum(arr, self.s_max)), 0.0)
        return _as_output(np.asarray(out, dtype=float), s)

    def F(self, s):
        arr = _check_nonneg(s)
        inside = np.minimum(arr, self.s_max)
        out = np.asarray(self._anti(inside), dtype=float)
        out = out + self._v[-1] * np.maximum(arr - self.s_max, 0.0)
        return _as_output(out, s)

    def to_dict(self) -> dict:
        return {"family": "tabulated", "points": [list(p) for p in self.points]}

    def __eq__(self, other):
        return isinstance(other, Tabulated) and self.points == other.points

    def __hash__(self):
        return hash(self.points)


def no_absorption() -> Tabulated:
    """The trivial nonlinearity f = 0 (pure p-Laplacian diffusion)."""
    return Tabulated(((0.0, 0.0), (1.0, 0.0)))


def from_dict(data: dict) -> Nonlinearity:
    """Inverse of ``Nonlinearity.to_dict``."""
    family = data.get("family")
    if family == "power_log":
        return PowerLog(float(data["alpha"]), float(data.get("beta", 0.0)))
    if family == "tabulated":
        return Tabulated(tuple(tuple(map(float, p)) for p in data["points"]))
    if family == "zero":
        return no_absorption()
    raise DomainError(f"unknown nonlinearity family {family!r}")


def _primitive_quad(func, s: float) -> float:
    if s == 0.0:
        return 0.0
    val, err, info = _quad(func, 0.0, s)
    return val


def _quad(func, a, b, **kw):
    out = integrate.quad(
        func, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=400, full_output=1, **kw
    )
    val, err = out[0], out[1]
    if len(out) > 3 and err > max(1e3 * QUAD_EPSABS, 1e3 * QUAD_EPSREL * abs(val)):
        raise NumericalError(
            f"quadrature on [{a}, {b}] did not converge (error estimate {err:.3g})",
            partial=val,
            diagnostics={"error_estimate": err, "message": out[3]},
        )
    return val, err, out[2]


def eval_f(spec: Nonlinearity, s):
    """Evaluate f at ``s >= 0`` (scalar or array)."""
    return spec.f(s)


def eval_F(spec: Nonlinearity, s):
    """Evaluate the primitive ``F(s) = int_0^s f``.

    Closed form for pure powers, adaptive quadrature otherwise.
    """
    return spec.F(s)


# --------------------------------------------------------------------------
# growth conditions


class Verdict(str, enum.Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class Classification:
    """Verdict on one tail integral plus the numeric evidence behind it.

    ``tail_values`` holds ``(cutoff M, int_1^M g)`` pairs; ``numeric`` is the
    verdict of the decade-growth rule applied to them alone.
    """

    verdict: Verdict
    tail_values: list
    numeric: Verdict

    @property
    def finite(self) -> bool:
        return self.verdict is Verdict.FINITE


@dataclass(frozen=True)
class ClassificationReport:
    j_finite: Verdict
    k_finite: Verdict
    cfs_holds: Verdict
    tail_values: dict

    def to_dict(self) -> dict:
        return {
            "J": self.j_finite.value,
            "K": self.k_finite.value,
            "CFS": self.cfs_holds.value,
            "tail_values": {k: [list(p) for p in v] for k, v in self.tail_values.items()},
        }


def _close(a, b):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=_EXACT_TOL)


def cfs_threshold(p: float, N: int) -> float:
    """Largest power exponent for which CFS holds: ``p(1 + 1/N) - 1``."""
    return p * (1.0 + 1.0 / N) - 1.0


def _analytic_J(spec: PowerLog) -> Verdict:
    a, b = spec.alpha, spec.beta
    if _close(a, 1.0):
        return Verdict.FINITE if b > 1.0 + _EXACT_TOL else Verdict.INFINITE
    return Verdict.FINITE if a > 1.0 else Verdict.INFINITE


def _analytic_K(spec: PowerLog, p: float) -> Verdict:
    a, b = spec.alpha, spec.beta
    if _close(a, p - 1.0):
        return Verdict.FINITE if b > p + _EXACT_TOL else Verdict.INFINITE
    return Verdict.FINITE if a > p - 1.0 else Verdict.INFINITE


def _analytic_CFS(spec: PowerLog, p: float, N: int) -> Verdict:
    thr = cfs_threshold(p, N)
    if _close(spec.alpha, thr):
        # int s^-1 ln^beta(s+1) ds diverges for every beta >= 0
        return Verdict.INFINITE
    return Verdict.FINITE if spec.alpha < thr else Verdict.INFINITE


def _check_p(p):
    if not p > 1.0:
        raise DomainError(f"p must exceed 1, got {p}")


def _check_pN(p, N):
    _check_p(p)
    if int(N) != N or N < 1:
        raise DomainError(f"dimension must be a positive integer, got {N}")
    if not p > 2.0 * N / (N + 1.0):
        raise DomainError(f"need p > 2N/(N+1) = {2.0 * N / (N + 1.0):.6g}, got p = {p}")


def _evidence_cutoffs(spec: Nonlinearity) -> np.ndarray:
    top = EVIDENCE_DECADES
    if isinstance(spec, Tabulated):
        top = min(top, int(math.floor(math.log10(spec.s_max))) if spec.s_max >= 10 else 0)
    return 10.0 ** np.arange(0, top + 1)


def _log_integrand(spec: Nonlinearity, x: np.ndarray, kind: str, p=None, N=None):
    """``g(e^x) e^x`` for the J / CFS integrands, computed in logs."""
    s_log = x
    if isinstance(spec, PowerLog):
        lf = spec.log_f_of_log(x)
    else:
        with np.errstate(divide="ignore"):
            lf = np.log(spec.f(np.exp(x)))
    if kind == "J":
        return np.exp(s_log - lf)
    if kind == "CFS":
        return np.exp(s_log * (1.0 - p - p / N) + lf)
    raise ValueError(kind)


def _gl_nodes(a, b, order_x=_GL_X, order_w=_GL_W):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return mid + half * order_x, half * order_w


def partial_integrals(spec: Nonlinearity, kind: str, p: float = 2.0, N: int = 1):
    """Partial integrals ``int_1^M g(s) ds`` at decade cutoffs ``M``.

    ``kind`` is ``"J"``, ``"K"`` or ``"CFS"``. Each decade is integrated
    with 48-point Gauss-Legendre in the variable ``x = ln s``; for ``K`` the
    primitive F is accumulated panel by panel on the same nodes.
    Returns a list of ``(M, value)`` pairs starting with ``(1, 0)``.
    """
    cutoffs = _evidence_cutoffs(spec)
    xs = np.log(cutoffs)
    values = [0.0]
    if kind == "K":
        nodes, weights = [], []
        for a, b in zip(xs[:-1], xs[1:]):
            xn, wn = _gl_nodes(a, b)
            nodes.append(xn)
            weights.append(wn)
        if not nodes:
            return [(float(cutoffs[0]), 0.0)]
        xn_all = np.concatenate(nodes)
        F_nodes = _primitive_on_log_nodes(spec, xn_all)
        with np.errstate(divide="ignore", over="ignore"):
            g = np.exp(xn_all) / F_nodes ** (1.0 / p)
        n = len(_GL_X)
        for i, wn in enumerate(weights):
            values.append(values[-1] + float(np.dot(wn, g[i * n : (i + 1) * n])))
    else:
        for a, b in zip(xs[:-1], xs[1:]):
            xn, wn = _gl_nodes(a, b)
            values.append(values[-1] + float(np.dot(wn, _log_integrand(spec, xn, kind, p, N))))
    return [(float(m), float(v)) for m, v in zip(cutoffs, values)]


def _primitive_on_log_nodes(spec: Nonlinearity, x: np.ndarray) -> np.ndarray:
    """F(e^x) for increasing ``x >= 0``: F(1) plus panelwise Gauss-Legendre."""
    F1 = float(spec.F(1.0))
    edges = np.concatenate([[0.0], x])
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    pts = mid[:, None] + half[:, None] * _GL8_X[None, :]
    integrand = np.exp(pts) * spec.f(np.exp(pts))
    incr = (integrand * _GL8_W[None, :]).sum(axis=1) * half
    return F1 + np.cumsum(incr)


def numeric_verdict(tail_values) -> Verdict:
    """Decade-growth rule: divergent when the partial integral grows by more
    than 10% per decade over each of the last three decades."""
    vals = [v for _, v in tail_values]
    if len(vals) < 5:
        return Verdict.UNDECIDED
    growth = []
    for prev, cur in zip(vals[-4:-1], vals[-3:]):
        growth.append((cur - prev) / prev if prev > 0 else math.inf)
    return Verdict.INFINITE if all(g > 0.1 for g in growth) else Verdict.FINITE


def tail_integral(g, M: float, decades: int = 300) -> float:
    """``int_M^inf g(s) ds`` via ``s = 1/sigma`` on decade panels of (0, 1/M].

    Raises :class:`NumericalError` (with the partial sum) when the panel
    contributions have not become negligible after ``decades`` panels.
    """
    total = 0.0
    hi = 1.0 / M
    for _ in range(decades):
        lo = hi / 10.0

        def h(sig):
            return g(1.0 / sig) / (sig * sig)

        val, _, _ = _quad(h, lo, hi)
        total += val
        if abs(val) <= 1e-14 * abs(total):
            return total
        hi = lo
        if hi < 1e-300:
            break
    raise NumericalError("tail integral did not settle", partial=total)


def _classification(spec, kind, analytic, p=2.0, N=1, evidence=True):
    tv = partial_integrals(spec, kind, p, N) if evidence else []
    num = numeric_verdict(tv) if evidence else Verdict.UNDECIDED
    verdict = analytic if isinstance(spec, PowerLog) else Verdict.UNDECIDED
    return Classification(verdict=verdict, tail_values=tv, numeric=num)


def classify_J(spec: Nonlinearity, evidence: bool = True) -> Classification:
    """Is ``int_1^inf ds / f(s)`` finite?"""
    analytic = _analytic_J(spec) if isinstance(spec, PowerLog) else Verdict.UNDECIDED
    return _classification(spec, "J", analytic, evidence=evidence)


def classify_K(spec: Nonlinearity, p: float, evidence: bool = True) -> Classification:
    """Is ``int_1^inf ds / F(s)**(1/p)`` finite (Keller-Osserman)?"""
    _check_p(p)
    analytic = _analytic_K(spec, p) if isinstance(spec, PowerLog) else Verdict.UNDECIDED
    return _classification(spec, "K", analytic, p=p, evidence=evidence)


def classify_CFS(spec: Nonlinearity, p: float, N: int, evidence: bool = True) -> Classification:
    """Does ``int_1^inf s**(-p - p/N) f(s) ds`` converge?"""
    _check_pN(p, N)
    analytic = _analytic_CFS(spec, p, N) if isinstance(spec, PowerLog) else Verdict.UNDECIDED
    return _classification(spec, "CFS", analytic, p=p, N=N, evidence=evidence)


def classify(spec: Nonlinearity, p: float, N: int, evidence: bool = True) -> ClassificationReport:
    j = classify_J(spec, evidence)
    k = classify_K(spec, p, evidence)
    c = classify_CFS(spec, p, N, evidence)
    return ClassificationReport(
        j_finite=j.verdict,
        k_finite=k.verdict,
        cfs_holds=c.verdict,
        tail_values={"J": j.tail_values, "K": k.tail_values, "CFS": c.tail_values},
    )


@dataclass(frozen=True)
class SuperadditivityResult:
    holds: bool
    counterexample: tuple | None = None

    def __bool__(self):
        return self.holds


def check_superadditive(spec: Nonlinearity, sample_count: int = 61) -> SuperadditivityResult:
    """Test ``f(s + s') >= f(s) + f(s')`` on a log-spaced grid in (0, 1e6]^2."""
    if sample_count < 1:
        raise DomainError("sample_count must be at least 1")
    grid = np.geomspace(1e-6, 1e6, sample_count) if sample_count > 1 else np.array([1e6])
    fs = spec.f(grid)
    s, t = np.meshgrid(grid, grid, indexing="ij")
    fst = spec.f(s + t)
    bad = fst < fs[:, None] + fs[None, :] - 1e-12 * fst
    if not bad.any():
        return SuperadditivityResult(True, None)
    i, j = np.argwhere(bad)[0]
    return SuperadditivityResult(False, (float(grid[i]), float(grid[j])))
