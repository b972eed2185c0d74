"""Radial steady states of ``-Delta_p w + f(w) = 0``.

The regular solution with ``w(0) = a`` is the fixed point of

    w(r) = a + int_0^r h_p( s**(1-N) int_0^s tau**(N-1) f(w(tau)) dtau ) ds,

solved by Picard iteration on consecutive blocks of an adaptive radial grid.
Writing ``h_p(s**(1-N) Phi(s)) = s**(1/(p-1)) h_p(Phi(s)/s**N)`` moves the
coordinate singularity at ``r = 0`` into an explicit weight; both integrals
use product quadrature (exact weights against piecewise linear data), which
keeps the discrete solution above the explicit lower bound

    w(r) >= a + (p-1)/p * (f(a)/N)**(1/(p-1)) * r**(p/(p-1)).

Boundary blow-up approximants on annuli are computed by damped Newton on
the finite-difference two-point problem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import _flux
from .errors import DomainError, NumericalError, PreconditionError
from .exact import h_p
from .nonlinearity import Nonlinearity, PowerLog, Tabulated, Verdict, classify_K

__all__ = [
    "BLOWUP_THRESHOLD",
    "Global",
    "BlowupAt",
    "MaxRadiusReached",
    "SteadyProfile",
    "BlowupAnnulusProfile",
    "ContinuesGlobally",
    "BlowsUpAt",
    "picard_steady",
    "steady_residual",
    "lower_bound",
    "continuation_dichotomy",
    "blowup_annulus",
]

BLOWUP_THRESHOLD = 1e12
_BLOCK = 16
_MAXIT = 60
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
_GL_T = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class Global:
    """``r_max`` reached with finite values."""


@dataclass(frozen=True)
class BlowupAt:
    """Blow-up detected; ``radius`` is the last finite radius.

    ``reason`` is ``"threshold"`` when values passed ``BLOWUP_THRESHOLD`` and
    ``"step_collapse"`` when the step fell below the resolution of ``r``
    while ``r w'/w`` exceeded ``1e6``. The latter happens when blow-up is
    mild (``w ~ (a* - r)**-k`` with small ``k``) and the threshold would lie
    closer to ``a*`` than double precision can resolve.
    """

    radius: float
    reason: str = "threshold"


@dataclass(frozen=True)
class MaxRadiusReached:
    """Step refinement exhausted at ``radius`` without blow-up or reaching ``r_max``."""

    radius: float


@dataclass(frozen=True, eq=False)
class SteadyProfile:
    spec: Nonlinearity
    p: float
    N: int
    a: float
    r: np.ndarray
    w: np.ndarray
    status: object
    tol: float
    diagnostics: dict = field(default_factory=dict)

    def dw(self) -> np.ndarray:
        """``w'`` at the grid radii, from the inner integral."""
        return self.diagnostics["dw"]


@dataclass(frozen=True, eq=False)
class BlowupAnnulusProfile:
    spec: Nonlinearity
    p: float
    N: int
    eps: float
    R: float
    m: float
    r: np.ndarray
    w: np.ndarray
    newton_iterations: int
    residual: float


@dataclass(frozen=True)
class ContinuesGlobally:
    r_reached: float
    crossed_threshold: bool = False


@dataclass(frozen=True)
class BlowsUpAt:
    a_star: float


# --------------------------------------------------------------------------
# product quadrature weights on intervals [u, v]


def _inner_weights(u, v, N):
    """Weights ``(c0, c1)`` with ``int_u^v tau**(N-1) L(tau) dtau = c0 L(u) + c1 L(v)``."""
    h = v - u
    tau = u[:, None] + h[:, None] * _GL_T[None, :]
    k = tau ** (N - 1) * _GL_W[None, :]
    return h * (k * (1.0 - _GL_T)).sum(axis=1), h * (k * _GL_T).sum(axis=1)


def _outer_weights(u, v, gamma):
    """Weights for ``int_u^v s**gamma L(s) ds``; closed form near the origin."""
    h = v - u
    near = u < 16.0 * h
    s = u[:, None] + h[:, None] * _GL_T[None, :]
    k = s**gamma * _GL_W[None, :]
    d0 = h * (k * (1.0 - _GL_T)).sum(axis=1)
    d1 = h * (k * _GL_T).sum(axis=1)
    if np.any(near):
        un, vn, hn = u[near], v[near], h[near]
        m1 = (vn ** (gamma + 1.0) - un ** (gamma + 1.0)) / (gamma + 1.0)
        m2 = (vn ** (gamma + 2.0) - un ** (gamma + 2.0)) / (gamma + 2.0)
        d0[near] = (vn * m1 - m2) / hn
        d1[near] = (m2 - un * m1) / hn
    return d0, d1


def lower_bound(spec: Nonlinearity, p: float, N: int, a: float, r):
    """``a + (p-1)/p (f(a)/N)**(1/(p-1)) r**(p/(p-1))``."""
    r = np.asarray(r, dtype=float)
    fa = float(spec.f(a))
    return a + (p - 1.0) / p * (fa / N) ** (1.0 / (p - 1.0)) * r ** (p / (p - 1.0))


def _check_medium(p, N):
    if not p > 1.0:
        raise DomainError(f"p must exceed 1, got {p}")
    if int(N) != N or N < 1:
        raise DomainError(f"dimension must be a positive integer, got {N}")


# --------------------------------------------------------------------------
# Picard marching


def _picard_block(spec, p, N, r0, w0, Phi0, G0, h, n, tol):
    """Picard iteration for ``n`` nodes of step ``h`` after ``(r0, w0)``.

    Returns ``(r, w, Phi, G, iterations, history)``; ``w`` is ``None`` on
    failure (divergence, overflow or no convergence).
    """
    gamma = 1.0 / (p - 1.0)
    r = r0 + h * np.arange(1, n + 1)
    u = np.concatenate([[r0], r[:-1]])
    c0, c1 = _inner_weights(u, r, N)
    d0, d1 = _outer_weights(u, r, gamma)
    rN = r**N
    dw0 = r0**gamma * G0
    w = w0 + dw0 * (r - r0)
    f_prev0 = float(spec.f(max(w0, 0.0)))
    history = []
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, _MAXIT + 1):
            fv = np.asarray(spec.f(np.maximum(w, 0.0)), dtype=float)
            fl = np.concatenate([[f_prev0], fv[:-1]])
            Phi = Phi0 + np.cumsum(c0 * fl + c1 * fv)
            G = h_p(Phi / rN, p)
            Gl = np.concatenate([[G0], G[:-1]])
            w_new = w0 + np.cumsum(d0 * Gl + d1 * G)
            if not np.all(np.isfinite(w_new)):
                return r, None, None, None, it, history
            change = float(np.max(np.abs(w_new - w) / np.maximum(1.0, np.abs(w_new))))
            history.append(change)
            w = w_new
            if change < tol:
                return r, w, Phi, G, it, history
            if len(history) >= 4 and history[-1] > history[-2] > history[-3] > history[-4]:
                return r, None, None, None, it, history
    return r, None, None, None, _MAXIT, history


def _oscillating(history):
    """Last five changes neither decrease nor increase monotonically."""
    h = history[-5:]
    if len(h) < 5:
        return False
    d = np.sign(np.diff(h))
    return bool(np.any(d > 0) and np.any(d < 0))


def picard_steady(
    spec: Nonlinearity,
    p: float,
    N: int,
    a: float,
    r_max: float,
    tol: float = 1e-10,
    h_max: float | None = None,
    adaptive: bool = True,
    rel_step: float = 0.01,
) -> SteadyProfile:
    """Regular radial steady state ``w_a`` on ``[0, r_max]``.

    Parameters
    ----------
    tol
        Picard stopping rule: relative sup-change ``< tol * max(1, |w|)``.
    h_max
        Largest grid step (default ``r_max / 2000``).
    adaptive
        When true the step also tracks ``rel_step * w / w'``, which refines
        the grid automatically near a blow-up radius. When false the step is
        ``h_max`` everywhere unless a block fails to converge.

    Returns
    -------
    SteadyProfile
        With status ``Global``, ``BlowupAt`` (values passed ``1e12``) or
        ``MaxRadiusReached`` (step refinement exhausted).
    """
    _check_medium(p, N)
    N = int(N)
    if not a > 0:
        raise DomainError(f"center value must be positive, got {a}")
    if not r_max > 0:
        raise DomainError(f"r_max must be positive, got {r_max}")
    if h_max is None:
        h_max = r_max / 2000.0
    gamma = 1.0 / (p - 1.0)
    fa = float(spec.f(a))
    G_first = h_p(fa / N, p)
    # radius over which the lower bound doubles w
    c_lb = (p - 1.0) / p * G_first
    r_scale = (a / c_lb) ** ((p - 1.0) / p) if c_lb > 0 else math.inf

    rs, ws, Phis, Gs = [0.0], [float(a)], [0.0], [G_first]
    h_prev = None
    status = Global()
    last_history = []
    blocks = 0
    while rs[-1] < r_max:
        r0, w0 = rs[-1], ws[-1]
        if adaptive:
            dw = r0**gamma * Gs[-1]
            scale = min(w0 / dw if dw > 0 else math.inf, r0 + r_scale)
            h = min(h_max, rel_step * scale)
            if h_prev is not None:
                h = min(h, 2.0 * h_prev)
        else:
            h = h_max if h_prev is None else min(h_max, 2.0 * h_prev)
        n = _BLOCK
        if r0 + n * h >= r_max:
            n = max(1, math.ceil((r_max - r0) / h - 1e-9))
            h = (r_max - r0) / n
        while True:
            r, w, Phi, G, its, hist = _picard_block(spec, p, N, r0, w0, Phis[-1], Gs[-1], h, n, tol)
            if w is not None:
                break
            last_history = hist
            h *= 0.5
            n = _BLOCK
            if h < 1e-15 * max(1.0, r0):
                dw0 = r0**gamma * Gs[-1]
                if r0 * dw0 > 1e6 * w0:
                    status = BlowupAt(r0, reason="step_collapse")
                    break
                if _oscillating(hist):
                    raise NumericalError(
                        f"Picard iteration oscillates at r = {r0:.6g}",
                        partial=(np.array(rs), np.array(ws)),
                        diagnostics={"history": hist},
                    )
                status = MaxRadiusReached(r0)
                break
        if w is None:
            break
        blocks += 1
        over = np.nonzero(w > BLOWUP_THRESHOLD)[0]
        keep = len(w) if len(over) == 0 else over[0]
        rs.extend(r[:keep].tolist())
        ws.extend(w[:keep].tolist())
        Phis.extend(Phi[:keep].tolist())
        Gs.extend(G[:keep].tolist())
        if len(over):
            status = BlowupAt(rs[-1])
            break
        h_prev = h
    r_arr = np.array(rs)
    diagnostics = {
        "dw": r_arr**gamma * np.array(Gs),
        "inner_integral": np.array(Phis),
        "blocks": blocks,
        "last_history": last_history,
    }
    return SteadyProfile(spec, float(p), N, float(a), r_arr, np.array(ws), status, tol, diagnostics)


def steady_residual(profile: SteadyProfile) -> np.ndarray:
    """Relative residual ``(w - T w) / max(1, |w|)`` of the discrete fixed-point map."""
    spec, p, N, a = profile.spec, profile.p, profile.N, profile.a
    r, w = profile.r, profile.w
    u, v = r[:-1], r[1:]
    c0, c1 = _inner_weights(u, v, N)
    d0, d1 = _outer_weights(u, v, 1.0 / (p - 1.0))
    fv = np.asarray(spec.f(np.maximum(w, 0.0)), dtype=float)
    Phi = np.concatenate([[0.0], np.cumsum(c0 * fv[:-1] + c1 * fv[1:])])
    G = np.empty_like(w)
    G[0] = h_p(float(spec.f(a)) / N, p)
    G[1:] = h_p(Phi[1:] / r[1:] ** N, p)
    Tw = a + np.concatenate([[0.0], np.cumsum(d0 * G[:-1] + d1 * G[1:])])
    return (w - Tw) / np.maximum(1.0, np.abs(w))


def _tail_divergent(spec: Nonlinearity, p: float) -> bool:
    """Whether ``int^inf ds / (F(s) - F(w_b) + c)**(1/p)`` diverges, i.e. ``K = inf``."""
    if isinstance(spec, Tabulated):
        # bounded f: F grows at most linearly and 1/p < 1
        return True
    verdict = classify_K(spec, p, evidence=False).verdict
    if verdict is Verdict.UNDECIDED:
        raise PreconditionError("K could not be decided for this nonlinearity")
    return verdict is Verdict.INFINITE


def continuation_dichotomy(
    spec: Nonlinearity, p: float, N: int, a: float, r_max: float = 1e8, tol: float = 1e-8, rel_step: float = 0.05
):
    """Whether ``w_a`` continues to all radii or blows up at a finite ``a*``.

    The profile is marched with adaptive steps until ``r_max`` or until it
    passes the blow-up threshold at some radius ``r_b``. In the latter case
    the energy ``(p-1)/p |w'|**p - F(w)`` is nonincreasing in ``r``, so the
    remaining distance to blow-up is at least

        int_{w_b}^inf ds / (p/(p-1) (F(s) - F(w_b)) + |w'_b|**p)**(1/p),

    which is infinite exactly when ``K`` is infinite. A crossing with that
    tail divergent therefore still continues globally.
    """
    prof = picard_steady(spec, p, N, a, r_max, tol=tol, h_max=math.inf, adaptive=True, rel_step=rel_step)
    st = prof.status
    if isinstance(st, Global):
        return ContinuesGlobally(float(prof.r[-1]))
    if isinstance(st, BlowupAt):
        if _tail_divergent(spec, p):
            return ContinuesGlobally(float(prof.r[-1]), crossed_threshold=True)
        return BlowsUpAt(st.radius)
    raise NumericalError(
        f"could not continue w_a past r = {st.radius:.6g}", partial=prof, diagnostics=prof.diagnostics
    )


# --------------------------------------------------------------------------
# boundary blow-up approximants


def _annulus_residual(w_full, r, faces, dr, spec, p, N, eps):
    D = np.diff(w_full) / dr
    Phi = faces ** (N - 1) * _flux.flux(D, p, eps)
    ri = r[1:-1]
    res = -(Phi[1:] - Phi[:-1]) / dr + ri ** (N - 1) * np.asarray(spec.f(np.maximum(w_full[1:-1], 0.0)))
    return res, D


def blowup_annulus(
    spec: Nonlinearity,
    p: float,
    N: int,
    eps: float,
    R: float,
    m: float,
    grid_size: int = 400,
    initial=None,
    max_iter: int = 200,
    flux_reg: float | None = None,
) -> BlowupAnnulusProfile:
    """Solve ``-(r^(N-1)|w'|^(p-2)w')' + r^(N-1) f(w) = 0`` on ``[eps, R]``, ``w = m`` at both ends.

    Finite differences on ``grid_size`` uniform intervals; damped Newton with
    a tridiagonal Jacobian. Converged when the Newton correction drops below
    ``1e-8 (1 + m)`` in the sup norm. ``initial`` (interior or full values)
    supports continuation in ``m``; the default guess dips to ``m/2`` mid-way.
    """
    _check_medium(p, N)
    N = int(N)
    if not (0 < eps < R):
        raise DomainError(f"need 0 < eps < R, got eps={eps}, R={R}")
    if not m > 0:
        raise DomainError(f"boundary value must be positive, got {m}")
    if isinstance(spec, PowerLog) and classify_K(spec, p, evidence=False).verdict is not Verdict.FINITE:
        raise PreconditionError("boundary blow-up needs K finite")
    M = int(grid_size)
    r = np.linspace(eps, R, M + 1)
    dr = r[1] - r[0]
    faces = 0.5 * (r[1:] + r[:-1])
    if flux_reg is None:
        flux_reg = _flux.default_eps(m / (R - eps))
    # a flat guess has zero gradients, where the degenerate flux has zero
    # Jacobian; a half-depth dip keeps Newton away from that
    w = m * (1.0 - 0.5 * np.sin(np.pi * (r - eps) / (R - eps)))
    if initial is not None:
        init = np.asarray(initial, dtype=float)
        w[1:-1] = init[1:-1] if init.shape == w.shape else init
    w[0] = w[-1] = m
    ri = r[1:-1]
    res, D = _annulus_residual(w, r, faces, dr, spec, p, N, flux_reg)
    norm = float(np.max(np.abs(res)))
    step_tol = 1e-8 * (1.0 + m)
    for it in range(1, max_iter + 1):
        k = faces ** (N - 1) * _flux.dflux(D, p, flux_reg) / dr**2
        diag = k[:-1] + k[1:] + ri ** (N - 1) * np.asarray(spec.df(np.maximum(w[1:-1], 0.0)))
        ab = np.zeros((3, M - 1))
        ab[0, 1:] = -k[1:-1]
        ab[1] = diag
        ab[2, :-1] = -k[1:-1]
        try:
            delta = linalg.solve_banded((1, 1), ab, -res)
        except (linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(
                f"singular Newton system: {exc}", partial=w, diagnostics={"residual": norm, "iteration": it}
            ) from exc
        lam = 1.0
        while True:
            trial = w.copy()
            trial[1:-1] += lam * delta
            tres, tD = _annulus_residual(trial, r, faces, dr, spec, p, N, flux_reg)
            tnorm = float(np.max(np.abs(tres)))
            if np.isfinite(tnorm) and (tnorm < norm or lam * np.max(np.abs(delta)) < step_tol):
                break
            lam *= 0.5
            if lam < 1e-10:
                raise NumericalError(
                    "Newton stagnated on the annulus problem",
                    partial=w,
                    diagnostics={"residual": norm, "iteration": it},
                )
        w, res, D, norm = trial, tres, tD, tnorm
        if lam * np.max(np.abs(delta)) < step_tol:
            return BlowupAnnulusProfile(spec, float(p), N, float(eps), float(R), float(m), r, w, it, norm)
    raise NumericalError(
        f"Newton did not converge in {max_iter} iterations", partial=w, diagnostics={"residual": norm}
    )
