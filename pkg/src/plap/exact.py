"""Explicit solutions of the pure p-Laplacian evolution.

* the Barenblatt-Pattle fundamental solution ``v_k`` of mass ``k``
  (Gaussian heat kernel when ``p = 2``),
* the razor blade ``v_inf`` (``2N/(N+1) < p < 2``), i.e. the ``k -> inf``
  limit of ``v_k``, and the one-dimensional decay bound built on it,
* the inverse ``h_p`` of ``t -> |t|**(p-2) t``.

For ``p != 2``::

    v_k(r, t) = t**-lam * V(r / t**(lam/N)),
    V(xi)     = (C_k - d xi**(p/(p-1)))_+ ** ((p-1)/(p-2)),
    lam       = N / (N(p-2) + p),
    d         = (p-2)/p * (lam/N)**(1/(p-1)),
    C_k       = c(N, p) k**ell,  ell = p(p-2) lam / ((p-1) N).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError

__all__ = [
    "h_p",
    "sphere_area",
    "BarenblattParams",
    "RazorBladeParams",
    "barenblatt_params",
    "heat_kernel_params",
    "fundamental_params",
    "razor_blade_params",
    "eval_barenblatt",
    "eval_profile",
    "support_radius",
    "eval_razor_blade",
    "decay_bound",
    "profile_mass",
]


def h_p(t, p: float):
    """Inverse of ``s -> |s|**(p-2) s``: ``sign(t) |t|**(1/(p-1))``."""
    if not p > 1.0:
        raise DomainError(f"p must exceed 1, got {p}")
    t = np.asarray(t, dtype=float)
    out = np.sign(t) * np.abs(t) ** (1.0 / (p - 1.0))
    return float(out) if out.ndim == 0 else out


def sphere_area(N: int) -> float:
    """Area of the unit sphere in R^N (2 for N = 1)."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def _critical_p(N):
    return 2.0 * N / (N + 1.0)


@dataclass(frozen=True)
class BarenblattParams:
    """Constants of ``v_k``. For ``p = 2`` only ``lam = N/2`` is meaningful
    and ``C_k``, ``d``, ``ell`` are zero."""

    p: float
    N: int
    k: float
    lam: float
    d: float
    C_k: float
    ell: float
    mass_norm_c: float

    @property
    def gaussian(self) -> bool:
        return self.p == 2.0

    @property
    def exponent(self) -> float:
        """``(p-1)/(p-2)``, the power applied to the profile base."""
        return (self.p - 1.0) / (self.p - 2.0)

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    def with_mass(self, k: float) -> "BarenblattParams":
        return fundamental_params(self.p, self.N, k)


@dataclass(frozen=True)
class RazorBladeParams:
    p: float
    N: int
    lambda_N: float
    lambda_1: float


def _lam_d(p, N):
    lam = N / (N * (p - 2.0) + p)
    d = (p - 2.0) / p * (lam / N) ** (1.0 / (p - 1.0))
    return lam, d


def profile_mass(p: float, N: int, C: float) -> float:
    """``int_{R^N} V(xi) dxi`` for profile constant ``C``, by radial quadrature.

    For ``p > 2`` the integral runs over the support ``[0, (C/d)**(1/q)]``;
    for ``p < 2`` it is truncated where ``V < 1e-14 V(0)`` and the remaining
    power-law tail on ``[X, inf)`` is mapped to ``(0, 1]``.
    """
    lam, d = _lam_d(p, N)
    q = p / (p - 1.0)
    m = (p - 1.0) / (p - 2.0)
    area = sphere_area(N)

    def integrand(xi):
        base = C - d * xi**q
        if base <= 0.0:
            return 0.0
        return base**m * xi ** (N - 1)

    opts = dict(epsabs=0.0, epsrel=1e-13, limit=500)
    if p > 2.0:
        xi_max = (C / d) ** (1.0 / q)
        val = integrate.quad(integrand, 0.0, xi_max, **opts)[0]
        return area * val
    # p < 2: base grows, V decays like xi**(q m)
    scale = (C / -d) ** (1.0 / q)
    # V(X)/V(0) = (1 + (X/scale)^q)^m = 1e-14
    X = scale * ((1e-14) ** (1.0 / m) - 1.0) ** (1.0 / q)
    pts = scale * np.geomspace(1e-3, max(X / scale, 2e-3), 40)
    edges = np.concatenate([[0.0], pts])
    val = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val += integrate.quad(integrand, a, b, **opts)[0]
    # tail: xi = X/s, integrand ~ xi**gamma; the s**(-gamma-2) endpoint
    # singularity goes into an algebraic quadrature weight
    gamma = q * m + N - 1.0
    smooth = lambda s: integrand(X / s) * X * s**gamma if s > 0 else X ** (gamma + 1.0) * (-d) ** m
    tail = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(-gamma - 2.0, 0.0), **opts)[0]
    return area * (val + tail)


@functools.lru_cache(maxsize=256)
def _mass_norm_constant(p: float, N: int) -> float:
    """c(N, p): the profile constant giving unit mass.

    Substituting ``xi = C**(1/q) eta`` gives ``M(C) = C**(m + N/q) M(1)``, so
    one quadrature at ``C = 1`` fixes the constant.
    """
    q = p / (p - 1.0)
    m = (p - 1.0) / (p - 2.0)
    return profile_mass(p, N, 1.0) ** (-1.0 / (m + N / q))


def barenblatt_params(p: float, N: int, k: float) -> BarenblattParams:
    """Constants of the Barenblatt-Pattle solution with mass ``k`` (``p != 2``)."""
    if int(N) != N or N < 1:
        raise DomainError(f"dimension must be a positive integer, got {N}")
    N = int(N)
    if p == 2.0:
        raise DomainError("p = 2 is the Gaussian case; use heat_kernel_params")
    if not p > _critical_p(N):
        raise DomainError(f"need p > 2N/(N+1) = {_critical_p(N):.6g}, got {p}")
    if not k > 0:
        raise DomainError(f"mass must be positive, got {k}")
    lam, d = _lam_d(p, N)
    ell = p * (p - 2.0) * lam / ((p - 1.0) * N)
    c = _mass_norm_constant(float(p), N)
    return BarenblattParams(p=float(p), N=N, k=float(k), lam=lam, d=d, C_k=c * k**ell, ell=ell, mass_norm_c=c)


def heat_kernel_params(N: int, k: float) -> BarenblattParams:
    if not k > 0:
        raise DomainError(f"mass must be positive, got {k}")
    return BarenblattParams(p=2.0, N=int(N), k=float(k), lam=N / 2.0, d=0.0, C_k=0.0, ell=0.0, mass_norm_c=0.0)


def fundamental_params(p: float, N: int, k: float) -> BarenblattParams:
    """Either branch: heat kernel for ``p = 2``, Barenblatt otherwise."""
    if p == 2.0:
        return heat_kernel_params(N, k)
    return barenblatt_params(p, N, k)


def eval_profile(params: BarenblattParams, xi):
    """Self-similar profile ``V(xi)`` (``p != 2``)."""
    xi = np.asarray(xi, dtype=float)
    base = params.C_k - params.d * np.abs(xi) ** params.q
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(base > 0.0, np.maximum(base, 0.0) ** params.exponent, 0.0)
    return float(out) if out.ndim == 0 else out


def eval_barenblatt(params: BarenblattParams, r, t: float):
    """``v_k(r, t)``; exact zero outside the support when ``p > 2``."""
    if not t > 0:
        raise DomainError(f"time must be positive, got {t}")
    r = np.asarray(r, dtype=float)
    if params.gaussian:
        N = params.N
        out = params.k * (4.0 * math.pi * t) ** (-N / 2.0) * np.exp(-(r * r) / (4.0 * t))
    else:
        xi = r * t ** (-params.lam / params.N)
        out = t ** (-params.lam) * eval_profile(params, xi)
    return float(out) if np.ndim(out) == 0 else out


def support_radius(params: BarenblattParams, t: float) -> float:
    """Radius of the support of ``v_k(., t)``; ``math.inf`` when ``p <= 2``."""
    if not t > 0:
        raise DomainError(f"time must be positive, got {t}")
    if params.p <= 2.0:
        return math.inf
    return (params.C_k / params.d) ** ((params.p - 1.0) / params.p) * t ** (params.lam / params.N)


def razor_blade_params(p: float, N: int) -> RazorBladeParams:
    N = int(N)
    if not (_critical_p(N) < p < 2.0):
        raise DomainError(f"razor blade needs 2N/(N+1) < p < 2, got p = {p}, N = {N}")
    _, d = _lam_d(p, N)
    _, d1 = _lam_d(p, 1)
    expo = (p - 1.0) / (p - 2.0)
    return RazorBladeParams(p=float(p), N=N, lambda_N=(-d) ** expo, lambda_1=(-d1) ** expo)


def eval_razor_blade(params: RazorBladeParams, r, t):
    """``Lambda_N (t / r**p)**(1/(2-p))`` for ``r > 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("the razor blade is singular at r = 0")
    out = params.lambda_N * (np.asarray(t, dtype=float) / r**params.p) ** (1.0 / (2.0 - params.p))
    return float(out) if np.ndim(out) == 0 else out


def decay_bound(params: RazorBladeParams, r, t, R0: float):
    """``Lambda_1 (t / (r - R0)**p)**(1/(2-p))`` for ``r > R0``, ``inf`` otherwise.

    Pointwise bound for pure-diffusion solutions whose data live in ``B_R0``.
    """
    r = np.asarray(r, dtype=float)
    gap = r - R0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(
            gap > 0,
            params.lambda_1 * (np.asarray(t, dtype=float) / np.where(gap > 0, gap, 1.0) ** params.p)
            ** (1.0 / (2.0 - params.p)),
            np.inf,
        )
    return float(out) if np.ndim(out) == 0 else out

