"""Regularised p-Laplacian flux shared by the elliptic and parabolic solvers."""
from __future__ import annotations

import numpy as np

# eps_flux = FLUX_REG_REL * (typical gradient scale) unless set explicitly
FLUX_REG_REL = 1e-8


def flux(D, p: float, eps: float):
    """``g_eps(D) = (D**2 + eps**2)**((p-2)/2) * D``."""
    D = np.asarray(D, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (D * D + eps * eps) ** ((p - 2.0) / 2.0) * D
    return np.where(D == 0.0, 0.0, out)


def dflux(D, p: float, eps: float):
    """``g_eps'(D) = (D**2 + eps**2)**((p-4)/2) * ((p-1) D**2 + eps**2)``."""
    D = np.asarray(D, dtype=float)
    s = D * D + eps * eps
    with np.errstate(divide="ignore", invalid="ignore"):
        out = s ** ((p - 4.0) / 2.0) * ((p - 1.0) * D * D + eps * eps)
    if p > 2.0:
        out = np.where(s == 0.0, 0.0, out)
    return out


def default_eps(gradient_scale: float) -> float:
    return FLUX_REG_REL * max(float(gradient_scale), 1e-300)
