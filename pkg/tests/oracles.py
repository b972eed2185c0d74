"""Reference values computed independently of the package code paths."""
import math

from scipy import special


def beta_function_mass(p, N, C):
    """Mass of the Barenblatt profile with constant C, via Beta functions."""
    lam = N / (N * (p - 2.0) + p)
    d = (p - 2.0) / p * (lam / N) ** (1.0 / (p - 1.0))
    q = p / (p - 1.0)
    m = (p - 1.0) / (p - 2.0)
    area = 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)
    if p > 2.0:
        scale = (C / d) ** (1.0 / q)
        integral = special.beta(N / q, m + 1.0) / q
    else:
        scale = (C / -d) ** (1.0 / q)
        integral = special.beta(N / q, -m - N / q) / q
    return area * C**m * scale**N * integral
