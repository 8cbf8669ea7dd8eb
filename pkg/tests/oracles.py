"""Reference values computed without the package's own integration code.

Everything here goes through scipy.integrate.quad or mpmath so that the
tests compare two independent paths.
"""
import math

import mpmath as mp
import numpy as np
from scipy import integrate


def heat_1d(log_density, x, t, lo=-np.inf, hi=np.inf, points=None):
    """(4 pi t)^-1/2 int exp(-(x-y)^2/4t + log_density(y)) dy by scipy quad."""
    k = 1.0 / math.sqrt(4 * math.pi * t)

    def f(y):
        return math.exp(-(x - y) ** 2 / (4 * t) + log_density(y))

    if np.isinf(lo) or np.isinf(hi):
        # split at x so the peak is never missed
        a, _ = integrate.quad(f, lo, x, limit=400, epsabs=1e-15, epsrel=1e-12)
        b, _ = integrate.quad(f, x, hi, limit=400, epsabs=1e-15, epsrel=1e-12)
        return k * (a + b)
    v, _ = integrate.quad(f, lo, hi, points=points, limit=400, epsabs=1e-15, epsrel=1e-12)
    return k * v


def quadratic_growth(x, t, A):
    """Closed form for e^{A x^2} data in one dimension."""
    T = 1.0 / (4 * A)
    return math.sqrt(T / (T - t)) * math.exp(x * x / (4 * (T - t)))


def meps_1d(log_density, eps, lo=-np.inf, hi=np.inf):
    """(eps/pi)^{1/2} int exp(log_density(y) - eps y^2) dy for a positive density."""
    v, _ = integrate.quad(lambda y: math.exp(log_density(y) - eps * y * y), lo, hi,
                          limit=400, epsabs=1e-15, epsrel=1e-12)
    return math.sqrt(eps / math.pi) * v


def radial_annulus_trace(weights, inner, outer, t, N, dps=40):
    """u(0, t) for a sum of annulus indicators, by mpmath radial quadrature."""
    mp.mp.dps = dps
    q = mp.mpf(1) / (4 * mp.mpf(t))
    area = 2 * mp.pi ** (mp.mpf(N) / 2) / mp.gamma(mp.mpf(N) / 2)
    total = mp.mpf(0)
    for b, a, c in zip(weights, inner, outer):
        if b == 0:
            continue
        s = mp.sqrt(q)
        # substitute r = rho / sqrt(q) so the integrand lives on O(1) scales
        f = lambda rho: mp.exp(-rho ** 2) * rho ** (N - 1)
        lo, hi = mp.mpf(a) * s, mp.mpf(c) * s
        pts = [lo] + [p for p in (mp.mpf(1), mp.mpf(4), mp.mpf(10)) if lo < p < hi] + [hi]
        val = mp.quad(f, pts) / s ** N
        total += b * area * val
    return float((q / mp.pi) ** (mp.mpf(N) / 2) * total)


def heat_2d_radial(log_density, x, t):
    """u(x, t) in the plane for a radial density, by scipy dblquad in polar coordinates."""
    x1, x2 = float(x[0]), float(x[1])
    k = 1.0 / (4 * math.pi * t)

    def f(th, r):
        y1, y2 = r * math.cos(th), r * math.sin(th)
        return math.exp(-((x1 - y1) ** 2 + (x2 - y2) ** 2) / (4 * t) + log_density(r)) * r

    v, _ = integrate.dblquad(f, 0, 30, 0, 2 * math.pi, epsabs=1e-13, epsrel=1e-11)
    return k * v
