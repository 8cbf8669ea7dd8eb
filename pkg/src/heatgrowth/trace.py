"""Solutions with a prescribed value at the origin.

For a real-analytic gamma the even series

    u(x, t) = sum_k gamma^(k)(t) x^(2k) / (2k)!

solves u_t = u_xx with u(0, t) = gamma(t).  gamma is given by its Taylor
coefficients alpha_k = gamma^(k)(0) together with constants (C, tau) such
that |gamma^(k)(0)| <= C k! tau^-k; these certify every truncation.

On the disc about t < tau the same bound holds with C' = C tau/(tau - t)
and tau' = tau - t, which is what the tail estimates use away from t = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import InconsistentBound, InvalidSpec, TailNotClosed
from .kernel import SolutionValue
from .quadrature import DEFAULT_CONFIG, QuadratureConfig

__all__ = [
    "TraceSeries",
    "InitialData",
    "build_trace_solution",
    "eval_trace_solution",
    "initial_data_of_trace",
    "verify_trace",
    "write_trace_csv",
]

INNER_CAP = 4000


@dataclass(frozen=True)
class TraceSeries:
    """Even-power series solution attached to gamma.

    ``gamma_coeffs`` is either a finite tuple (gamma is then a polynomial),
    a tuple repeated cyclically when ``periodic`` is set (e.g. (1,) for
    e^t, (1, 0, -1, 0) for cos t), or a callable k -> alpha_k.
    """

    gamma_coeffs: Union[tuple, Callable[[int], float]]
    C: float
    tau: float
    T: float = math.inf
    truncation: int = 64
    periodic: bool = False
    dimension: int = 1

    def alpha(self, k: int) -> float:
        g = self.gamma_coeffs
        if callable(g):
            return float(g(k))
        if self.periodic:
            return g[k % len(g)]
        return g[k] if k < len(g) else 0.0

    @property
    def finite(self) -> bool:
        return not callable(self.gamma_coeffs) and not self.periodic

    @property
    def degree(self):
        """Degree of gamma when it is a polynomial, else None."""
        if not self.finite:
            return None
        nz = [k for k, a in enumerate(self.gamma_coeffs) if a != 0]
        return nz[-1] if nz else 0

    def envelope(self, t):
        """(C', tau') bounding |gamma^(k)(t)| <= C' k! tau'^-k."""
        if t >= self.tau:
            raise TailNotClosed(f"t = {t} is outside the analyticity disc of radius {self.tau}")
        return self.C * self.tau / (self.tau - t), self.tau - t

    def gamma_derivative(self, j: int, t: float):
        """(gamma^(j)(t), error bound) by a Taylor shift of the coefficient list."""
        if t == 0:
            return self.alpha(j), 0.0
        if self.finite:
            deg = self.degree
            s = sum(self.alpha(j + m) * t ** m / math.factorial(m) for m in range(0, deg - j + 1))
            return float(s), 0.0
        if t >= self.tau:
            raise TailNotClosed(f"t = {t} is outside the analyticity disc of radius {self.tau}")
        lt, ltau, lC = math.log(t), math.log(self.tau), math.log(self.C)
        s = 0.0
        term = 1.0
        for m in range(INNER_CAP):
            if m:
                term *= t / m
            s += self.alpha(j + m) * term
            # bound on the remaining terms m+1, m+2, ... by a geometric series
            n = m + 1
            rho = (j + n + 1) / (n + 1) * t / self.tau
            if rho < 1:
                lb = lC + math.lgamma(j + n + 1) - (j + n) * ltau + n * lt - math.lgamma(n + 1)
                tail = math.exp(lb) / (1 - rho)
                if tail <= 1e-17 * max(abs(s), 1e-300) or tail < 1e-300:
                    return s, tail + 4e-16 * abs(s)
        raise TailNotClosed(f"derivative {j} at t = {t} did not converge")


def build_trace_solution(gamma_coeffs, C: float, tau: float, T: float = math.inf,
                         truncation: int = 64, periodic: bool = False,
                         dimension: int = 1) -> TraceSeries:
    """Validate (C, tau) against the coefficients and return the series.

    Raises
    ------
    InconsistentBound
        If some listed alpha_k exceeds C k! tau^-k.
    """
    if not (C > 0 and tau > 0 and T > 0):
        raise InvalidSpec("C, tau and T must be positive")
    if truncation < 4:
        raise InvalidSpec("truncation must be at least 4")
    if dimension < 1:
        raise InvalidSpec("dimension must be >= 1")
    if not callable(gamma_coeffs):
        gamma_coeffs = tuple(float(a) for a in gamma_coeffs)
        if not gamma_coeffs:
            raise InvalidSpec("need at least one coefficient")
    s = TraceSeries(gamma_coeffs, float(C), float(tau), float(T), int(truncation), bool(periodic),
                    int(dimension))
    n_check = len(gamma_coeffs) if s.finite else truncation + 1
    for k in range(n_check):
        a = s.alpha(k)
        if a == 0:
            continue
        if math.log(abs(a)) > math.log(C) + math.lgamma(k + 1) - k * math.log(tau) + 1e-12:
            raise InconsistentBound(f"|alpha_{k}| = {abs(a):g} exceeds C k! tau^-k")
    if not s.finite and T > tau:
        raise InvalidSpec("for a non-polynomial trace the horizon T cannot exceed tau")
    return s


def _x1(series, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != series.dimension:
        raise InvalidSpec(f"point must have {series.dimension} coordinates")
    return float(x[0])


def _terms_needed(series, x, t, target):
    """Smallest K whose envelope tail beyond K is <= target; (K, tail)."""
    if series.finite:
        return series.degree, 0.0
    Cp, tp = series.envelope(t)
    x2 = x * x
    for K in range(0, series.truncation + 1):
        n = K + 1
        rho = x2 / (2 * (2 * n + 1) * tp)
        if rho < 1:
            lb = math.log(Cp) + math.lgamma(n + 1) - n * math.log(tp) - math.lgamma(2 * n + 1)
            lb += n * math.log(x2) if x2 > 0 else -math.inf
            tail = math.exp(lb) / (1 - rho) if lb > -math.inf else 0.0
            if tail <= target:
                return K, tail
    raise TailNotClosed(f"envelope tail at x = {x}, t = {t} does not close within {series.truncation} terms")


def _check_t(series, t):
    if not 0 <= t < series.T:
        raise InvalidSpec(f"t = {t} outside [0, T)")


def eval_trace_solution(series: TraceSeries, x, t: float,
                        cfg: QuadratureConfig = DEFAULT_CONFIG) -> SolutionValue:
    """Partial sum of the series with a certified bound on what was dropped.

    >>> s = build_trace_solution([0, 1], C=1, tau=1)
    >>> eval_trace_solution(s, 2.0, 0.5).value
    2.5
    """
    x = _x1(series, x)
    t = float(t)
    _check_t(series, t)
    if x == 0:
        g, e = series.gamma_derivative(0, t)
        return SolutionValue(g, e, "series")
    K, tail = _terms_needed(series, x, t, 1e-3 * cfg.abs_tol)
    total, err = 0.0, tail
    pw = 1.0
    x2 = x * x
    for k in range(K + 1):
        if k:
            pw *= x2 / ((2 * k - 1) * (2 * k))
        g, e = series.gamma_derivative(k, t)
        total += g * pw
        err += e * pw
    err += 1e-16 * (K + 1) * abs(total)
    return SolutionValue(total, err, "series")


@dataclass(frozen=True)
class InitialData:
    """u0(x) = sum_k coeffs[k] x^(2k), with a sign probe over ``grid``."""

    coeffs: tuple
    grid: tuple
    min_value: float
    argmin: float

    @property
    def nonnegative_on_grid(self) -> bool:
        return self.min_value >= 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return sum(c * x ** (2 * k) for k, c in enumerate(self.coeffs))


def initial_data_of_trace(series: TraceSeries, grid=None) -> InitialData:
    """Coefficients alpha_k/(2k)! of u(x, 0), plus a positivity probe.

    >>> initial_data_of_trace(build_trace_solution([1, -2, 2], C=2, tau=1)).coeffs
    (1.0, -1.0, 0.08333333333333333)
    """
    n = series.degree + 1 if series.finite else series.truncation + 1
    coeffs = tuple(series.alpha(k) / math.factorial(2 * k) for k in range(n))
    if grid is None:
        grid = np.linspace(-5.0, 5.0, 201)
    grid = np.asarray(grid, dtype=float)
    data = InitialData(coeffs, tuple(grid.tolist()), 0.0, 0.0)
    vals = data(grid)
    i = int(np.argmin(vals))
    return InitialData(coeffs, tuple(grid.tolist()), float(vals[i]), float(grid[i]))


def verify_trace(series: TraceSeries, t_samples: Sequence[float], x_samples: Sequence[float],
                 cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """max |d_t u_K - d_xx u_K| over the samples for the certified partial sum u_K.

    Both derivatives are taken term by term, so the result is the mismatch
    of the truncated polynomial in x (plus rounding).
    """
    worst = 0.0
    for t in t_samples:
        t = float(t)
        _check_t(series, t)
        for x in x_samples:
            x = float(np.atleast_1d(x)[0])
            K = 1 if x == 0 else max(_terms_needed(series, x, t, 1e-3 * cfg.abs_tol)[0], 1)
            g = [series.gamma_derivative(k, t)[0] for k in range(K + 2)]
            x2 = x * x
            ut = uxx = 0.0
            pw = 1.0   # x^(2k)/(2k)!
            for k in range(K + 1):
                if k:
                    pw *= x2 / ((2 * k - 1) * (2 * k))
                ut += g[k + 1] * pw
                if k < K:
                    # d_xx of g_{k+1} x^(2k+2)/(2k+2)! is g_{k+1} x^(2k)/(2k)!
                    uxx += g[k + 1] * pw
            worst = max(worst, abs(ut - uxx))
    return worst


def write_trace_csv(series: TraceSeries, xs, ts, stream, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """CSV rows x, t, u, residual."""
    import csv

    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["x", "t", "u", "residual"])
    for t in ts:
        for x in xs:
            v = eval_trace_solution(series, x, t, cfg)
            r = verify_trace(series, [t], [x], cfg)
            w.writerow([f"{float(x):.17g}", f"{float(t):.17g}", f"{v.value:.17g}", f"{r:.17g}"])
