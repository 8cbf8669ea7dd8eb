"""Heat-kernel evaluation of solutions and probes of their identities.

u(x, t) = (4 pi t)^{-N/2} * integral of exp(-|x - y|^2 / 4t) dmu(y)

is computed in closed form where the data family allows it and otherwise by
log-space radial quadrature.  The existence window is t < T = 1/(4 eps0).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _integrals as _I
from . import _moments as _M
from .errors import (
    AtMaximalTime,
    BeyondMaximalTime,
    DimensionMismatch,
    InvalidSpec,
    QuadratureFailure,
)
from .measures import (
    AnnulusSum,
    DiracComb,
    ExpQuadDensity,
    GridDensity,
    Measure,
    absolute,
    as_points,
    btv_norm,
    check_index,
    growth_index,
    leaves,
    meps_norm,
    sign_status,
)
from .quadrature import DEFAULT_CONFIG, QuadratureConfig, integrate, sphere_rule

__all__ = [
    "SolutionValue",
    "maximal_time",
    "evaluate",
    "evaluate_many",
    "evaluate_derivative",
    "sandwich_bounds",
    "l1eps_norm_of_solution",
    "lq_norm_of_solution",
    "semigroup_residual",
    "heat_residual",
    "smoothing_decay_check",
    "uniform_bound_constant",
    "write_batch_csv",
]


@dataclass(frozen=True)
class SolutionValue:
    value: float
    est_error: float
    method: str


def maximal_time(mu: Measure) -> float:
    """T = 1/(4 eps0), +inf for eps0 = 0 (any sign; blowup_time insists on nonnegative data)."""
    e = growth_index(mu).eps0
    return math.inf if e == 0 else 1.0 / (4.0 * e)


def _check_window(mu, t):
    if not t > 0:
        raise ValueError("t must be positive")
    T = maximal_time(mu)
    if t > T:
        raise BeyondMaximalTime(f"t={t:g} exceeds the maximal time T={T:g}")
    if t == T:
        raise AtMaximalTime(f"t={t:g} is the maximal time; use blowup.classify_point for limits")
    return T


def _point(mu, x):
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
    if x.shape != (mu.dimension,):
        raise DimensionMismatch(f"point has {x.size} coordinates, measure has N={mu.dimension}")
    return x


def _accept(val, err, cfg, method):
    tol = max(cfg.rel_tol * abs(val), cfg.abs_tol)
    if err > tol and method != "closed_form":
        raise QuadratureFailure(f"error estimate {err:.3g} exceeds tolerance {tol:.3g}")
    return min(err, tol) if method == "closed_form" else err


def evaluate_many(mu: Measure, X, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Vectorised evaluate; returns (values, errors, method)."""
    _check_window(mu, t)
    X = as_points(X, mu.dimension).reshape(-1, mu.dimension)
    q = 1.0 / (4.0 * t)
    try:
        p = _I.gauss_integral(mu, X, q, cfg)
    except _I.Divergent as exc:
        raise BeyondMaximalTime(str(exc)) from None
    k = (q / math.pi) ** (mu.dimension / 2)
    return k * p.value, k * p.error, p.method


def evaluate(mu: Measure, x, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> SolutionValue:
    """u(x, t) for data mu.

    Examples
    --------
    >>> from heatgrowth.measures import ExpQuadDensity
    >>> round(evaluate(ExpQuadDensity(1, A=0.25), [0.0], 0.5).value, 8)
    1.41421356
    """
    x = _point(mu, x)
    v, e, method = evaluate_many(mu, x[None, :], t, cfg)
    val = float(v[0])
    return SolutionValue(val, _accept(val, float(e[0]), cfg, method), method)


def evaluate_derivative(mu: Measure, x, t: float, alpha, m: int = 0,
                        cfg: QuadratureConfig = DEFAULT_CONFIG) -> SolutionValue:
    """d_t^m D^alpha u(x, t) with |alpha| + 2m <= 4.

    The kernel is differentiated under the integral; for pure time
    derivatives the time weights of the kernel are used directly, so that
    ``heat_residual`` compares two independently computed quantities.
    """
    x = _point(mu, x)
    alpha = tuple(int(a) for a in np.atleast_1d(alpha))
    if len(alpha) != mu.dimension:
        raise DimensionMismatch("multi-index length must equal N")
    W = _M.derivative_weight(mu.dimension, alpha, int(m), t)
    _check_window(mu, t)
    q = 1.0 / (4.0 * t)
    try:
        v, e, method = _M.weighted_integral(mu, x[None, :], W, q, cfg)
    except _I.Divergent as exc:
        raise BeyondMaximalTime(str(exc)) from None
    k = (q / math.pi) ** (mu.dimension / 2)
    return SolutionValue(float(k * v[0]), float(k * e[0]), method)


def sandwich_bounds(mu: Measure, x, t: float, a: float, b: float,
                    cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Lower and upper bounds on u(x, t) from the values at the origin.

    b^{N/2} u(0, bt) exp(-|x|^2 / 4(1-b)t) <= u(x, t) <= a^{N/2} u(0, at) exp(|x|^2 / 4(a-1)t)
    """
    if sign_status(mu) != "nonnegative":
        raise ValueError("sandwich bounds need nonnegative data")
    if not (a > 1 and 0 < b < 1):
        raise ValueError("need a > 1 and 0 < b < 1")
    x = _point(mu, x)
    N = mu.dimension
    r2 = float(x @ x)
    z = np.zeros(N)
    lo = b ** (N / 2) * evaluate(mu, z, b * t, cfg).value * math.exp(-r2 / (4 * (1 - b) * t))
    hi = a ** (N / 2) * evaluate(mu, z, a * t, cfg).value * math.exp(r2 / (4 * (a - 1) * t))
    return lo, hi


# ---------------------------------------------------------------------------
# integrals of the solution over space
# ---------------------------------------------------------------------------

def _support_breaks_1d(mu):
    pts = set()
    for _, m in leaves(mu):
        if isinstance(m, DiracComb):
            pts.update(float(v) for v in m.locations[:, 0])
        elif isinstance(m, GridDensity):
            pts.update((float(m.edges(0)[0]), float(m.edges(0)[-1])))
        elif isinstance(m, (ExpQuadDensity, AnnulusSum)):
            c = float(m.center[0])
            pts.add(c)
            for r in m.radial_breaks():
                pts.update((c - r, c + r))
    return sorted(pts)


def _space_integral(mu, t, g, cfg, weight_rate=0.0):
    """integral over R^N of g(|u(x,t)|) exp(-weight_rate |x|^2) dx by iterated quadrature."""
    N = mu.dimension
    sqt = math.sqrt(t)

    def integrand_pts(P):
        v, _, _ = evaluate_many(mu, P, t, cfg)
        with np.errstate(over="ignore", invalid="ignore"):
            out = g(np.abs(v)) * np.exp(-weight_rate * np.sum(P * P, axis=1))
        return np.where(np.isnan(out), 0.0, out)

    if N == 1:
        br = _support_breaks_1d(mu)
        extra = []
        for c in br or [0.0]:
            extra.extend(c + sqt * k for k in (-8, -2, 2, 8))
        pts = sorted(set(br) | set(extra) | {0.0})
        pts = [-math.inf] + pts + [math.inf]
        r = integrate(lambda y: integrand_pts(y[:, None]), pts, rel_tol=cfg.rel_tol,
                      abs_tol=cfg.abs_tol, max_nodes=cfg.max_nodes_per_axis * 8)
        return r.value, r.error
    _I.require_low_dim(N, "space integrals of solutions")
    om, wt = sphere_rule(N, max(cfg.angular_nodes, 64))

    def radial(r):
        P = (r[:, None, None] * om[None, :, :]).reshape(-1, N)
        vals = integrand_pts(P).reshape(len(r), len(wt))
        return vals @ wt * r ** (N - 1)

    r = integrate(radial, [0.0, sqt, 4 * sqt, 16 * sqt, math.inf], rel_tol=cfg.rel_tol,
                  abs_tol=cfg.abs_tol, max_nodes=cfg.max_nodes_per_axis * 4)
    return r.value, r.error


def l1eps_norm_of_solution(mu: Measure, t: float, delta: float,
                           cfg: QuadratureConfig = DEFAULT_CONFIG, method: str = "auto") -> float:
    """(delta/pi)^{N/2} * integral of exp(-delta |x|^2) |u(x, t)| dx.

    For nonnegative data Fubini turns this into the M_{delta'} norm of the
    data with delta' = delta / (1 + 4 delta t); ``method="auto"`` uses that
    identity, ``method="quadrature"`` always integrates u over space.
    """
    _check_window(mu, t)
    if not delta > 0:
        raise InvalidSpec("delta must be positive")
    N = mu.dimension
    nonneg = sign_status(mu) == "nonnegative"
    if method == "auto" and nonneg:
        return meps_norm(mu, delta / (1 + 4 * delta * t), cfg)
    if nonneg:
        # the same identity says when the integral is finite at all
        check_index(mu, delta / (1 + 4 * delta * t))
    v, _ = _space_integral(mu, t, lambda u: u, cfg, weight_rate=delta)
    return (delta / math.pi) ** (N / 2) * v


def lq_norm_of_solution(mu: Measure, t: float, q: float,
                        cfg: QuadratureConfig = DEFAULT_CONFIG, probes=None) -> float:
    """||u(t)||_q; q = inf is a maximum over a probe grid."""
    _check_window(mu, t)
    if math.isinf(q):
        if probes is None:
            probes = _default_probes(mu, t)
        v, _, _ = evaluate_many(mu, probes, t, cfg)
        return float(np.max(np.abs(v)))
    v, _ = _space_integral(mu, t, lambda u: u ** q, cfg)
    return v ** (1.0 / q)


def _default_probes(mu, t):
    """Probe grid covering the bulk of the data plus every Dirac atom."""
    N = mu.dimension
    lo = np.full(N, -2.0)
    hi = np.full(N, 2.0)
    atoms = []
    for _, m in leaves(mu):
        if isinstance(m, DiracComb) and len(m.weights):
            atoms.append(m.locations)
            lo = np.minimum(lo, m.locations.min(axis=0))
            hi = np.maximum(hi, m.locations.max(axis=0))
        elif isinstance(m, GridDensity):
            lo = np.minimum(lo, m.center - m.radius)
            hi = np.maximum(hi, m.center + m.radius)
        elif isinstance(m, AnnulusSum):
            r = max(m.outer)
            lo = np.minimum(lo, m.center - r)
            hi = np.maximum(hi, m.center + r)
    h = max(math.sqrt(t) / 4, float(np.max(hi - lo)) / (400 if N == 1 else 40))
    axes = [np.arange(l, u + h / 2, h) for l, u in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, N)
    return np.vstack([grid] + atoms) if atoms else grid


# ---------------------------------------------------------------------------
# identity probes
# ---------------------------------------------------------------------------

def _tail_box_radius(mu, s, t, probes, cfg):
    """Half-width R of the resampling cube so the discarded tail is below abs_tol.

    |u(y, s)| is bounded by the sandwich upper bound of |mu| at some time
    a s in (t, T); the Gaussian tail of the kernel S(t - s) against that
    envelope is summed axis by axis.
    """
    N = mu.dimension
    tau = t - s
    absmu = absolute(mu)
    if absmu is None:
        raise ValueError("semigroup resampling needs sign-definite data")
    T = maximal_time(mu)
    at = 0.5 * (t + T) if math.isfinite(T) else 2.0 * t
    a = at / s
    C = a ** (N / 2) * evaluate(absmu, np.zeros(N), at, cfg).value
    beta = 1.0 / (4.0 * (a - 1.0) * s)
    qk = 1.0 / (4.0 * tau)
    alpha = qk - beta  # > 0 because (a - 1) s > tau
    pmax = float(np.max(np.abs(probes))) if len(probes) else 0.0
    kfac = (qk / math.pi) ** (N / 2)

    def tail(R):
        # envelope exp(beta y^2 - qk (x - y)^2) per axis; the worst probe coordinate is +-pmax
        mean = qk * pmax / alpha
        peak = math.exp(qk * beta * pmax ** 2 / alpha)
        full = math.sqrt(math.pi / alpha) * peak
        one = 0.5 * math.sqrt(math.pi / alpha) * peak * (
            math.erfc(math.sqrt(alpha) * (R - mean)) + math.erfc(math.sqrt(alpha) * (R + mean)))
        return kfac * C * N * one * full ** (N - 1)

    R = max(2.0, 2 * pmax)
    while tail(R) > cfg.abs_tol:
        R *= 1.25
    return R


def semigroup_residual(mu: Measure, s: float, t: float, probes,
                       cfg: QuadratureConfig = DEFAULT_CONFIG, refine: int = 16) -> float:
    """max over probes of |u(x, t) - S(t - s)[u(s)](x)|.

    u(s) is resampled as cell averages (3-point Gauss per cell) on a cube
    whose half-width makes the discarded tail smaller than abs_tol.  The
    cell size is 2 sqrt(t - s) / (32 * refine).
    """
    if not 0 < s < t:
        raise ValueError("need 0 < s < t")
    _check_window(mu, t)
    N = mu.dimension
    probes = as_points(probes, N).reshape(-1, N)
    R = _tail_box_radius(mu, s, t, probes, cfg)
    h = 2 * math.sqrt(t - s) / (32 * refine)
    cells = int(math.ceil(2 * R / h))
    if cells ** N > 4_000_000:
        raise QuadratureFailure(f"resampling grid of {cells}^{N} cells is too large")
    R = cells * h / 2
    edges = np.linspace(-R, R, cells + 1)
    gx, gw = np.polynomial.legendre.leggauss(3)
    mids = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mids[:, None] + 0.5 * h * gx[None, :]).ravel()
    wts = np.tile(0.5 * gw, cells)
    if N == 1:
        v, _, _ = evaluate_many(mu, nodes[:, None], s, cfg)
        samples = (v * wts).reshape(cells, 3).sum(axis=1)
    else:
        pts = np.stack(np.meshgrid(*([nodes] * N), indexing="ij"), axis=-1).reshape(-1, N)
        v, _, _ = evaluate_many(mu, pts, s, cfg)
        w = wts
        for _ in range(N - 1):
            w = np.multiply.outer(w, wts)
        vv = (v.reshape((3 * cells,) * N) * w)
        for ax in range(N):
            shape = list(vv.shape)
            shape[ax:ax + 1] = [cells, 3]
            vv = vv.reshape(shape).sum(axis=ax + 1)
        samples = vv
    grid = GridDensity(N, R, samples)
    lhs, _, _ = evaluate_many(mu, probes, t, cfg)
    rhs, _, _ = evaluate_many(grid, probes, t - s, cfg)
    return float(np.max(np.abs(lhs - rhs)))


def heat_residual(mu: Measure, x, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """|d_t u - Laplacian u| at (x, t), each term from its own kernel weight."""
    N = mu.dimension
    ut = evaluate_derivative(mu, x, t, (0,) * N, 1, cfg).value
    lap = 0.0
    for i in range(N):
        e = [0] * N
        e[i] = 2
        lap += evaluate_derivative(mu, x, t, tuple(e), 0, cfg).value
    return abs(ut - lap)


def smoothing_decay_check(mu: Measure, t: float, q: float,
                          cfg: QuadratureConfig = DEFAULT_CONFIG, probes=None) -> bool:
    """Check ||u(t)||_q <= (4 pi t)^{-N/2 (1 - 1/q)} ||mu||_BTV (up to 10 rel_tol)."""
    if not q >= 1:
        raise ValueError("q must be >= 1")
    total = btv_norm(mu, cfg)
    if math.isinf(total):
        raise ValueError("data must have finite total variation")
    N = mu.dimension
    expo = 0.5 * N * (1.0 - (0.0 if math.isinf(q) else 1.0 / q))
    bound = (4 * math.pi * t) ** (-expo) * total
    norm = lq_norm_of_solution(mu, t, q, cfg, probes=probes)
    return bool(norm <= bound * (1 + 10 * cfg.rel_tol) + cfg.abs_tol)


def uniform_bound_constant(N: int, t_grid=None) -> float:
    """A constant M0 with ||S(t)mu||_inf <= M0 (t^{-N/2} + 1) ||mu||_U.

    Cover R^N by unit cubes centred on x + Z^N (each fits in a unit ball
    when N <= 3); the cubes in the sup-norm shell m >= 2 lie at distance
    >= m - 1 from x.  M0 is the sup over t of the resulting bound divided
    by t^{-N/2} + 1, taken over a fine logarithmic grid.
    """
    if N > 3:
        raise ValueError("the unit-cube covering argument needs N <= 3")
    if t_grid is None:
        t_grid = np.logspace(-4, 4, 2001)
    m = np.arange(2, 4000)
    shell = (2 * m + 1.0) ** N - (2 * m - 1.0) ** N
    best = 0.0
    for t in t_grid:
        s = 3.0 ** N + float(np.sum(shell * np.exp(-((m - 1.0) ** 2) / (4 * t))))
        val = (4 * math.pi * t) ** (-N / 2) * s / (t ** (-N / 2) + 1)
        best = max(best, val)
    return best * (1 + 1e-3)


# ---------------------------------------------------------------------------
# batch output
# ---------------------------------------------------------------------------

def write_batch_csv(mu: Measure, points, times, stream=None,
                    cfg: QuadratureConfig = DEFAULT_CONFIG) -> str:
    """Evaluate at every (point, time) pair and write CSV rows.

    Columns are x_1..x_N, t, value, est_error, method; floats carry 17
    significant digits.  Returns the CSV text (also written to ``stream``).
    """
    N = mu.dimension
    pts = as_points(points, N).reshape(-1, N)
    times = np.broadcast_to(np.asarray(times, dtype=float), (len(pts),))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x_{i + 1}" for i in range(N)] + ["t", "value", "est_error", "method"])
    for x, t in zip(pts, times):
        sv = evaluate(mu, x, float(t), cfg)
        w.writerow([f"{c:.17g}" for c in x] + [f"{t:.17g}", f"{sv.value:.17g}",
                                              f"{sv.est_error:.17g}", sv.method])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
