"""Gaussian-weighted integrals of the measure families.

The single workhorse is

    G(mu; x, q) = integral of exp(-q |x - y|^2) dmu(y),

which gives the solution (q = 1/4t, times (q/pi)^{N/2}), the M_eps norms
(x = 0, q = eps) and total masses (q = 0).  Closed forms are used where the
family admits them; everything else reduces to one-dimensional integrals
evaluated in log space so that huge exponents neither overflow nor lose
their relative accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import DimensionUnsupported, QuadratureFailure, SignedDataUnsupported
from .families import (
    AnnulusSum,
    DiracComb,
    ExpQuadDensity,
    GridDensity,
    HalfSpacePiece,
    Modifier,
    Sum,
    absolute,
    leaves,
)
from .quadrature import QuadratureConfig, integrate, log_ball_exp_integral, log_sphere_mean

METHOD_RANK = {"closed_form": 0, "radial_quadrature": 1, "full_quadrature": 2}
_LOG_MAX = math.log(np.finfo(float).max)
_DROP = 60.0  # log-units below the peak that we treat as negligible for breakpoints


class Divergent(ArithmeticError):
    """Internal signal: the requested integral is infinite."""


@dataclass
class Piece:
    value: np.ndarray
    error: np.ndarray
    method: str
    nodes: int


def worst_method(methods):
    return max(methods, key=METHOD_RANK.__getitem__) if methods else "closed_form"


# ---------------------------------------------------------------------------
# log-space one-dimensional integration
# ---------------------------------------------------------------------------

def _safe(L):
    def f(r):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            v = np.asarray(L(np.asarray(r, dtype=float)), dtype=float)
        return np.where(np.isnan(v), -np.inf, v)
    return f


def _probe_grid(lo, hi, hints):
    pts = [np.linspace(lo, hi, 257)]
    span = hi - lo
    pts.append(lo + span * np.logspace(-9, 0, 90))
    # absolute scales too: a wide span must not hide an O(1) feature at lo
    if span > 1e3:
        pts.append(lo + np.logspace(-6, math.log10(span), 160))
    for h in hints:
        c, w = h
        if lo < c < hi:
            pts.append(np.clip(c + w * np.linspace(-8, 8, 33), lo, hi))
    return np.unique(np.concatenate(pts))


def log_integral(L, lo, hi, cfg: QuadratureConfig, breaks=(), hints=()):
    """log of the integral of exp(L(r)) over [lo, hi]; hi may be +inf.

    ``L`` must be vectorised and may return -inf.  ``hints`` is a list of
    (location, width) pairs for sharp features, ``breaks`` lists known
    discontinuities.  Returns (log_value, relative_error, nodes).
    """
    L = _safe(L)
    if not hi > lo:
        return -math.inf, 0.0, 0
    if math.isinf(hi):
        R = max(16.0, 4.0 * abs(lo), *(abs(c) + 10 * w for c, w in hints))
        while True:
            grid = _probe_grid(lo, lo + R, hints)
            vals = L(grid)
            k = int(np.argmax(vals))
            top = vals[k]
            tail = vals[-1]
            if math.isinf(top) and top < 0:
                if R > 1e15:
                    return -math.inf, 0.0, len(grid)
            elif top == math.inf or np.isnan(top):
                raise Divergent("integrand is infinite")
            elif k < len(grid) - 2 and tail < top - _DROP and vals[-2] >= tail:
                break
            if R > 1e15:
                raise Divergent("integrand does not decay")
            R *= 4.0
        finite_hi = lo + R
    else:
        grid = _probe_grid(lo, hi, hints)
        vals = L(grid)
        finite_hi = hi
    k = int(np.argmax(vals))
    top = float(vals[k])
    if top == -math.inf:
        return -math.inf, 0.0, len(grid)
    if not math.isfinite(top):
        raise Divergent("integrand is infinite")

    # refine the location of the maximum
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]
    peak = grid[k]
    if b > a:
        res = optimize.minimize_scalar(lambda r: -float(L(np.array([r]))[0]),
                                       bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-10 * max(1.0, abs(peak))})
        if res.success and -res.fun > top:
            top, peak = float(-res.fun), float(res.x)

    # breakpoints: discontinuities, the peak and level crossings on both sides
    bp = {lo, peak}
    bp.update(v for v in breaks if lo < v < finite_hi)
    for level in (2.0, 12.0, 35.0):
        below = vals < top - level
        left = np.flatnonzero(below & (grid < peak))
        right = np.flatnonzero(below & (grid > peak))
        if left.size:
            bp.add(float(grid[left[-1]]))
        if right.size:
            bp.add(float(grid[right[0]]))
    cut = finite_hi
    if math.isinf(hi):
        right = np.flatnonzero((vals < top - _DROP) & (grid > peak))
        cut = float(grid[right[0]]) if right.size else finite_hi
    bp.add(cut)
    pts = sorted(p for p in bp if lo <= p <= cut)
    # slowly decaying (algebraic) stretches need geometric panels; a single
    # wide panel lets both Gauss-Kronrod rules miss the mass at its left end
    geo = []
    for a, b in zip(pts, pts[1:]):
        geo.append(a)
        if a > 0 and b / a > 8:
            geo.extend(a * 4.0 ** np.arange(1, int(math.log(b / a, 4))))
    pts = geo + pts[-1:]
    if math.isinf(hi):
        pts.append(math.inf)
    elif pts[-1] < hi:
        pts.append(hi)

    def f(r):
        return np.exp(L(r) - top)

    # exp(L - top) cannot be more accurate than the rounding in L itself
    floor = 8 * np.finfo(float).eps * max(abs(top), 1.0)
    r = integrate(f, pts, rel_tol=max(cfg.rel_tol * 0.5, floor), abs_tol=1e-300,
                  max_nodes=cfg.max_nodes_per_axis)
    if r.value <= 0:
        return -math.inf, 0.0, r.nodes
    return top + math.log(r.value), r.error / r.value, r.nodes


# ---------------------------------------------------------------------------
# analytic helpers
# ---------------------------------------------------------------------------

def tilted_tail_finite(p_norm, mod: Modifier, dim, bounded=False, tol=0.0):
    """Is the integral of exp(p.y) v(|y|) over R^N finite?

    Exact rule for the modifier families; ``tol`` gives a relative band
    around the boundary |p| = exp_rate inside which the boundary rule is
    applied.  Returns True/False.
    """
    if bounded:
        return True
    if mod.stretch_rate > 0:
        return True
    if mod.stretch_rate < 0:
        return False
    g = mod.exp_rate
    if g > 0:
        if abs(p_norm - g) <= tol * g:
            return mod.net_power > (dim + 1) / 2
        return p_norm < g
    if p_norm > tol:
        return False
    return mod.net_power > dim


def _erf_diff(a, b):
    """erf(b) - erf(a) without cancellation, elementwise, a <= b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = special.erf(b) - special.erf(a)
    pos = a > 0
    neg = b < 0
    out = np.where(pos, special.erfc(a) - special.erfc(b), out)
    out = np.where(neg, special.erfc(-b) - special.erfc(-a), out)
    return out


def _interval_gauss(x, lo, hi, q):
    """integral of exp(-q (x - s)^2) over (lo, hi); q = 0 gives hi - lo."""
    if q == 0:
        return np.broadcast_to(np.asarray(hi - lo, dtype=float), np.broadcast(x, lo, hi).shape)
    sq = math.sqrt(q)
    return 0.5 * math.sqrt(math.pi) / sq * _erf_diff(sq * (lo - x), sq * (hi - x))


def _gammainc_diff(s, lo, hi):
    """P(s, hi) - P(s, lo) evaluated on the accurate side."""
    if lo > s:
        return special.gammaincc(s, lo) - special.gammaincc(s, hi)
    return special.gammainc(s, hi) - special.gammainc(s, lo)


# ---------------------------------------------------------------------------
# per-family integrals
# ---------------------------------------------------------------------------

def _dirac(m: DiracComb, X, q):
    if m.weights.size == 0:
        return Piece(np.zeros(len(X)), np.zeros(len(X)), "closed_form", 0)
    with np.errstate(over="ignore", invalid="ignore"):
        d2 = np.sum((X[:, None, :] - m.locations[None, :, :]) ** 2, axis=-1)
        terms = m.weights[None, :] * np.exp(-q * d2)
        # rounding in exp(-q d2) is relative to q d2; vanished terms carry none
        rel = np.where(terms != 0, np.abs(terms) * (1 + q * d2), 0.0)
    val = terms.sum(axis=1)
    err = 4 * np.finfo(float).eps * rel.sum(axis=1)
    return Piece(val, err, "closed_form", 0)


def _expquad_closed(m: ExpQuadDensity, X, q):
    alpha = q - m.A
    if alpha <= 0:
        raise Divergent("Gaussian weight too weak for quadratic growth")
    N = m.dimension
    # exponent written without cancellation between large terms
    expo = (q * m.A * np.sum(X * X, axis=1) + q * (X @ m.b) + 0.25 * float(m.b @ m.b)) / alpha
    logv = 0.5 * N * math.log(math.pi / alpha) + expo
    with np.errstate(over="ignore"):
        val = np.exp(logv)
    err = 8 * np.finfo(float).eps * val * (1 + np.abs(expo))
    return Piece(val, err, "closed_form", 0)


def _expquad_radial(m: ExpQuadDensity, x, q, cfg):
    N = m.dimension
    A = m.A
    alpha = q - A
    c = m.center
    bprime = m.b + 2 * A * c
    kappa = A * float(c @ c) + float(m.b @ c)
    d = x - c
    P = bprime + 2 * q * d
    pn = float(np.linalg.norm(P))
    bounded = math.isfinite(m.r_max)
    if alpha < 0 and not bounded:
        raise Divergent("Gaussian weight too weak for quadratic growth")
    if alpha == 0 and not tilted_tail_finite(pn, m.modifier, N, bounded):
        raise Divergent("borderline integral diverges")
    mod = m.modifier

    def L(r):
        out = -alpha * r * r + mod.log(r) + log_sphere_mean(N, pn * r)
        if N > 1:
            out = out + (N - 1) * np.log(r)
        return out

    hints = []
    logpre = kappa - q * float(d @ d)
    if alpha > 0:
        rc, w = pn / (2 * alpha), 1.0 / math.sqrt(2 * alpha)
        hints.append((rc, w))
        # the modifier can pull the peak inward, so locate it on a coarse grid;
        # if exp L stays above its overflow level across a full width there,
        # the integral overflows and there is nothing to resolve
        hi = min(m.r_max, rc + 8 * w)
        if hi > max(m.r_min, 0.0) and math.isfinite(hi):
            grid = np.geomspace(max(m.r_min, 1e-6 * hi), hi, 257)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                lg = L(grid)
            j = int(np.nanargmax(np.where(np.isfinite(lg), lg, -np.inf)))
            r0 = float(grid[j])
            if r0 != rc:
                hints.append((r0, w))
            seg = np.linspace(r0, min(r0 + w, m.r_max), 17)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                lb = math.log(seg[-1] - seg[0]) + float(np.min(L(seg))) - 1.0 if seg[-1] > seg[0] else -math.inf
            if logpre + lb > _LOG_MAX:
                return math.inf, 0.0, 0
    lv, rel, nodes = log_integral(L, m.r_min, m.r_max, cfg, breaks=m.radial_breaks(), hints=hints)
    with np.errstate(over="ignore"):
        val = float(np.exp(logpre + lv)) if lv > -math.inf else 0.0
    return val, abs(val) * rel, nodes


def _annulus_center(m: AnnulusSum, q):
    N = m.dimension
    if q == 0:
        vol = math.pi ** (N / 2) / math.gamma(N / 2 + 1)
        return sum(w * vol * (b ** N - a ** N) for w, a, b in zip(m.weights, m.inner, m.outer))
    tot = 0.0
    for w, a, b in zip(m.weights, m.inner, m.outer):
        if w:
            tot += w * _gammainc_diff(N / 2, q * a * a, q * b * b)
    return (math.pi / q) ** (N / 2) * tot


def _annulus(m: AnnulusSum, X, q, cfg):
    N = m.dimension
    d = X - m.center
    if N == 1:
        x = d[:, 0]
        val = np.zeros(len(X))
        for w, a, b in zip(m.weights, m.inner, m.outer):
            if w:
                val += w * (_interval_gauss(x, a, b, q) + _interval_gauss(x, -b, -a, q))
        return Piece(val, 1e-14 * np.abs(val) + 1e-300, "closed_form", 0)
    vals, errs, nodes, method = [], [], 0, "closed_form"
    for dd in d:
        r = float(np.linalg.norm(dd))
        if r == 0.0:
            v = _annulus_center(m, q)
            vals.append(v)
            errs.append(1e-14 * abs(v))
            continue
        method = "radial_quadrature"
        pn = 2 * q * r
        tot = 0.0
        err = 0.0
        for w, a, b in zip(m.weights, m.inner, m.outer):
            if not w:
                continue

            def L(s):
                return -q * (r - s) ** 2 + (log_sphere_mean(N, pn * s) - pn * s) + (N - 1) * np.log(s)

            hint = [(r, 1 / math.sqrt(2 * q))] if q > 0 else []
            lv, rel, nn = log_integral(L, a, b, cfg, hints=hint)
            nodes += nn
            v = w * math.exp(lv) if lv > -math.inf else 0.0
            tot += v
            err += abs(v) * rel
        vals.append(tot)
        errs.append(err)
    return Piece(np.array(vals), np.array(errs), method, nodes)


def _grid(m: GridDensity, X, q):
    N = m.dimension
    vals = np.empty(len(X))
    for i, x in enumerate(X):
        acc = m.samples
        for ax in range(N):
            e = m.edges(ax)
            f = _interval_gauss(x[ax], e[:-1], e[1:], q)
            acc = np.tensordot(f, acc, axes=([0], [0]))
        vals[i] = float(acc)
    scale = np.abs(m.samples).sum() * (2 * m.radius / m.cells) ** N
    return Piece(vals, 1e-14 * (np.abs(vals) + scale * 1e-3) + 1e-300, "closed_form", 0)


def _halfspace(m: HalfSpacePiece, x, q, cfg):
    A = m.A
    alpha = q - A
    s = m.scale
    d = x - m.shift
    g = 2 * q * d + 2 * A * (m.shift - m.x0)
    beta = float(g @ m.n) - m.eta0 * s
    gp = m.perp @ g if m.perp.size else np.zeros(0)
    gpn = float(np.linalg.norm(gp))
    const = A * float(m.shift @ m.shift) - 2 * A * float(m.x0 @ m.shift) - q * float(d @ d)

    if alpha < 0:
        raise Divergent("Gaussian weight too weak for quadratic growth")
    if alpha == 0 and (beta > 0 or (beta == 0 and m.strict)):
        raise Divergent("borderline integral diverges")
    strict = m.strict

    def Ls(r):
        out = -alpha * r * r + beta * r
        if not strict:
            out = out - np.log1p((s * r) ** 2)
        return out

    hints = [(beta / (2 * alpha), 1 / math.sqrt(2 * alpha))] if alpha > 0 and beta > 0 else []
    l1, rel1, n1 = log_integral(Ls, 0.0, math.inf, cfg, hints=hints)

    dperp = m.dimension - 1
    if dperp == 0:
        l2, rel2, n2 = 0.0, 0.0, 0
    else:
        def Lp(r):
            out = -alpha * r * r + log_sphere_mean(dperp, gpn * r)
            if dperp > 1:
                out = out + (dperp - 1) * np.log(r)
            return out
        l2, rel2, n2 = log_integral(Lp, 0.0, 1.0 / s, cfg)
    tot = const + l1 + l2
    val = math.exp(tot) if tot > -math.inf else 0.0
    return val, abs(val) * (rel1 + rel2 + 1e-15 * (1 + abs(tot))), n1 + n2


def leaf_integral(m, X, q, cfg) -> Piece:
    """G(leaf; x, q) for every row of X (shape (P, N))."""
    if isinstance(m, DiracComb):
        return _dirac(m, X, q)
    if isinstance(m, ExpQuadDensity):
        if m.closed_form:
            return _expquad_closed(m, X, q)
        out = [_expquad_radial(m, x, q, cfg) for x in X]
        return Piece(np.array([o[0] for o in out]), np.array([o[1] for o in out]),
                     "radial_quadrature", sum(o[2] for o in out))
    if isinstance(m, AnnulusSum):
        return _annulus(m, X, q, cfg)
    if isinstance(m, GridDensity):
        return _grid(m, X, q)
    if isinstance(m, HalfSpacePiece):
        out = [_halfspace(m, x, q, cfg) for x in X]
        return Piece(np.array([o[0] for o in out]), np.array([o[1] for o in out]),
                     "radial_quadrature", sum(o[2] for o in out))
    raise TypeError(f"unknown measure family {type(m).__name__}")


def gauss_integral(mu, X, q, cfg) -> Piece:
    """Signed G(mu; x, q) summed over the components of ``mu``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    val = np.zeros(len(X))
    err = np.zeros(len(X))
    methods, nodes = [], 0
    for c, leaf in leaves(mu):
        if c == 0:
            continue
        p = leaf_integral(leaf, X, q, cfg)
        val = val + c * p.value
        err = err + abs(c) * p.error
        methods.append(p.method)
        nodes += p.nodes
    return Piece(val, err, worst_method(methods), nodes)


# ---------------------------------------------------------------------------
# |mu| integrals for signed sums
# ---------------------------------------------------------------------------

def _breaks_1d(mu):
    pts = set()
    for _, m in leaves(mu):
        if isinstance(m, ExpQuadDensity):
            c = float(m.center[0])
            for r in m.radial_breaks():
                pts.update((c - r, c + r))
        elif isinstance(m, AnnulusSum):
            c = float(m.center[0])
            for r in m.radial_breaks():
                pts.update((c - r, c + r))
        elif isinstance(m, GridDensity):
            pts.update(float(v) for v in m.edges(0))
        elif isinstance(m, HalfSpacePiece):
            pts.add(float(m.shift[0]))
    return sorted(pts)


def abs_gauss_integral(mu, X, q, cfg) -> Piece:
    """G(|mu|; x, q).

    Exact when |mu| can be formed termwise.  Mixed-sign sums are handled
    in one dimension by integrating |density| directly; higher dimensions
    raise SignedDataUnsupported.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a = absolute(mu)
    if a is not None:
        return gauss_integral(a, X, q, cfg)
    if mu.dimension != 1:
        raise SignedDataUnsupported("|mu| of a mixed-sign sum is only available for N = 1")
    # point masses merge by location; densities integrated together
    atoms = {}
    dens = []
    for c, m in leaves(mu):
        if isinstance(m, DiracComb):
            for loc, w in zip(m.locations[:, 0], m.weights):
                atoms[float(loc)] = atoms.get(float(loc), 0.0) + c * w
        else:
            dens.append((c, m))
            if isinstance(m, (ExpQuadDensity, HalfSpacePiece)) and q < m.A:
                raise Divergent("Gaussian weight too weak for quadratic growth")
    if atoms:
        locs = np.array(list(atoms))[:, None]
        ws = np.abs(np.array(list(atoms.values())))
        val = _dirac(DiracComb(locs, ws), X, q).value
    else:
        val = np.zeros(len(X))
    err = np.zeros(len(X))
    nodes = 0
    if dens:
        d = Sum(tuple(dens))
        bps = _breaks_1d(d)
        for i, x in enumerate(X[:, 0]):
            def f(y, x=x):
                # far nodes may overflow the density where the weight has already
                # underflowed; q > A makes the true product negligible there
                with np.errstate(over="ignore", invalid="ignore"):
                    v = np.abs(d.density(y[:, None])) * np.exp(-q * (x - y) ** 2)
                return np.where(np.isnan(v), 0.0, v)
            pts = [-math.inf] + sorted(set(bps) | {x}) + [math.inf]
            r = integrate(f, pts, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                          max_nodes=cfg.max_nodes_per_axis * 4)
            val[i] += r.value
            err[i] = r.error
            nodes += r.nodes
    return Piece(val, err, "full_quadrature", nodes)


def require_low_dim(N, what="general-x quadrature"):
    if N > 3:
        raise DimensionUnsupported(f"{what} supports N <= 3")


__all__ = [
    "Divergent",
    "Piece",
    "log_integral",
    "tilted_tail_finite",
    "leaf_integral",
    "gauss_integral",
    "abs_gauss_integral",
    "worst_method",
    "QuadratureFailure",
]
