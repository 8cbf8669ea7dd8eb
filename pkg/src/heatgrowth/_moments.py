"""Polynomial-weighted kernel integrals, used for derivatives of solutions.

Every derivative of the heat kernel is the kernel times a polynomial in
z = x - y, so derivatives of u reduce to

    integral of W(x - y) exp(-q |x - y|^2) dmu(y)

for a polynomial W of total degree <= 4.  Polynomials are dicts mapping
exponent tuples to coefficients.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict

import numpy as np
from numpy.polynomial import hermite as _herm
from scipy import special

from . import _integrals as _I
from .errors import OrderUnsupported
from .families import (
    AnnulusSum,
    DiracComb,
    ExpQuadDensity,
    GridDensity,
    HalfSpacePiece,
    leaves,
)

MAX_ORDER = 4


# ---------------------------------------------------------------------------
# tiny multivariate polynomial algebra
# ---------------------------------------------------------------------------

def p_const(N, c=1.0):
    return {(0,) * N: float(c)}


def p_add(a, b, sb=1.0):
    out = defaultdict(float, a)
    for k, v in b.items():
        out[k] += sb * v
    return {k: v for k, v in out.items() if v != 0}


def p_mul(a, b):
    out = defaultdict(float)
    for ka, va in a.items():
        for kb, vb in b.items():
            out[tuple(i + j for i, j in zip(ka, kb))] += va * vb
    return {k: v for k, v in out.items() if v != 0}


def p_scale(a, s):
    return {k: s * v for k, v in a.items()}


def p_axis(N, axis, coeffs):
    """Univariate polynomial (ascending coefficients) in variable ``axis``."""
    out = {}
    for d, c in enumerate(coeffs):
        if c:
            e = [0] * N
            e[axis] = d
            out[tuple(e)] = float(c)
    return out


def p_eval(a, Z):
    Z = np.atleast_2d(Z)
    tot = np.zeros(len(Z))
    for k, v in a.items():
        tot += v * np.prod(Z ** np.array(k), axis=1)
    return tot


def p_shift_reflect(a, d):
    """Polynomial in w equal to a(d - w)."""
    N = len(d)
    out = defaultdict(float)
    for k, v in a.items():
        per_axis = []
        for i, e in enumerate(k):
            # (d_i - w_i)^e = sum_j C(e,j) d_i^(e-j) (-w_i)^j
            per_axis.append([(j, math.comb(e, j) * d[i] ** (e - j) * (-1) ** j) for j in range(e + 1)])
        for combo in itertools.product(*per_axis):
            exps = tuple(j for j, _ in combo)
            out[exps] += v * math.prod(c for _, c in combo)
    return {k: v for k, v in out.items() if v != 0}


def degree(a):
    return max((sum(k) for k in a), default=0)


# ---------------------------------------------------------------------------
# derivative weights
# ---------------------------------------------------------------------------

def _hermite_poly(n, sq):
    """Ascending coefficients of (-sq)^n H_n(sq z) in z."""
    c = _herm.herm2poly([0] * n + [1])
    return [(-sq) ** n * ci * sq ** i for i, ci in enumerate(c)]


def _space_weight(N, beta, q):
    sq = math.sqrt(q)
    w = p_const(N)
    for i, b in enumerate(beta):
        if b:
            w = p_mul(w, p_axis(N, i, _hermite_poly(b, sq)))
    return w


def derivative_weight(N, alpha, m, t):
    """Polynomial W with d_t^m D^alpha K(z, t) = W(z) K(z, t).

    Pure time derivatives use the explicit time weights; mixed ones use
    d_t^m D^alpha = D^alpha Laplacian^m on caloric functions.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != N or any(a < 0 for a in alpha) or m < 0:
        raise ValueError("bad multi-index")
    if sum(alpha) + 2 * m > MAX_ORDER:
        raise OrderUnsupported(f"|alpha| + 2m = {sum(alpha) + 2 * m} exceeds {MAX_ORDER}")
    q = 1.0 / (4 * t)
    if m == 0 or any(alpha):
        w = {}
        for idx in itertools.product(range(N), repeat=m):
            beta = list(alpha)
            for i in idx:
                beta[i] += 2
            w = p_add(w, _space_weight(N, beta, q))
        return w
    r2 = {}
    for i in range(N):
        r2 = p_add(r2, p_axis(N, i, [0, 0, 1]))
    T1 = p_add(p_scale(r2, 1 / (4 * t * t)), p_const(N, -N / (2 * t)))
    if m == 1:
        return T1
    dT1 = p_add(p_scale(r2, -1 / (2 * t ** 3)), p_const(N, N / (2 * t * t)))
    return p_add(dT1, p_mul(T1, T1))


# ---------------------------------------------------------------------------
# radial moments via Bessel functions
# ---------------------------------------------------------------------------

def log_phi(N, k, r):
    """log of (2 pi)^{N/2} r^{-(nu+k)} I_{nu+k}(r), nu = N/2 - 1, r >= 0.

    These are the successive (1/r d/dr) derivatives of the sphere integral
    of exp(r w_1).
    """
    r = np.asarray(r, dtype=float)
    nu = N / 2 - 1 + k
    small = r < 1e-4
    rs = np.where(small, 1.0, r)
    with np.errstate(divide="ignore"):
        big = -nu * np.log(rs) + np.log(special.ive(nu, rs)) + rs
    # series: 2^-nu / Gamma(nu+1) * (1 + r^2 / (4 (nu + 1)))
    tiny = -nu * math.log(2) - special.gammaln(nu + 1) + np.log1p(r * r / (4 * (nu + 1)))
    return (N / 2) * math.log(2 * math.pi) + np.where(small, tiny, big)


def _matchings(slots):
    """Yield (pairs_count, unmatched_indices) over partial matchings of equal-index slots."""
    n = len(slots)

    def rec(rem):
        if not rem:
            yield 0, []
            return
        first, rest = rem[0], rem[1:]
        for j0, u in rec(rest):
            yield j0, [slots[first]] + u
        for pos, other in enumerate(rest):
            if slots[other] == slots[first]:
                for j0, u in rec(rest[:pos] + rest[pos + 1:]):
                    yield j0 + 1, u

    yield from rec(list(range(n)))


def moment_terms(gamma, P):
    """Coefficients c_k with  int w^gamma e^{P.w} f(|w|) dw = sum_k c_k J_k.

    J_k = int f(rho) rho^{N-1+2k} Phi_k(rho |P|) d rho.
    """
    slots = [i for i, g in enumerate(gamma) for _ in range(g)]
    n = len(slots)
    out = defaultdict(float)
    for j, unmatched in _matchings(slots):
        out[n - j] += math.prod(P[i] for i in unmatched)
    return out


def _radial_J(N, logf, lo, hi, pn, kmax, cfg, breaks=(), hints=()):
    """log J_k for k = 0..kmax with radial weight exp(logf(rho))."""
    res = []
    for k in range(kmax + 1):
        def L(r, k=k):
            out = logf(r) + log_phi(N, k, pn * r) + 2 * k * np.log(r)
            return out + (N - 1) * np.log(r) if N > 1 else out
        res.append(_I.log_integral(L, lo, hi, cfg, breaks=breaks, hints=hints))
    return res


def _radial_moments(N, poly_w, logf, lo, hi, P, cfg, breaks=(), hints=()):
    """int poly_w(w) exp(P.w) f(|w|) dw, returned as (log_scale, value, abs_error).

    The result equals exp(log_scale) * value.
    """
    pn = float(np.linalg.norm(P))
    kmax = degree(poly_w)
    Js = _radial_J(N, logf, lo, hi, pn, kmax, cfg, breaks, hints)
    logs = np.array([j[0] for j in Js])
    if not np.isfinite(logs).any():
        return 0.0, 0.0, 0.0
    scale = float(np.max(logs[np.isfinite(logs)]))
    rel = np.array([j[1] for j in Js])
    Jn = np.exp(logs - scale)
    val = 0.0
    absval = 0.0
    err = 0.0
    for gamma, cw in poly_w.items():
        for k, c in moment_terms(gamma, P).items():
            term = cw * c * Jn[k]
            val += term
            absval += abs(term)
            err += abs(term) * rel[k]
    err += 4e-16 * absval * (1 + kmax)
    return scale, val, err


# ---------------------------------------------------------------------------
# per-family weighted integrals
# ---------------------------------------------------------------------------

def _interval_moments(x, lo, hi, q, kmax):
    """m_k = int_lo^hi (x - y)^k exp(-q (x - y)^2) dy for k <= kmax (arrays over cells)."""
    a = x - hi  # z range [a, b]
    b = x - lo
    m = [_I._interval_gauss(0.0, a, b, q)]
    ea = np.exp(-q * a * a)
    eb = np.exp(-q * b * b)
    if kmax >= 1:
        m.append((ea - eb) / (2 * q))
    for k in range(2, kmax + 1):
        m.append(((k - 1) * m[k - 2] + a ** (k - 1) * ea - b ** (k - 1) * eb) / (2 * q))
    return m


def _w_grid(g: GridDensity, X, W, q):
    N = g.dimension
    kmax = degree(W)
    vals = np.zeros(len(X))
    for p, x in enumerate(X):
        mom = [_interval_moments(x[ax], g.edges(ax)[:-1], g.edges(ax)[1:], q, kmax) for ax in range(N)]
        tot = 0.0
        for k, c in W.items():
            acc = g.samples
            for ax in range(N):
                acc = np.tensordot(mom[ax][k[ax]], acc, axes=([0], [0]))
            tot += c * float(acc)
        vals[p] = tot
    return vals, 1e-12 * (np.abs(vals) + 1e-300)


def _normal_moment(mu, s2, k):
    return [1.0, mu, mu * mu + s2, mu ** 3 + 3 * mu * s2,
            mu ** 4 + 6 * mu * mu * s2 + 3 * s2 * s2][k]


def _w_expquad_closed(m: ExpQuadDensity, X, W, q):
    base = _I._expquad_closed(m, X, q)
    alpha = q - m.A
    s2 = 1 / (2 * alpha)
    vals = np.zeros(len(X))
    absv = np.zeros(len(X))
    for p, x in enumerate(X):
        mean_y = (2 * q * x + m.b) / (2 * alpha)
        mz = x - mean_y
        for k, c in W.items():
            t = c * math.prod(_normal_moment(mz[i], s2, e) for i, e in enumerate(k))
            vals[p] += t
            absv[p] += abs(t)
    return base.value * vals, base.value * (1e-14 * absv) + base.error * np.abs(vals)


def _w_radial_expquad(m: ExpQuadDensity, x, W, q, cfg):
    N = m.dimension
    alpha = q - m.A
    c = m.center
    bprime = m.b + 2 * m.A * c
    kappa = m.A * float(c @ c) + float(m.b @ c)
    d = x - c
    P = bprime + 2 * q * d
    mod = m.modifier

    def logf(r):
        return -alpha * r * r + mod.log(r)

    hints = [(float(np.linalg.norm(P)) / (2 * alpha), 1 / math.sqrt(2 * alpha))] if alpha > 0 else []
    Ww = p_shift_reflect(W, d)
    scale, val, err = _radial_moments(N, Ww, logf, m.r_min, m.r_max, P, cfg,
                                      breaks=m.radial_breaks(), hints=hints)
    f = math.exp(kappa - q * float(d @ d) + scale)
    return f * val, f * err


def _w_annulus(a: AnnulusSum, x, W, q, cfg):
    N = a.dimension
    d = x - a.center
    P = 2 * q * d
    Ww = p_shift_reflect(W, d)
    tot = 0.0
    err = 0.0
    for wgt, lo, hi in zip(a.weights, a.inner, a.outer):
        if not wgt:
            continue
        scale, val, e = _radial_moments(N, Ww, lambda r: -q * r * r, lo, hi, P, cfg)
        f = wgt * math.exp(scale - q * float(d @ d))
        tot += f * val
        err += f * e
    return tot, err


def _w_annulus_1d(a: AnnulusSum, X, W, q):
    kmax = degree(W)
    vals = np.zeros(len(X))
    for wgt, lo, hi in zip(a.weights, a.inner, a.outer):
        if not wgt:
            continue
        c = a.center[0]
        edges_lo = np.array([c + lo, c - hi])
        edges_hi = np.array([c + hi, c - lo])
        for p, x in enumerate(X[:, 0]):
            mom = _interval_moments(x, edges_lo, edges_hi, q, kmax)
            vals[p] += wgt * sum(cw * float(np.sum(mom[k[0]])) for k, cw in W.items())
    return vals, 1e-12 * (np.abs(vals) + 1e-300)


def _w_halfspace(h: HalfSpacePiece, x, W, q, cfg):
    """Rotated frame: y = shift + sigma n + sum_k w_k e_k."""
    N = h.dimension
    A = h.A
    alpha = q - A
    s = h.scale
    d = x - h.shift
    g = 2 * q * d + 2 * A * (h.shift - h.x0)
    beta = float(g @ h.n) - h.eta0 * s
    gp = h.perp @ g if h.perp.size else np.zeros(0)
    const = A * float(h.shift @ h.shift) - 2 * A * float(h.x0 @ h.shift) - q * float(d @ d)
    if alpha <= 0:
        raise _I.Divergent("derivatives need t below the maximal time")
    # z = d - R^T (sigma, w'), with R rows (n, perp...)
    R = np.vstack([h.n[None, :], h.perp]) if h.perp.size else h.n[None, :]
    dr = R @ d
    # W(z) with z = R^T u', u' = dr - (sigma, w')  -> polynomial in (sigma, w')
    Wr = _rotate(W, R.T)
    Wsw = p_shift_reflect(Wr, dr)
    strict = h.strict

    def Ls_k(k):
        def L(r):
            out = -alpha * r * r + beta * r + (k * np.log(r) if k else 0.0)
            if not strict:
                out = out - np.log1p((s * r) ** 2)
            return out
        return L

    kmax = degree(Wsw)
    hints = [(beta / (2 * alpha), 1 / math.sqrt(2 * alpha))] if beta > 0 else []
    sig = [_I.log_integral(Ls_k(k), 0.0, math.inf, cfg, hints=hints) for k in range(kmax + 1)]
    # group by sigma power: Wsw = sum_k sigma^k * Q_k(w')
    groups = defaultdict(dict)
    for k, c in Wsw.items():
        groups[k[0]][k[1:]] = c
    dperp = N - 1
    tot = 0.0
    err = 0.0
    for k, Qk in groups.items():
        ls, rels, _ = sig[k]
        if ls == -math.inf:
            continue
        if dperp == 0:
            scale, val, e = 0.0, Qk.get((), 0.0), 0.0
        else:
            scale, val, e = _radial_moments(dperp, Qk, lambda r: -alpha * r * r, 0.0, 1.0 / s, gp, cfg)
        f = math.exp(const + ls + scale)
        tot += f * val
        err += f * (e + abs(val) * rels)
    return tot, err


def _rotate(W, M):
    """Polynomial V(u) = W(M u) for a square matrix M."""
    N = M.shape[0]
    out = {}
    for k, c in W.items():
        term = p_const(N, c)
        for i, e in enumerate(k):
            lin = {}
            for j in range(N):
                if M[i, j]:
                    ej = [0] * N
                    ej[j] = 1
                    lin[tuple(ej)] = float(M[i, j])
            for _ in range(e):
                term = p_mul(term, lin)
        out = p_add(out, term)
    return out


def weighted_integral(mu, X, W, q, cfg):
    """sum over components of int W(x - y) exp(-q|x - y|^2) dmu(y); returns (values, errors, method)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    vals = np.zeros(len(X))
    errs = np.zeros(len(X))
    methods = []
    for c, m in leaves(mu):
        if not c:
            continue
        if isinstance(m, DiracComb):
            if len(m.weights):
                Z = X[:, None, :] - m.locations[None, :, :]
                wz = p_eval(W, Z.reshape(-1, m.dimension)).reshape(Z.shape[:2])
                terms = m.weights[None, :] * wz * np.exp(-q * np.sum(Z * Z, axis=-1))
                v = terms.sum(axis=1)
                e = 1e-14 * np.abs(terms).sum(axis=1)
            else:
                v = e = np.zeros(len(X))
            methods.append("closed_form")
        elif isinstance(m, GridDensity):
            v, e = _w_grid(m, X, W, q)
            methods.append("closed_form")
        elif isinstance(m, ExpQuadDensity) and m.closed_form:
            v, e = _w_expquad_closed(m, X, W, q)
            methods.append("closed_form")
        elif isinstance(m, AnnulusSum) and m.dimension == 1:
            v, e = _w_annulus_1d(m, X, W, q)
            methods.append("closed_form")
        else:
            fn = {ExpQuadDensity: _w_radial_expquad, AnnulusSum: _w_annulus,
                  HalfSpacePiece: _w_halfspace}[type(m)]
            out = [fn(m, x, W, q, cfg) for x in X]
            v = np.array([o[0] for o in out])
            e = np.array([o[1] for o in out])
            methods.append("radial_quadrature")
        vals = vals + c * v
        errs = errs + abs(c) * e
    return vals, errs, _I.worst_method(methods)
