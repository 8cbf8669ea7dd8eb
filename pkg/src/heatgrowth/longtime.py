"""Behaviour of global solutions as t -> infinity.

The value at the origin is a weighted norm of the data,
u(0, t) = ||mu||_{M_{1/4t}} for nonnegative mu, so long-time questions
reduce to the distribution of mass of mu over large balls.  This module
samples that distribution, builds data whose origin trace oscillates
between prescribed targets, and splices such data onto a given profile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from . import _integrals as _I
from .errors import BeyondMaximalTime, DimensionMismatch, InvalidSpec
from .families import AnnulusSum, DiracComb, ExpQuadDensity, Measure, Sum, leaves, sign_status
from .kernel import _check_window, evaluate_many
from .measures import ball_mass, dilate, growth_index, log_shell_mass, meps_norm
from .quadrature import DEFAULT_CONFIG, QuadratureConfig

__all__ = [
    "OscillationSpec",
    "LongtimeVerdict",
    "trace_at_origin",
    "classify_longtime",
    "build_oscillating_data",
    "interleave_targets",
    "splice_shadow",
    "shadow_sweep",
    "rescaling_residual",
]


def trace_at_origin(mu: Measure, times: Sequence[float],
                    cfg: QuadratureConfig = DEFAULT_CONFIG) -> list:
    """u(0, t) for each t, read off as a weighted norm of the data.

    Examples
    --------
    >>> from heatgrowth.measures import constant
    >>> trace_at_origin(constant(1), [1.0, 10.0])
    [1.0, 1.0]
    """
    N = mu.dimension
    nonneg = sign_status(mu) == "nonnegative"
    out = []
    for t in times:
        t = float(t)
        _check_window(mu, t)
        q = 1.0 / (4.0 * t)
        if nonneg:
            out.append(meps_norm(mu, q, cfg))
            continue
        try:
            p = _I.gauss_integral(mu, np.zeros((1, N)), q, cfg)
        except _I.Divergent as exc:
            raise BeyondMaximalTime(str(exc)) from None
        out.append((q / math.pi) ** (N / 2) * float(p.value[0]))
    return out


# ---------------------------------------------------------------------------
# long-time classifier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LongtimeVerdict:
    """kind is one of BoundedOnParabolas, DecaysToZero, ConvergesTo,
    DivergesToInfinity, Inconclusive; L is set only for ConvergesTo."""

    kind: str
    L: Optional[float] = None
    evidence: dict = field(default_factory=dict)


DECAY_RATIO = 0.75
GROWTH_RATIO = 1.25
FLAT_BAND = (0.8, 1.25)


def classify_longtime(mu: Measure, k_max: int = 10, cfg: QuadratureConfig = DEFAULT_CONFIG,
                      refine_with_trace: bool = False, trace_tol: float = 1e-6) -> LongtimeVerdict:
    """Read the long-time regime from dyadic averages of the data.

    Annulus averages a_k = R^-N |mu|(R/2 <= |x| < R) and ball averages
    B_k = R^-N mu(|x| < R) are taken at R = 2^k, k = 1..k_max, and the
    three outermost values decide:

    * a_k falling by at least 25% per doubling (or vanishing): DecaysToZero
    * B_k rising by at least 25% per doubling: DivergesToInfinity
    * a_k flat within [0.8, 1.25] per doubling: BoundedOnParabolas

    Otherwise Inconclusive.  A positive liminf of the ball averages is
    recorded as evidence.  With ``refine_with_trace`` a bounded verdict is
    upgraded to ConvergesTo(L) when u(0, t) at t = 4^k agrees with itself
    to ``trace_tol``.
    """
    N = mu.dimension
    ev = {}
    try:
        if sign_status(mu) != "nonnegative":
            return LongtimeVerdict("Inconclusive", evidence={"reason": "signed data"})
        if growth_index(mu).eps0 != 0:
            return LongtimeVerdict("Inconclusive", evidence={"reason": "data is not global"})
        if k_max < 4:
            return LongtimeVerdict("Inconclusive", evidence={"reason": "k_max < 4"})
        Rs = [2.0 ** k for k in range(1, k_max + 1)]
        ann = [math.exp(log_shell_mass(mu, R / 2, R, cfg)) / R ** N for R in Rs]
        ball = [ball_mass(mu, np.zeros(N), R, cfg) / R ** N for R in Rs]
    except Exception as exc:  # noqa: BLE001 - any failure is inconclusive by contract
        return LongtimeVerdict("Inconclusive", evidence={"reason": repr(exc)})

    ev["radii"] = Rs
    ev["annulus_averages"] = ann
    ev["ball_averages"] = ball
    top_a, top_b = ann[-3:], ball[-3:]
    ev["liminf_ball_average"] = min(top_b)
    ev["positive_liminf"] = min(top_b) > 0

    def ratios(v):
        return [b / a if a > 0 else (math.inf if b > 0 else 1.0) for a, b in zip(v, v[1:])]

    ra, rb = ratios(top_a), ratios(top_b)
    ev["annulus_ratios"], ev["ball_ratios"] = ra, rb
    if all(v == 0 for v in top_a) or all(r <= DECAY_RATIO for r in ra):
        return LongtimeVerdict("DecaysToZero", evidence=ev)
    if all(r >= GROWTH_RATIO for r in rb):
        return LongtimeVerdict("DivergesToInfinity", evidence=ev)
    if all(FLAT_BAND[0] <= r <= FLAT_BAND[1] for r in ra):
        ev["bound"] = 2 ** (N + 1) * max(ann)
        if refine_with_trace and ev["positive_liminf"]:
            ts = [R * R for R in Rs[-3:]]
            tr = trace_at_origin(mu, ts, cfg)
            ev["trace_times"], ev["trace_values"] = ts, tr
            if max(tr) - min(tr) <= trace_tol * max(abs(tr[-1]), 1e-300):
                return LongtimeVerdict("ConvergesTo", L=tr[-1], evidence=ev)
        return LongtimeVerdict("BoundedOnParabolas", evidence=ev)
    return LongtimeVerdict("Inconclusive", evidence=ev)


# ---------------------------------------------------------------------------
# oscillating data
# ---------------------------------------------------------------------------

def _c_N(N):
    return mpmath.pi ** (-mpmath.mpf(N) / 2)


def _outside_annulus_gauss(N, r):
    """c_N * integral of exp(-|x|^2) over R^N minus A(r), in mpmath."""
    s = mpmath.mpf(N) / 2
    r = mpmath.mpf(r)
    return mpmath.gammainc(s, 0, r ** -2, regularized=True) + mpmath.gammainc(s, r ** 2, mpmath.inf, regularized=True)


def _frac(x):
    return Fraction(x) if not isinstance(x, Fraction) else x


def _cond_near_origin(k, beta_prev, r_prev, N, slack=1):
    # 2^k beta_{k-1} < r_{k-1}^N
    return slack * Fraction(2) ** k * _frac(beta_prev) < _frac(r_prev) ** N


def _cond_mid(k, b, r, N, slack=1):
    with mpmath.workdps(50):
        return slack * mpmath.mpf(b) * _outside_annulus_gauss(N, r) < mpmath.mpf(2) ** (-k)


def _cond_l10(k, b, r, lam, N, slack=1):
    # 2^k b_k r_k^{3N} < lam_k^N
    return slack * Fraction(2) ** k * _frac(b) * _frac(r) ** (3 * N) < _frac(lam) ** N


def _cond_far(k, b, r, lam, lam_prev, N, slack=1):
    with mpmath.workdps(50):
        b, r, lam, lp = (mpmath.mpf(v) for v in (b, r, lam, lam_prev))
        lhs = slack * b * mpmath.exp(-(lam ** 2) / (lp ** 2 * r ** 2)) * lam ** N * r ** N
        return lhs < mpmath.mpf(2) ** (-k)


def _cond_disjoint(lam, r, lam_next, r_next, slack=1):
    return slack * _frac(lam) * _frac(r) < _frac(lam_next) / _frac(r_next)


@dataclass(frozen=True)
class OscillationSpec:
    """Parameters of the annulus construction, indexed k = 1..n as lists 0..n-1."""

    b: tuple
    r: tuple
    lam: tuple
    t: tuple
    error_bounds: tuple
    dimension: int = 1

    @property
    def c_N(self):
        return math.pi ** (-self.dimension / 2)

    def check(self) -> dict:
        """Each construction inequality, per k, decided in exact or 50-digit arithmetic.

        The far-away condition involves lambda_{k-1} and so starts at k = 2;
        the near-origin condition for index k constrains r_{k-1} and so
        also starts at k = 2.
        """
        N, n = self.dimension, len(self.b)
        out = {"near_origin": [], "mid_term": [], "u0_in_L10": [], "far_away": [],
               "disjoint": [], "times": [], "error_bounds": []}
        for i in range(n):
            k = i + 1
            b, r, lam = self.b[i], self.r[i], self.lam[i]
            if k >= 2:
                beta = max(self.b[: k - 1])
                out["near_origin"].append(_cond_near_origin(k, beta, self.r[i - 1], N))
                out["far_away"].append(_cond_far(k, b, r, lam, self.lam[i - 1], N))
            out["mid_term"].append(_cond_mid(k, b, r, N))
            out["u0_in_L10"].append(_cond_l10(k, b, r, lam, N))
            if i + 1 < n:
                out["disjoint"].append(_cond_disjoint(lam, r, self.lam[i + 1], self.r[i + 1]))
            out["times"].append(Fraction(self.t[i]) == Fraction(lam) ** 2 / 4)
            with mpmath.workdps(50):
                bound = (2 * _c_N(N) + 1) * mpmath.mpf(2) ** (-k)
                out["error_bounds"].append(abs(mpmath.mpf(self.error_bounds[i]) - bound) <= 1e-15 * bound)
        return out

    def all_hold(self) -> bool:
        return all(all(v) for v in self.check().values())


def _smallest_pow2(pred, start_exp, limit=2000):
    e = start_exp
    while e < limit:
        v = math.ldexp(1.0, e)
        if pred(v):
            return v, e
        e += 1
    raise InvalidSpec("no admissible power of 2 found")  # pragma: no cover


def build_oscillating_data(b: Sequence[float], N: int = 1):
    """Annulus data whose origin trace visits the targets b_k at times t_k.

    Radii and scales are the smallest powers of 2 meeting every
    construction inequality with a factor 2 of slack; r_k is also kept
    nondecreasing, which the near-origin estimate needs.

    Returns
    -------
    (AnnulusSum, OscillationSpec)
    """
    b = [float(v) for v in b]
    if not b:
        raise InvalidSpec("need at least one target")
    if any(v < 0 or not math.isfinite(v) for v in b):
        raise InvalidSpec("targets must be finite and nonnegative")
    rs, lams = [], []
    c_N = math.pi ** (-N / 2)
    for i, bk in enumerate(b):
        k = i + 1
        beta = max(b[:k])
        r_lo = max(1, int(math.log2(rs[-1])) if rs else 1)

        def r_ok(r):
            return (_cond_near_origin(k + 1, beta, r, N, slack=2)
                    and _cond_mid(k, bk, r, N, slack=2))

        r, _ = _smallest_pow2(r_ok, r_lo)

        def lam_ok(lam):
            if not _cond_l10(k, bk, r, lam, N, slack=2):
                return False
            if lams:
                return (_cond_disjoint(lams[-1], rs[-1], lam, r, slack=2)
                        and _cond_far(k, bk, r, lam, lams[-1], N, slack=2))
            return True

        lo = int(math.floor(math.log2(lams[-1]))) + 1 if lams else 0
        lam, _ = _smallest_pow2(lam_ok, lo)
        rs.append(r)
        lams.append(lam)
    ts = tuple(l * l / 4 for l in lams)
    bounds = tuple((2 * c_N + 1) * 2.0 ** -(i + 1) for i in range(len(b)))
    spec = OscillationSpec(tuple(b), tuple(rs), tuple(lams), ts, bounds, N)
    return AnnulusSum(N, tuple(b), tuple(lams), tuple(rs)), spec


def interleave_targets(alpha: Sequence[float], length: Optional[int] = None) -> list:
    """Triangular arrangement a1 | a1 a2 | a1 a2 a3 | ... truncated to ``length``.

    Once every prefix has been written the pattern keeps cycling through the
    full list, so each alpha_k recurs infinitely often.

    >>> interleave_targets([1, 2], 6)
    [1, 1, 2, 1, 2, 1]
    """
    alpha = list(alpha)
    n = len(alpha)
    if length is None:
        length = n * (n + 1) // 2
    out = []
    m = 1
    while len(out) < length and n:
        out.extend(alpha[: min(m, n)])
        m += 1
    return out[:length]


# ---------------------------------------------------------------------------
# shadowing splice
# ---------------------------------------------------------------------------

def _radial_cut(m, lo, hi):
    """Restriction of a leaf to lo <= |x| < hi (about the origin), as (coef, leaf) pairs."""
    N = m.dimension
    if isinstance(m, DiracComb):
        r = np.linalg.norm(m.locations, axis=1)
        keep = (r >= lo) & (r < hi)
        return [(1.0, DiracComb(m.locations[keep], m.weights[keep]))] if keep.any() else []
    if isinstance(m, ExpQuadDensity) and not np.any(m.center):
        a, c = max(m.r_min, lo), min(m.r_max, hi)
        if a >= c:
            return []
        return [(1.0, ExpQuadDensity(N, m.A, m.b, m.modifier, None, a, c))]
    if isinstance(m, AnnulusSum) and not np.any(m.center):
        out = []
        for w, a, c in zip(m.weights, m.inner, m.outer):
            a2, c2 = max(a, lo), min(c, hi)
            if w and a2 < c2:
                out.append((w, ExpQuadDensity(N, 0.0, None, r_min=a2, r_max=c2)))
        return out
    raise InvalidSpec(f"cannot restrict {type(m).__name__} to a ball about the origin")


def _restrict(mu, lo, hi):
    parts = []
    for c, m in leaves(mu):
        parts.extend((c * w, piece) for w, piece in _radial_cut(m, lo, hi))
    return parts


def splice_shadow(v0: Measure, osc: Measure, R: float) -> Measure:
    """v0 inside the open ball B(0, R) and osc outside it."""
    if v0.dimension != osc.dimension:
        raise DimensionMismatch("v0 and osc must share a dimension")
    if not R > 0:
        raise InvalidSpec("R must be positive")
    if v0 is osc:
        return v0
    parts = _restrict(v0, 0.0, R) + _restrict(osc, R, math.inf)
    if not parts:
        return DiracComb(np.zeros((0, v0.dimension)), np.zeros(0))
    return Sum(tuple(parts))


def shadow_sweep(v0: Measure, osc: Measure, xs, ts, delta: float, R0: float = 1.0,
                 R_max: float = 1024.0, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Doubling sweep over R until the splice shadows v0 within delta.

    Returns ``(R, sup_diff, history)``; R is None when no radius up to
    R_max works.  ``history`` lists (R, sup difference) pairs.
    """
    xs = np.asarray(xs, dtype=float).reshape(-1, v0.dimension)
    hist = []
    R = float(R0)
    while R <= R_max:
        sp = splice_shadow(v0, osc, R)
        d = 0.0
        for t in ts:
            a, _, _ = evaluate_many(v0, xs, float(t), cfg)
            b, _, _ = evaluate_many(sp, xs, float(t), cfg)
            d = max(d, float(np.max(np.abs(a - b))))
        hist.append((R, d))
        if d <= delta:
            return R, d, hist
        R *= 2
    return None, hist[-1][1] if hist else math.inf, hist


def rescaling_residual(mu: Measure, lam: float, probes, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """max over probes of |S(1)[mu_lam](x) - S(lam^2)mu(lam x)|.

    ``mu_lam`` is the dilated data u0(lam x) (see ``measures.dilate``).
    """
    N = mu.dimension
    X = np.asarray(probes, dtype=float).reshape(-1, N)
    left, _, _ = evaluate_many(dilate(mu, lam), X, 1.0, cfg)
    right, _, _ = evaluate_many(mu, lam * X, lam * lam, cfg)
    return float(np.max(np.abs(left - right)))
