"""Maximal existence time, the pointwise dichotomy at t = T and convex regular sets.

For nonnegative data with optimal index A the limit of u(x, t) as t -> T = 1/4A
is finite exactly when

    I_v(x) = e^{A|x|^2} * integral of exp(-A |x - y|^2) du0(y)

is finite, and then equals (A/pi)^{N/2} e^{-A|x|^2} I_v(x).  Finiteness is
decided by a dyadic shell test with an analytic fallback in a thin band
around the boundary of the regular set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _integrals as _I
from .errors import InvalidSpec, NotFactored, SignedDataUnsupported
from .families import _vec
from .kernel import l1eps_norm_of_solution
from .measures import (
    ExpQuadDensity,
    HalfSpacePiece,
    Measure,
    Modifier,
    Sum,
    growth_index,
    leaves,
    sign_status,
)
from .quadrature import DEFAULT_CONFIG, QuadratureConfig

__all__ = [
    "PointClassification",
    "RegularSetIntegral",
    "HalfSpace",
    "ConvexSetSpec",
    "blowup_time",
    "regular_set_integral",
    "classify_point",
    "build_convex_regular_data",
    "limit_profile_at_T",
    "norm_blowup_track",
]

BAND = 1e-3          # relative band around a boundary where the analytic rule decides
N_SHELLS = 5
CONVERGE_RATIO = 0.75
EXACT = 1e-12        # relative tolerance for sitting exactly on a boundary


@dataclass(frozen=True)
class PointClassification:
    """Verdict at the maximal time.

    ``verdict`` is one of 'GlobalInTime', 'Regular', 'Blowup', 'Undetermined';
    ``limit`` is set only for 'Regular'.
    """

    verdict: str
    limit: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def code(self):
        return {"GlobalInTime": "G", "Regular": "R", "Blowup": "B", "Undetermined": "U"}[self.verdict]


@dataclass(frozen=True)
class RegularSetIntegral:
    """Result of the I_v test: status is 'convergent', 'divergent' or 'undetermined'."""

    status: str
    value: Optional[float]
    shell_ratios: tuple = ()
    shells_used: int = 0
    rule: str = "shells"

    @property
    def divergent(self):
        return self.status == "divergent"


def blowup_time(mu: Measure) -> float:
    """T = 1/(4 eps0) for nonnegative data; +inf when eps0 = 0."""
    if sign_status(mu) != "nonnegative":
        raise SignedDataUnsupported("the maximal-time formula is only valid for nonnegative data")
    e = growth_index(mu).eps0
    return math.inf if e == 0 else 1.0 / (4.0 * e)


# ---------------------------------------------------------------------------
# per-leaf convergence of int exp(-A|x-y|^2) dmu(y)
# ---------------------------------------------------------------------------

def _shell_test(L, r0):
    """Dyadic shells [r0 2^k, r0 2^(k+1)) of exp(L); returns (status, ratios)."""
    logs = []
    for k in range(N_SHELLS):
        a, b = r0 * 2.0 ** k, r0 * 2.0 ** (k + 1)
        try:
            lv = _I.log_integral(L, a, b, DEFAULT_CONFIG.with_(rel_tol=1e-6))[0]
        except _I.Divergent:
            return "divergent", ()
        logs.append(lv)
    logs = np.array(logs)
    if np.all(logs == -np.inf):
        return "convergent", (0.0,) * (N_SHELLS - 1)
    with np.errstate(invalid="ignore"):
        d = np.diff(logs)
    d = np.where(np.isnan(d), -np.inf, d)
    ratios = tuple(float(np.exp(min(v, 700.0))) for v in d)
    if all(r <= CONVERGE_RATIO for r in ratios):
        return "convergent", ratios
    if all(r >= 1.0 for r in ratios):
        return "divergent", ratios
    return "undetermined", ratios


def _expquad_status(m: ExpQuadDensity, x, A):
    """Convergence of the Gaussian-weighted integral of one ExpQuad leaf at q = A."""
    N = m.dimension
    if math.isfinite(m.r_max) or m.A < A:
        return "convergent", (), "analytic"
    if m.A > A:
        raise NotFactored("component grows faster than exp(A|x|^2)")
    mod = m.modifier
    P = m.b + 2 * A * m.center + 2 * A * (x - m.center)
    pn = float(np.linalg.norm(P))
    g = mod.exp_rate
    # inside the band around the boundary the exact family rule decides
    if mod.stretch_rate == 0:
        near = abs(pn - g) <= BAND * g if g > 0 else pn <= BAND * 2 * A
        if near:
            ok = _I.tilted_tail_finite(pn, mod, N, tol=EXACT)
            return ("convergent" if ok else "divergent"), (), "analytic"
    # crossover radius beyond which the exponential terms dominate
    if mod.stretch_rate > 0:
        rc = (2 * (pn + g) / mod.stretch_rate) ** (1 / (mod.stretch_power - 1))
    elif mod.stretch_rate < 0:
        rc = 1.0
    elif g > 0:
        rc = (N + abs(mod.net_power) + 1) / abs(g - pn)
    elif pn > 0:
        rc = (N + abs(mod.net_power) + 1) / pn
    else:
        rc = 1.0
    r0 = max(8.0, 4.0 * rc, 2.0 * m.r_min)
    if r0 * 2 ** N_SHELLS > 1e12:
        return "undetermined", (), "shells"

    def L(r):
        out = mod.log(r) + _I.log_sphere_mean(N, pn * r)
        return out + (N - 1) * np.log(r) if N > 1 else out

    st, ratios = _shell_test(L, r0)
    return st, ratios, "shells"


def _halfspace_status(h: HalfSpacePiece, x, A):
    if h.A < A:
        return "convergent", (), "analytic"
    if h.A > A:
        raise NotFactored("component grows faster than exp(A|x|^2)")
    # at q = A the sigma-integrand is exp(beta sigma) phi(scale sigma)
    beta = 2 * A * (float((x - h.x0) @ h.n) - h.c * h.scale)
    dist = beta / (2 * A)
    size = max(1.0, h.c * h.scale)
    if abs(dist) <= BAND * size:
        if abs(dist) <= EXACT * size:
            ok = not h.strict
        else:
            ok = dist < 0
        return ("convergent" if ok else "divergent"), (), "analytic"
    rc = 3.0 / abs(beta)
    r0 = max(8.0, 4.0 * rc)
    s = h.scale
    strict = h.strict

    def L(r):
        out = beta * r
        return out if strict else out - np.log1p((s * r) ** 2)

    st, ratios = _shell_test(L, r0)
    return st, ratios, "shells"


def _status(mu, x, A):
    worst = "convergent"
    diag = {"shell_ratios": (), "shells_used": 0, "rule": "analytic"}
    order = {"convergent": 0, "undetermined": 1, "divergent": 2}
    for c, m in leaves(mu):
        if c == 0:
            continue
        if isinstance(m, ExpQuadDensity):
            st, ratios, rule = _expquad_status(m, x, A)
        elif isinstance(m, HalfSpacePiece):
            st, ratios, rule = _halfspace_status(m, x, A)
        else:
            st, ratios, rule = "convergent", (), "analytic"
        if order[st] > order[worst] or (order[st] == order[worst] and ratios and not diag["shell_ratios"]):
            diag = {"shell_ratios": ratios, "shells_used": N_SHELLS if ratios else 0, "rule": rule}
        worst = max(worst, st, key=order.__getitem__)
    return worst, diag


def regular_set_integral(A: float, v, x, cfg: QuadratureConfig = DEFAULT_CONFIG) -> RegularSetIntegral:
    """I_v(x) = integral of exp(2A<x, z>) v(z) dz, with a divergence test.

    Parameters
    ----------
    A : float
        Quadratic rate, A > 0.
    v : Modifier or Measure
        Either a radial factor v(|z|), or nonnegative data u0 = e^{A|x|^2} v
        given as a Measure (e.g. built by :func:`build_convex_regular_data`).
    x : array_like
        Evaluation point.
    """
    if not A > 0:
        raise ValueError("A must be positive")
    if isinstance(v, Modifier):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        mu = ExpQuadDensity(x.size, A, modifier=v)
    elif isinstance(v, Measure):
        mu = v
        if sign_status(mu) != "nonnegative":
            raise SignedDataUnsupported("I_v needs v >= 0")
        if growth_index(mu).eps0 > A:
            raise NotFactored("data grows faster than exp(A|x|^2)")
    else:
        raise NotFactored("v must be a Modifier or a Measure of the form e^{A|x|^2} v")
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(mu.dimension)
    st, diag = _status(mu, x, A)
    if st != "convergent":
        return RegularSetIntegral(st, None, diag["shell_ratios"], diag["shells_used"], diag["rule"])
    try:
        g = _I.gauss_integral(mu, x[None, :], A, cfg)
    except _I.Divergent:
        return RegularSetIntegral("undetermined", None, diag["shell_ratios"], diag["shells_used"], diag["rule"])
    val = math.exp(A * float(x @ x)) * float(g.value[0])
    return RegularSetIntegral("convergent", val, diag["shell_ratios"], diag["shells_used"], diag["rule"])


def classify_point(mu: Measure, x, cfg: QuadratureConfig = DEFAULT_CONFIG) -> PointClassification:
    """Regular (with the limit of u(x, t) as t -> T), Blowup, GlobalInTime or Undetermined."""
    if sign_status(mu) != "nonnegative":
        raise SignedDataUnsupported("the pointwise dichotomy needs nonnegative data")
    A = growth_index(mu).eps0
    if A == 0:
        return PointClassification("GlobalInTime", None, {"shell_ratios": (), "shells_used": 0})
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(mu.dimension)
    st, diag = _status(mu, x, A)
    if st == "divergent":
        return PointClassification("Blowup", None, diag)
    if st == "undetermined":
        return PointClassification("Undetermined", None, diag)
    try:
        g = _I.gauss_integral(mu, x[None, :], A, cfg)
    except _I.Divergent:
        return PointClassification("Undetermined", None, diag)
    limit = (A / math.pi) ** (mu.dimension / 2) * float(g.value[0])
    return PointClassification("Regular", limit, diag)


def limit_profile_at_T(mu: Measure, probes, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """classify_point over a list of probes; returns [(point, PointClassification)]."""
    pts = np.atleast_2d(np.asarray(probes, dtype=float))
    if mu.dimension == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
        pts = pts.T
    return [(p, classify_point(mu, p, cfg)) for p in pts]


# ---------------------------------------------------------------------------
# convex regular sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HalfSpace:
    """{x : <x, n> <= c} (or < c when strict)."""

    n: tuple
    c: float
    strict: bool = False


@dataclass(frozen=True)
class ConvexSetSpec:
    """K = x0 + intersection of half-spaces; an empty list means the whole space."""

    x0: tuple
    half_spaces: tuple = ()

    def __post_init__(self):
        x0 = tuple(float(v) for v in np.atleast_1d(self.x0))
        hs = []
        for h in self.half_spaces:
            if not isinstance(h, HalfSpace):
                h = HalfSpace(**h) if isinstance(h, dict) else HalfSpace(*h)
            n = np.asarray(h.n, dtype=float)
            if n.shape != (len(x0),):
                raise InvalidSpec("half-space normal has the wrong dimension")
            if abs(np.linalg.norm(n) - 1) > 1e-9:
                raise InvalidSpec("half-space normals must be unit vectors")
            if h.c < 0:
                raise InvalidSpec("c must be nonnegative")
            if h.strict and not h.c > 0:
                raise InvalidSpec("strict half-spaces need c > 0")
            hs.append(HalfSpace(tuple(float(v) for v in n), float(h.c), bool(h.strict)))
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "half_spaces", tuple(hs))

    @property
    def dimension(self):
        return len(self.x0)

    def contains(self, x) -> bool:
        z = np.asarray(x, dtype=float) - np.asarray(self.x0)
        for h in self.half_spaces:
            s = float(z @ np.asarray(h.n))
            if s > h.c or (h.strict and s >= h.c):
                return False
        return True

    def boundary_gap(self, x) -> float:
        """Lower bound on dist(x, boundary of K); exact inside K."""
        z = np.asarray(x, dtype=float) - np.asarray(self.x0)
        if not self.half_spaces:
            return math.inf
        gaps = [h.c - float(z @ np.asarray(h.n)) for h in self.half_spaces]
        if all(g > 0 for g in gaps):
            return min(gaps)
        return max(-g for g in gaps if g <= 0)


def build_convex_regular_data(spec: ConvexSetSpec, A: float, gamma: float = 1.0) -> Measure:
    """Nonnegative data e^{A|x|^2} v whose regular set at T = 1/4A is K.

    Each half-space contributes one piece with weight j^-2; non-strict ones
    keep the 1/(1+s^2) factor.  With no half-spaces the fallback is
    v = exp(-gamma |x|^1.5), regular everywhere.
    """
    if not A > 0:
        raise InvalidSpec("A must be positive")
    N = spec.dimension
    if not spec.half_spaces:
        return ExpQuadDensity(N, A, modifier=Modifier.stretched_exp_decay(gamma, 1.5))
    x0 = np.asarray(spec.x0)
    terms = []
    for j, h in enumerate(spec.half_spaces, start=1):
        piece = HalfSpacePiece(N, np.asarray(h.n), h.c, h.strict, A, x0=x0)
        terms.append((j ** -2.0, piece))
    return Sum(tuple(terms))


# ---------------------------------------------------------------------------
# norm track
# ---------------------------------------------------------------------------

def norm_blowup_track(mu: Measure, delta: float, times: Sequence[float],
                      cfg: QuadratureConfig = DEFAULT_CONFIG):
    """||u(t_i)||_{L^1_delta} for each time.

    For nonnegative data this norm equals the M_{delta'} norm of the data
    with delta' = delta / (1 + 4 delta t), so it is +inf as soon as delta'
    drops below the optimal index; those entries are returned as inf
    without quadrature.
    """
    gi = growth_index(mu)
    out = []
    for t in times:
        dp = delta / (1 + 4 * delta * t)
        if gi.eps0 > 0 and (dp < gi.eps0 or (dp == gi.eps0 and not gi.attained)):
            out.append(math.inf)
            continue
        out.append(l1eps_norm_of_solution(mu, float(t), delta, cfg))
    return out
