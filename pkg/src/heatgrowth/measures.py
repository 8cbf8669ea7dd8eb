"""Initial data, weighted norms, growth indices and symmetry transforms.

The measure families themselves live in :mod:`heatgrowth.families` and are
re-exported here.

Examples
--------
>>> import heatgrowth.measures as hm
>>> mu = hm.ExpQuadDensity(1, A=0.25)
>>> round(hm.meps_norm(mu, 0.5), 7)
1.4142136
>>> hm.growth_index(mu)
GrowthIndex(eps0=0.25, attained=False, source='analytic')
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import special

from . import _integrals as _I
from .errors import (
    DimensionUnsupported,
    IndexTooSmall,
    InsufficientShells,
    SignedDataUnsupported,
)
from .families import (  # noqa: F401  (re-exported)
    AnnulusSum,
    DiracComb,
    ExpQuadDensity,
    GridDensity,
    HalfSpacePiece,
    Measure,
    Modifier,
    Sum,
    absolute,
    as_points,
    constant,
    dirac,
    leaves,
    sign_status,
    zero,
)
from .quadrature import DEFAULT_CONFIG, QuadratureConfig, integrate, sphere_rule

__all__ = [
    "Measure", "Modifier", "DiracComb", "ExpQuadDensity", "AnnulusSum",
    "HalfSpacePiece", "GridDensity", "Sum", "dirac", "constant", "zero",
    "sign_status", "GrowthIndex", "meps_norm", "growth_index",
    "estimate_growth_index", "translate", "dilate", "uniform_norm",
    "btv_norm", "log_shell_mass", "ball_mass",
]


@dataclass(frozen=True)
class GrowthIndex:
    """Optimal index eps0 with attainment flag.

    ``attained`` is None when it could not be decided (estimated mode).
    """

    eps0: float
    attained: Optional[bool]
    source: str = "analytic"


# ---------------------------------------------------------------------------
# growth index
# ---------------------------------------------------------------------------

def _leaf_growth(m) -> GrowthIndex:
    if isinstance(m, (DiracComb, GridDensity, AnnulusSum)):
        return GrowthIndex(0.0, True)
    if isinstance(m, ExpQuadDensity):
        if math.isfinite(m.r_max) or m.A <= 0:
            return GrowthIndex(0.0, True)
        # at eps = A the Gaussian weight cancels and exp(b.y) v(|y-c|) remains
        ok = _I.tilted_tail_finite(float(np.linalg.norm(m.b)), m.modifier, m.dimension)
        return GrowthIndex(float(m.A), bool(ok))
    if isinstance(m, HalfSpacePiece):
        beta = -2 * m.A * float(m.x0 @ m.n) - m.eta0 * m.scale
        ok = beta < 0 or (beta == 0 and not m.strict)
        return GrowthIndex(float(m.A), bool(ok))
    raise TypeError(f"unknown measure family {type(m).__name__}")


def growth_index(mu: Measure) -> GrowthIndex:
    """Analytic optimal index of ``mu``.

    For a Sum the largest component index wins and attainment is the
    conjunction over the components that realise it (mixed attainment is
    reported as not attained).
    """
    parts = [_leaf_growth(m) for c, m in leaves(mu) if c != 0]
    if not parts:
        return GrowthIndex(0.0, True)
    e = max(p.eps0 for p in parts)
    if e == 0:
        return GrowthIndex(0.0, True)
    att = all(p.attained for p in parts if p.eps0 == e)
    return GrowthIndex(e, att)


# ---------------------------------------------------------------------------
# M_eps norm
# ---------------------------------------------------------------------------

def check_index(mu, eps):
    gi = growth_index(mu)
    if eps < gi.eps0 or (eps == gi.eps0 and gi.eps0 > 0 and not gi.attained):
        raise IndexTooSmall(
            f"eps={eps:g} is below the optimal index {gi.eps0:g} (or at it without attainment)")
    return gi


def meps_norm(mu: Measure, eps: float, cfg: QuadratureConfig = DEFAULT_CONFIG,
              with_error=False):
    """(eps/pi)^{N/2} times the integral of exp(-eps|x|^2) against |mu|.

    Raises
    ------
    IndexTooSmall
        When eps lies below the optimal index, or at it without attainment.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    check_index(mu, eps)
    N = mu.dimension
    try:
        p = _I.abs_gauss_integral(mu, np.zeros((1, N)), eps, cfg)
    except _I.Divergent as exc:
        raise IndexTooSmall(str(exc)) from None
    k = (eps / math.pi) ** (N / 2)
    val = k * float(p.value[0])
    if with_error:
        return val, k * float(p.error[0])
    return val


# ---------------------------------------------------------------------------
# shells and balls
# ---------------------------------------------------------------------------

def _log_abs_density(m, y):
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        if isinstance(m, ExpQuadDensity):
            r = np.linalg.norm(y - m.center, axis=-1)
            val = m.A * np.sum(y * y, axis=-1) + y @ m.b + m.modifier.log(r)
            return np.where((r >= m.r_min) & (r < m.r_max), val, -np.inf)
        if isinstance(m, HalfSpacePiece):
            return m.log_density(y)
        return np.log(np.abs(m.density(y)))


def _radial_breaks_about_origin(m):
    c = float(np.linalg.norm(getattr(m, "center", np.zeros(1))))
    out = set()
    if isinstance(m, GridDensity):
        for ax in range(m.dimension):
            out.update(abs(float(v)) for v in m.edges(ax))
    elif isinstance(m, HalfSpacePiece):
        out.add(float(np.linalg.norm(m.shift)))
    else:
        for r in m.radial_breaks():
            out.update((abs(c - r), c + r))
    return sorted(out)


def _leaf_log_shell(m, a, b, cfg):
    """log |m|({a <= |y| < b})."""
    N = m.dimension
    if b <= a:
        return -math.inf
    if isinstance(m, DiracComb):
        r = np.linalg.norm(m.locations, axis=1)
        s = float(np.abs(m.weights[(r >= a) & (r < b)]).sum())
        return math.log(s) if s > 0 else -math.inf
    if isinstance(m, AnnulusSum) and not np.any(m.center):
        vol = math.pi ** (N / 2) / math.gamma(N / 2 + 1)
        s = 0.0
        for w, lo, hi in zip(m.weights, m.inner, m.outer):
            lo2, hi2 = max(lo, a), min(hi, b)
            if hi2 > lo2:
                s += w * vol * (hi2 ** N - lo2 ** N)
        return math.log(s) if s > 0 else -math.inf
    if isinstance(m, GridDensity) and N == 1:
        e = m.edges(0)
        s = 0.0
        for lo, hi in ((a, b), (-b, -a)):
            ov = np.clip(np.minimum(e[1:], hi) - np.maximum(e[:-1], lo), 0, None)
            s += float(np.abs(m.samples) @ ov)
        return math.log(s) if s > 0 else -math.inf

    if isinstance(m, ExpQuadDensity) and not np.any(m.center):
        bn = float(np.linalg.norm(m.b))
        lo, hi = max(a, m.r_min), min(b, m.r_max)

        def L(r):
            out = m.A * r * r + m.modifier.log(r) + _I.log_sphere_mean(N, bn * r)
            return out + (N - 1) * np.log(r) if N > 1 else out

        return _I.log_integral(L, lo, hi, cfg)[0] if hi > lo else -math.inf

    if N == 1:
        def L(r):
            return np.logaddexp(_log_abs_density(m, r[:, None]), _log_abs_density(m, -r[:, None]))
    elif N <= 3:
        om, wt = sphere_rule(N, max(cfg.angular_nodes, 32))
        lw = np.log(wt)

        def L(r):
            pts = r[:, None, None] * om[None, :, :]
            ld = _log_abs_density(m, pts) + lw[None, :]
            return special.logsumexp(ld, axis=1) + (N - 1) * np.log(r)
    else:
        raise DimensionUnsupported("off-centre shell masses need N <= 3")
    br = [v for v in _radial_breaks_about_origin(m) if a < v < b]
    return _I.log_integral(L, a, b, cfg, breaks=br)[0]


def log_shell_mass(mu: Measure, a, b, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """log of |mu|({a <= |x| < b}) (about the origin)."""
    ab = absolute(mu)
    if ab is None:
        if mu.dimension != 1:
            raise SignedDataUnsupported("|mu| of a mixed-sign sum is only available for N = 1")
        s = _abs_mass_1d(mu, [(a, b), (-b, -a)], cfg)
        return math.log(s) if s > 0 else -math.inf
    parts = [math.log(abs(c)) + _leaf_log_shell(m, a, b, cfg) for c, m in leaves(ab) if c]
    return float(special.logsumexp(parts)) if parts else -math.inf


def _abs_mass_1d(mu, intervals, cfg, open_ends=False):
    """|mu| of a union of intervals in one dimension (handles mixed signs)."""
    atoms = {}
    dens = []
    for c, m in leaves(mu):
        if isinstance(m, DiracComb):
            for loc, w in zip(m.locations[:, 0], m.weights):
                atoms[float(loc)] = atoms.get(float(loc), 0.0) + c * w
        else:
            dens.append((c, m))
    tot = 0.0
    for lo, hi in intervals:
        for loc, w in atoms.items():
            inside = (lo < loc < hi) if open_ends else (lo <= loc < hi)
            if inside:
                tot += abs(w)
        if dens:
            d = Sum(tuple(dens))
            pts = [lo] + [p for p in _I._breaks_1d(d) if lo < p < hi] + [hi]
            r = integrate(lambda y: np.abs(d.density(y[:, None])), pts,
                          rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                          max_nodes=cfg.max_nodes_per_axis * 4)
            tot += r.value
    return tot


def ball_mass(mu: Measure, x, R=1.0, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """|mu|(B(x, R)) for the open ball."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    N = mu.dimension
    if N == 1:
        return _abs_mass_1d(mu, [(x[0] - R, x[0] + R)], cfg, open_ends=True)
    ab = absolute(mu)
    if ab is None:
        raise SignedDataUnsupported("|mu| of a mixed-sign sum is only available for N = 1")
    # shift so the ball is centred at the origin; translation may add coefficients
    tot = 0.0
    for c, m in leaves(translate(ab, -x)):
        if c:
            tot += c * math.exp(_leaf_log_shell(m, 0.0, R, cfg))
    return tot


# ---------------------------------------------------------------------------
# estimated growth index
# ---------------------------------------------------------------------------

def estimate_growth_index(mu: Measure, k_max: int = 6,
                          cfg: QuadratureConfig = DEFAULT_CONFIG) -> GrowthIndex:
    """Numerical optimal index from dyadic shell masses.

    Shell k is {2^(k-1) <= |x| < 2^k}, k = 1..k_max.  Since
    log m_k ~ eps0 * 4^k, the estimate is the least-squares slope of
    log m_k against 4^k over the three outermost shells, clipped at 0.
    Attainment cannot be decided this way and is reported as None.
    """
    if k_max < 4:
        raise InsufficientShells("need at least 4 dyadic shells (k_max >= 4)")
    logs = np.array([log_shell_mass(mu, 2.0 ** (k - 1), 2.0 ** k, cfg)
                     for k in range(1, k_max + 1)])
    if not np.isfinite(logs[-1]):
        return GrowthIndex(0.0, None, "estimated")
    xs = 4.0 ** np.arange(1, k_max + 1)
    top = slice(k_max - 3, k_max)
    X, Y = xs[top], logs[top]
    ok = np.isfinite(Y)
    if ok.sum() < 2:
        return GrowthIndex(0.0, None, "estimated")
    slope = np.polyfit(X[ok], Y[ok], 1)[0]
    return GrowthIndex(max(float(slope), 0.0), None, "estimated")


# ---------------------------------------------------------------------------
# symmetries
# ---------------------------------------------------------------------------

def _wrap(coef, m):
    return m if coef == 1.0 else Sum.of((coef, m))


def translate(mu: Measure, y) -> Measure:
    """Push mu forward by x -> x + y."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (mu.dimension,):
        y = as_points(y, mu.dimension).reshape(mu.dimension)
    if isinstance(mu, Sum):
        return Sum(tuple((c, translate(m, y)) for c, m in mu.terms))
    if not np.any(y):
        return mu
    if isinstance(mu, DiracComb):
        return DiracComb(mu.locations + y, mu.weights)
    if isinstance(mu, ExpQuadDensity):
        coef = math.exp(mu.A * float(y @ y) - float(mu.b @ y))
        new = replace(mu, b=mu.b - 2 * mu.A * y, center=mu.center + y)
        return _wrap(coef, new)
    if isinstance(mu, (AnnulusSum, GridDensity)):
        return replace(mu, center=mu.center + y)
    if isinstance(mu, HalfSpacePiece):
        coef = math.exp(mu.A * float(y @ y) + 2 * mu.A * float(mu.x0 @ y))
        return _wrap(coef, replace(mu, x0=mu.x0 + y, shift=mu.shift + y))
    raise TypeError(f"unknown measure family {type(mu).__name__}")


def dilate(mu: Measure, lam: float) -> Measure:
    """mu_lam, the data x -> u0(lam x); Dirac masses move to z/lam with weight lam^-N."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    if isinstance(mu, Sum):
        return Sum(tuple((c, dilate(m, lam)) for c, m in mu.terms))
    if lam == 1:
        return mu
    N = mu.dimension
    if isinstance(mu, DiracComb):
        return DiracComb(mu.locations / lam, mu.weights * lam ** (-N))
    if isinstance(mu, ExpQuadDensity):
        out = replace(mu, A=mu.A * lam ** 2, b=mu.b * lam, modifier=mu.modifier.scaled(lam),
                      center=mu.center / lam, r_min=mu.r_min / lam, r_max=mu.r_max / lam)
        m = mu.modifier.monomial
        return Sum.of((lam ** m, out)) if m else out
    if isinstance(mu, AnnulusSum):
        return replace(mu, scales=tuple(s / lam for s in mu.scales), center=mu.center / lam)
    if isinstance(mu, GridDensity):
        return replace(mu, radius=mu.radius / lam, center=mu.center / lam)
    if isinstance(mu, HalfSpacePiece):
        # keep the window's tilt 2Ac fixed while A picks up lam^2
        return replace(mu, A=mu.A * lam ** 2, c=mu.c / lam ** 2, x0=mu.x0 / lam,
                       shift=mu.shift / lam, scale=mu.scale * lam)
    raise TypeError(f"unknown measure family {type(mu).__name__}")


# ---------------------------------------------------------------------------
# uniform and total-variation norms
# ---------------------------------------------------------------------------

def _unbounded_envelope(m) -> bool:
    if isinstance(m, HalfSpacePiece):
        return True
    if isinstance(m, ExpQuadDensity):
        if math.isfinite(m.r_max) or m.A < 0:
            return False
        if m.A > 0 or m.modifier.stretch_rate < 0:
            return True
        if m.modifier.stretch_rate > 0:
            return False
        pn, g = float(np.linalg.norm(m.b)), m.modifier.exp_rate
        return pn > g or (pn == g and m.modifier.net_power < 0)
    return False


def _sweep_box(m):
    N = m.dimension
    if isinstance(m, DiracComb):
        if not len(m.weights):
            return None
        return m.locations.min(axis=0) - 1, m.locations.max(axis=0) + 1
    if isinstance(m, GridDensity):
        return m.center - m.radius - 1, m.center + m.radius + 1
    if isinstance(m, AnnulusSum):
        r = max(m.outer) + 1
        return m.center - r, m.center + r
    if isinstance(m, ExpQuadDensity):
        r = (m.r_max if math.isfinite(m.r_max) else m.r_min + 16.0) + 1
        return m.center - r, m.center + r
    return np.zeros(N) - 1, np.zeros(N) + 1


def uniform_norm(mu: Measure, cfg: QuadratureConfig = DEFAULT_CONFIG, spacing=0.5):
    """sup over x of |mu|(B(x, 1)), by a lattice sweep of ball centres.

    Families whose density grows without bound along some ray return +inf
    analytically.  The sweep box covers each component's support (decaying
    densities of unbounded support are swept out to 16 units past their
    inner radius).
    """
    if spacing > 0.5:
        raise ValueError("lattice spacing must be <= 1/2")
    lv = [(c, m) for c, m in leaves(mu) if c]
    if any(_unbounded_envelope(m) for _, m in lv):
        return math.inf
    boxes = [b for b in (_sweep_box(m) for _, m in lv) if b is not None]
    if not boxes:
        return 0.0
    lo = np.min([b[0] for b in boxes], axis=0)
    hi = np.max([b[1] for b in boxes], axis=0)
    axes = [np.arange(math.floor(l / spacing), math.ceil(h / spacing) + 1) * spacing
            for l, h in zip(lo, hi)]
    centres = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, mu.dimension)
    return max(ball_mass(mu, x, 1.0, cfg) for x in centres)


def btv_norm(mu: Measure, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Total variation |mu|(R^N); +inf for non-integrable families."""
    lv = [(c, m) for c, m in leaves(mu) if c]
    if not lv:
        return 0.0
    try:
        p = _I.abs_gauss_integral(mu, np.zeros((1, mu.dimension)), 0.0, cfg)
    except _I.Divergent:
        return math.inf
    return float(p.value[0])
