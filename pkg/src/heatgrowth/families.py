"""Measure families: signed Radon measures with at most quadratic-exponential growth.

Every family is an immutable object.  Densities are evaluated pointwise by
``density``; the heavy lifting (Gaussian-weighted integrals) lives in
:mod:`heatgrowth._integrals`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidSpec

__all__ = [
    "Modifier",
    "Measure",
    "DiracComb",
    "ExpQuadDensity",
    "AnnulusSum",
    "HalfSpacePiece",
    "GridDensity",
    "Sum",
    "dirac",
    "constant",
    "zero",
    "sign_status",
    "absolute",
]


def _vec(v, n, name="vector"):
    if v is None:
        return np.zeros(n)
    a = np.atleast_1d(np.asarray(v, dtype=float)).copy()
    if a.shape != (n,):
        raise DimensionMismatch(f"{name} must have shape ({n},), got {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Modifier:
    """Radial factor v(r) multiplying an exponential-quadratic density.

    The factor is the product of whichever parts are switched on::

        r^monomial * (1 + (r/power_scale)^2)^(-power/2) * exp(-exp_rate r) * exp(-stretch_rate r^stretch_power)

    A negative ``stretch_rate`` gives sub-quadratic growth, which is handy for
    data such as exp(|x|^1.5); ``monomial`` gives polynomial growth such as |x|.
    """

    power: float = 0.0
    power_scale: float = 1.0
    exp_rate: float = 0.0
    stretch_rate: float = 0.0
    stretch_power: float = 1.5
    monomial: float = 0.0

    def __post_init__(self):
        if self.power < 0 or self.exp_rate < 0 or self.monomial < 0:
            raise InvalidSpec("power, exp_rate and monomial must be nonnegative")
        if self.power_scale <= 0:
            raise InvalidSpec("power_scale must be positive")
        if self.stretch_rate != 0 and not (1 < self.stretch_power < 2):
            raise InvalidSpec("stretch_power must lie in (1, 2)")

    @classmethod
    def one(cls):
        return cls()

    @classmethod
    def power_decay(cls, alpha):
        if alpha <= 0:
            raise InvalidSpec("alpha must be positive")
        return cls(power=alpha)

    @classmethod
    def exp_decay(cls, gamma):
        if gamma <= 0:
            raise InvalidSpec("gamma must be positive")
        return cls(exp_rate=gamma)

    @classmethod
    def stretched_exp_decay(cls, gamma, alpha):
        if gamma <= 0:
            raise InvalidSpec("gamma must be positive")
        return cls(stretch_rate=gamma, stretch_power=alpha)

    def __mul__(self, other):
        if not isinstance(other, Modifier):
            return NotImplemented
        if self.power and other.power:
            raise InvalidSpec("cannot combine two power-decay factors")
        if self.stretch_rate and other.stretch_rate:
            raise InvalidSpec("cannot combine two stretched factors")
        mine = self.power > 0
        mine_st = self.stretch_rate != 0
        return Modifier(
            power=self.power + other.power,
            power_scale=self.power_scale if mine else other.power_scale,
            exp_rate=self.exp_rate + other.exp_rate,
            stretch_rate=self.stretch_rate + other.stretch_rate,
            stretch_power=self.stretch_power if mine_st else other.stretch_power,
            monomial=self.monomial + other.monomial,
        )

    @classmethod
    def monomial_growth(cls, m):
        return cls(monomial=m)

    @property
    def is_one(self) -> bool:
        return self.power == 0 and self.exp_rate == 0 and self.stretch_rate == 0 and self.monomial == 0

    @property
    def net_power(self):
        """Algebraic decay exponent at infinity (power minus monomial)."""
        return self.power - self.monomial

    def log(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        if self.power:
            out = out - 0.5 * self.power * np.log1p((r / self.power_scale) ** 2)
        if self.exp_rate:
            out = out - self.exp_rate * r
        if self.stretch_rate:
            out = out - self.stretch_rate * r ** self.stretch_power
        if self.monomial:
            with np.errstate(divide="ignore"):
                out = out + self.monomial * np.log(r)
        return out

    def __call__(self, r):
        return np.exp(self.log(r))

    def scaled(self, lam):
        """Modifier of r -> v(lam r) / lam^monomial (the constant is left to the caller)."""
        return Modifier(
            power=self.power,
            power_scale=self.power_scale / lam,
            exp_rate=self.exp_rate * lam,
            stretch_rate=self.stretch_rate * lam ** self.stretch_power,
            stretch_power=self.stretch_power,
            monomial=self.monomial,
        )


class Measure:
    """Common base; concrete families are frozen dataclasses."""

    dimension: int

    def density(self, y):
        """Pointwise density at points ``y`` of shape (..., N)."""
        raise TypeError(f"{type(self).__name__} has no density")

    def radial_breaks(self):
        """Radii (about ``self.center``) where the density is discontinuous."""
        return ()

    def __add__(self, other):
        return Sum.of((1.0, self), (1.0, other))

    def __rmul__(self, c):
        return Sum.of((float(c), self))

    def __neg__(self):
        return Sum.of((-1.0, self))

    def __sub__(self, other):
        return Sum.of((1.0, self), (-1.0, other))


@dataclass(frozen=True, eq=False)
class DiracComb(Measure):
    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        if loc.ndim == 1:
            loc = loc[:, None]
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if loc.ndim != 2 or loc.shape[0] != w.shape[0] or loc.shape[1] < 1:
            raise InvalidSpec("locations must be (M, N) and weights (M,)")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(loc)):
            raise InvalidSpec("Dirac weights and locations must be finite")
        loc = loc.copy()
        w = w.copy()
        loc.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @property
    def dimension(self):
        return self.locations.shape[1]


@dataclass(frozen=True, eq=False)
class ExpQuadDensity(Measure):
    """Density exp(A|x|^2 + b.x) v(|x - center|) on r_min <= |x - center| < r_max."""

    dimension: int
    A: float = 0.0
    b: np.ndarray = None
    modifier: Modifier = field(default_factory=Modifier)
    center: np.ndarray = None
    r_min: float = 0.0
    r_max: float = math.inf

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidSpec("dimension must be >= 1")
        object.__setattr__(self, "b", _vec(self.b, self.dimension, "b"))
        object.__setattr__(self, "center", _vec(self.center, self.dimension, "center"))
        if not 0 <= self.r_min < self.r_max:
            raise InvalidSpec("need 0 <= r_min < r_max")

    @property
    def full_support(self):
        return self.r_min == 0 and math.isinf(self.r_max)

    @property
    def closed_form(self):
        return self.modifier.is_one and self.full_support

    def density(self, y):
        y = np.asarray(y, dtype=float)
        r = np.linalg.norm(y - self.center, axis=-1)
        with np.errstate(over="ignore"):
            val = np.exp(self.A * np.sum(y * y, axis=-1) + y @ self.b + self.modifier.log(r))
        return np.where((r >= self.r_min) & (r < self.r_max), val, 0.0)

    def radial_breaks(self):
        return tuple(v for v in (self.r_min, self.r_max) if 0 < v < math.inf)


@dataclass(frozen=True, eq=False)
class AnnulusSum(Measure):
    """Density sum_j b_j chi{lam_j / r_j < |x - center| < lam_j r_j}."""

    dimension: int
    weights: tuple
    scales: tuple
    ratios: tuple
    center: np.ndarray = None

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        lam = tuple(float(v) for v in self.scales)
        r = tuple(float(v) for v in self.ratios)
        if not (len(w) == len(lam) == len(r)):
            raise InvalidSpec("weights, scales and ratios must have equal length")
        if any(v < 0 for v in w):
            raise InvalidSpec("annulus weights must be nonnegative")
        if any(v <= 1 for v in r):
            raise InvalidSpec("annulus ratios must exceed 1")
        if any(v <= 0 for v in lam) or any(b <= a for a, b in zip(lam, lam[1:])):
            raise InvalidSpec("annulus scales must be positive and strictly increasing")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "scales", lam)
        object.__setattr__(self, "ratios", r)
        object.__setattr__(self, "center", _vec(self.center, self.dimension, "center"))

    @property
    def inner(self):
        return tuple(l / r for l, r in zip(self.scales, self.ratios))

    @property
    def outer(self):
        return tuple(l * r for l, r in zip(self.scales, self.ratios))

    def density(self, y):
        rho = np.linalg.norm(np.asarray(y, dtype=float) - self.center, axis=-1)
        out = np.zeros_like(rho)
        for w, a, b in zip(self.weights, self.inner, self.outer):
            out = out + w * ((rho > a) & (rho < b))
        return out

    def radial_breaks(self):
        return tuple(sorted(set(self.inner) | set(self.outer)))

    @classmethod
    def from_radii(cls, dimension, weights, inner, outer, center=None):
        lam = [math.sqrt(a * b) for a, b in zip(inner, outer)]
        r = [math.sqrt(b / a) for a, b in zip(inner, outer)]
        return cls(dimension, tuple(weights), tuple(lam), tuple(r), center)


def _orthonormal_complement(n):
    """Rows spanning the orthogonal complement of the unit vector n."""
    dim = n.shape[0]
    if dim == 1:
        return np.zeros((0, 1))
    q, _ = np.linalg.qr(np.column_stack([n, np.eye(dim)]))
    basis = q[:, 1:dim].T
    return basis


@dataclass(frozen=True, eq=False)
class HalfSpacePiece(Measure):
    """One building block of the convex regular-set construction.

    Density ``exp(A|y|^2 - 2A<x0, y>) W(scale * (y - shift))`` where, writing
    ``z1 = <z, n>`` and ``z'`` for the part of ``z`` orthogonal to ``n``::

        W(z) = chi(|z'| <= 1) * phi(z1) * exp(-2 A c z1)   for z1 > 0, else 0

    with ``phi(s) = 1/(1+s^2)`` for non-strict constraints and ``phi = 1``
    for strict ones.
    """

    dimension: int
    n: np.ndarray
    c: float
    strict: bool
    A: float
    x0: np.ndarray = None
    shift: np.ndarray = None
    scale: float = 1.0

    def __post_init__(self):
        n = _vec(self.n, self.dimension, "n")
        if abs(np.linalg.norm(n) - 1) > 1e-9:
            raise InvalidSpec("n must be a unit vector")
        if self.c < 0:
            raise InvalidSpec("c must be nonnegative")
        if self.strict and self.c <= 0:
            raise InvalidSpec("strict constraints need c > 0")
        if self.A <= 0:
            raise InvalidSpec("A must be positive")
        if self.scale <= 0:
            raise InvalidSpec("scale must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "x0", _vec(self.x0, self.dimension, "x0"))
        object.__setattr__(self, "shift", _vec(self.shift, self.dimension, "shift"))
        perp = _orthonormal_complement(np.asarray(n))
        perp.setflags(write=False)
        object.__setattr__(self, "_perp", perp)

    @property
    def perp(self):
        return self._perp

    @property
    def eta0(self):
        return 2.0 * self.A * self.c

    def log_window(self, z):
        """log W(scale * z) for points z of shape (..., N); -inf off the support."""
        z = self.scale * np.asarray(z, dtype=float)
        z1 = z @ self.n
        zp = z @ self.perp.T if self.perp.size else np.zeros(z.shape[:-1] + (0,))
        inside = (z1 > 0) & (np.sum(zp * zp, axis=-1) <= 1.0)
        val = -self.eta0 * z1
        if not self.strict:
            val = val - np.log1p(z1 * z1)
        return np.where(inside, val, -np.inf)

    def window(self, z):
        return np.exp(self.log_window(z))

    def log_density(self, y):
        y = np.asarray(y, dtype=float)
        expo = self.A * np.sum(y * y, axis=-1) - 2 * self.A * (y @ self.x0)
        return expo + self.log_window(y - self.shift)

    def density(self, y):
        return np.exp(self.log_density(y))


@dataclass(frozen=True, eq=False)
class GridDensity(Measure):
    """Piecewise-constant density on the cube center + [-radius, radius]^N."""

    dimension: int
    radius: float
    samples: np.ndarray
    center: np.ndarray = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).copy()
        if s.ndim != self.dimension or len(set(s.shape)) != 1:
            raise InvalidSpec("samples must be an N-dimensional cube of cells")
        if not np.all(np.isfinite(s)):
            raise InvalidSpec("grid samples must be finite")
        if self.radius <= 0:
            raise InvalidSpec("radius must be positive")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "center", _vec(self.center, self.dimension, "center"))

    @property
    def cells(self):
        return self.samples.shape[0]

    def edges(self, axis):
        return self.center[axis] + np.linspace(-self.radius, self.radius, self.cells + 1)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        h = 2 * self.radius / self.cells
        idx = np.floor((y - self.center + self.radius) / h).astype(int)
        ok = np.all((idx >= 0) & (idx < self.cells), axis=-1)
        idx = np.clip(idx, 0, self.cells - 1)
        vals = self.samples[tuple(np.moveaxis(idx, -1, 0))]
        return np.where(ok, vals, 0.0)


@dataclass(frozen=True, eq=False)
class Sum(Measure):
    """Finite signed combination; nested sums are flattened on construction."""

    terms: tuple

    def __post_init__(self):
        flat = []
        for coef, m in self.terms:
            coef = float(coef)
            if isinstance(m, Sum):
                flat.extend((coef * c2, m2) for c2, m2 in m.terms)
            else:
                flat.append((coef, m))
        if not flat:
            raise InvalidSpec("Sum needs at least one component")
        dims = {m.dimension for _, m in flat}
        if len(dims) != 1:
            raise DimensionMismatch("all components of a Sum must share a dimension")
        object.__setattr__(self, "terms", tuple(flat))

    @classmethod
    def of(cls, *terms):
        return cls(tuple(terms))

    @property
    def dimension(self):
        return self.terms[0][1].dimension

    def density(self, y):
        return sum(c * m.density(y) for c, m in self.terms)


def dirac(point, weight=1.0) -> DiracComb:
    p = np.atleast_1d(np.asarray(point, dtype=float))
    return DiracComb(p[None, :], np.array([weight]))


def constant(dimension, value=1.0) -> Measure:
    m = ExpQuadDensity(dimension)
    return m if value == 1.0 else Sum.of((value, m))


def zero(dimension) -> DiracComb:
    return DiracComb(np.zeros((0, dimension)), np.zeros(0))


def _leaf_sign(m) -> int:
    """+1 nonnegative, -1 nonpositive, 0 mixed; zero measures count as +1."""
    if isinstance(m, DiracComb):
        w = m.weights
    elif isinstance(m, GridDensity):
        w = m.samples
    else:
        return 1
    if np.all(w >= 0):
        return 1
    if np.all(w <= 0):
        return -1
    return 0


def sign_status(mu: Measure) -> str:
    """'nonnegative' when every weight, coefficient and density is >= 0, else 'signed'.

    Conservative: a Sum whose parts cancel is still reported as signed.
    """
    if isinstance(mu, Sum):
        ok = all(_leaf_sign(m) * np.sign(c) >= 0 and _leaf_sign(m) != 0 or c == 0
                 for c, m in mu.terms)
        return "nonnegative" if ok else "signed"
    return "nonnegative" if _leaf_sign(mu) == 1 else "signed"


def _abs_leaf(m):
    if isinstance(m, DiracComb):
        return DiracComb(m.locations, np.abs(m.weights))
    if isinstance(m, GridDensity):
        return GridDensity(m.dimension, m.radius, np.abs(m.samples), m.center)
    return m


def absolute(mu: Measure):
    """|mu| when it can be formed exactly, else None.

    Exact for single families and for sums whose terms all carry the same
    sign; a mixed-sign sum may cancel, so None is returned.
    """
    if not isinstance(mu, Sum):
        return _abs_leaf(mu)
    signs = {int(np.sign(c)) * _leaf_sign(m) for c, m in mu.terms if c != 0}
    if signs <= {1} or signs <= {-1}:
        return Sum(tuple((abs(c), _abs_leaf(m)) for c, m in mu.terms))
    return None


def leaves(mu: Measure):
    """Iterate (coefficient, leaf) pairs."""
    if isinstance(mu, Sum):
        return list(mu.terms)
    return [(1.0, mu)]


def as_points(x, dimension) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[-1] != dimension:
        if dimension == 1:
            x = x[..., None]
        else:
            raise DimensionMismatch(f"points must have trailing dimension {dimension}")
    return x


def check_same_dimension(*ms: Sequence[Measure]):
    dims = {m.dimension for m in ms}
    if len(dims) != 1:
        raise DimensionMismatch("measures have different dimensions")
