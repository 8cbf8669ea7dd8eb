import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from heatgrowth.errors import IndexTooSmall, InsufficientShells, InvalidSpec
from heatgrowth.measures import (
    AnnulusSum,
    DiracComb,
    ExpQuadDensity,
    GridDensity,
    Modifier,
    Sum,
    ball_mass,
    btv_norm,
    constant,
    dilate,
    dirac,
    estimate_growth_index,
    growth_index,
    log_shell_mass,
    meps_norm,
    translate,
    uniform_norm,
)

import oracles

M = Modifier


def closed_families():
    """Data with a closed-form or direct M_eps norm, each with an admissible eps range."""
    return [
        dirac(0.3),
        DiracComb(np.array([[0.0], [1.0], [-2.5]]), np.array([1.0, 2.0, 0.5])),
        constant(1),
        ExpQuadDensity(1, A=0.1),
        ExpQuadDensity(1, A=0.1, b=[0.7]),
        ExpQuadDensity(1, A=0.2, modifier=M.exp_decay(1)),
        ExpQuadDensity(1, r_max=1.0),
        AnnulusSum(1, (1.0, 2.0), (1.0, 4.0), (1.5, 1.5)),
        constant(2),
        dirac([0.5, -1.0]),
    ]


# -- growth index -------------------------------------------------------------

def test_growth_index_examples():
    g = growth_index(ExpQuadDensity(1, A=0.25))
    assert (g.eps0, g.attained) == (0.25, False)
    assert growth_index(DiracComb(np.array([[0.0], [3.0]]), np.array([1.0, 2.0]))).eps0 == 0
    assert growth_index(dirac(0.0)).attained is True
    g = growth_index(ExpQuadDensity(1, A=0.25, modifier=M.exp_decay(1)))
    assert (g.eps0, g.attained) == (0.25, True)


@pytest.mark.parametrize("alpha,N,attained", [(2.0, 1, True), (1.0, 1, False), (0.8, 1, False),
                                               (3.0, 2, True), (2.0, 2, False)])
def test_power_decay_attainment_needs_alpha_above_dimension(alpha, N, attained):
    assert growth_index(ExpQuadDensity(N, A=0.25, modifier=M.power_decay(alpha))).attained is attained


def test_sum_growth_takes_max_and_mixed_attainment_is_false():
    a = ExpQuadDensity(1, A=0.25, modifier=M.exp_decay(1))
    b = ExpQuadDensity(1, A=0.25)
    assert growth_index(Sum.of((1.0, a), (1.0, dirac(0.0)))).attained is True
    assert growth_index(Sum.of((1.0, a), (2.0, b))).attained is False
    assert growth_index(Sum.of((1.0, a), (1.0, ExpQuadDensity(1, A=0.1)))).eps0 == 0.25


def test_meps_rejects_index_below_optimal():
    with pytest.raises(IndexTooSmall):
        meps_norm(ExpQuadDensity(1, A=0.25), 0.2)
    with pytest.raises(IndexTooSmall):
        meps_norm(ExpQuadDensity(1, A=0.25), 0.25)
    # attained at the index itself: e^{-|x|} has M_{1/4} norm (1/4pi)^{1/2} * 2
    v = meps_norm(ExpQuadDensity(1, A=0.25, modifier=M.exp_decay(1)), 0.25)
    assert v == pytest.approx(math.sqrt(0.25 / math.pi) * 2.0, rel=1e-9)


# -- M_eps norm vs independent quadrature ---------------------------------------

@pytest.mark.parametrize("mu,log_density", [
    (ExpQuadDensity(1, A=0.1), lambda y: 0.1 * y * y),
    (ExpQuadDensity(1, A=0.1, b=[0.7]), lambda y: 0.1 * y * y + 0.7 * y),
    (ExpQuadDensity(1, A=0.2, modifier=M.exp_decay(1)), lambda y: 0.2 * y * y - abs(y)),
    (ExpQuadDensity(1, A=0.2, modifier=M.power_decay(2)), lambda y: 0.2 * y * y - math.log1p(y * y)),
    (ExpQuadDensity(1, modifier=M.stretched_exp_decay(1, 1.5)), lambda y: -abs(y) ** 1.5),
    (ExpQuadDensity(1, modifier=M(stretch_rate=-1.0)), lambda y: abs(y) ** 1.5),
])
@pytest.mark.parametrize("eps", [0.3, 1.0])
def test_meps_matches_scipy(mu, log_density, eps):
    assert meps_norm(mu, eps) == pytest.approx(oracles.meps_1d(log_density, eps), rel=1e-8)


def test_meps_simple_values():
    assert meps_norm(constant(1), 0.37) == pytest.approx(1.0, rel=1e-12)
    assert meps_norm(constant(3), 0.37) == pytest.approx(1.0, rel=1e-12)
    assert meps_norm(dirac(0.0), 1.0) == pytest.approx(1 / math.sqrt(math.pi))
    assert meps_norm(ExpQuadDensity(1, A=0.25), 0.5) == pytest.approx(math.sqrt(2), rel=1e-12)
    # the chi-[-1,1] stripe: (eps/pi)^{1/2} * sqrt(pi/eps) erf(sqrt eps)
    assert meps_norm(ExpQuadDensity(1, r_max=1.0), 2.0) == pytest.approx(math.erf(math.sqrt(2)), rel=1e-10)


def test_meps_signed_comb_uses_total_variation():
    mu = DiracComb(np.array([[0.0], [1.0]]), np.array([1.0, -2.0]))
    want = math.sqrt(0.5 / math.pi) * (1 + 2 * math.exp(-0.5))
    assert meps_norm(mu, 0.5) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("mu", closed_families(), ids=lambda m: type(m).__name__)
@given(e1=st.floats(0.3, 3.0), ratio=st.floats(1.0, 5.0))
def test_norm_monotonicity_constant(mu, e1, ratio):
    e2 = e1 * ratio
    n1, n2 = meps_norm(mu, e1), meps_norm(mu, e2)
    N = mu.dimension
    assert n2 <= (e2 / e1) ** (N / 2) * n1 * (1 + 1e-9)


@given(st.floats(0.3, 2.0), st.floats(0.1, 3.0), st.floats(0.0, 2.0))
def test_triangle_inequality_for_sums(eps, c1, c2):
    a, b = ExpQuadDensity(1, A=0.2), dirac(1.0)
    s = Sum.of((c1, a), (c2, b))
    lhs = meps_norm(s, eps)
    rhs = c1 * meps_norm(a, eps) + c2 * meps_norm(b, eps)
    # nonnegative pieces: equality
    assert lhs == pytest.approx(rhs, rel=1e-9)
    signed = Sum.of((c1, a), (-c2, b))
    assert meps_norm(signed, eps) <= rhs * (1 + 1e-9)


# -- translation and dilation ---------------------------------------------------

def test_translate_identities():
    mu = ExpQuadDensity(1, A=0.25)
    assert translate(mu, [0.0]) is mu
    d = translate(dirac(0.5), [1.5])
    assert d.locations[0, 0] == 2.0
    # tau_y e^{A x^2} has density e^{A (x - y)^2}
    t = translate(mu, [1.3])
    ys = np.linspace(-3, 3, 13)
    assert np.allclose(t.density(ys[:, None]), np.exp(0.25 * (ys - 1.3) ** 2), rtol=1e-12)


@pytest.mark.parametrize("mu", closed_families() + [ExpQuadDensity(1, A=0.25)],
                         ids=lambda m: type(m).__name__)
@given(y=st.floats(-5, 5))
def test_translation_keeps_index(mu, y):
    y = [y] * mu.dimension
    assert growth_index(translate(mu, y)).eps0 == growth_index(mu).eps0


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("mu", closed_families(), ids=lambda m: type(m).__name__)
def test_dilation_norm_identity(mu, lam):
    floor = growth_index(mu).eps0 * lam ** 2
    for eps in (e for e in (0.5, 1.0, 2.0) if e > floor):
        assert meps_norm(dilate(mu, lam), eps) == pytest.approx(meps_norm(mu, eps / lam ** 2), rel=1e-8)


def test_dilation_examples():
    mu = ExpQuadDensity(1, A=0.1)
    assert dilate(mu, 1) is mu
    for lam in (0.5, 3.0):
        assert growth_index(dilate(mu, lam)).eps0 == pytest.approx(0.1 * lam ** 2)
        assert meps_norm(dilate(constant(1), lam), 0.7) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        dilate(mu, 0)


def test_dilation_of_monomial_growth():
    mu = ExpQuadDensity(1, modifier=M.monomial_growth(1))  # density |x|
    d = dilate(mu, 2.0)
    ys = np.array([[0.5], [1.0], [3.0]])
    assert np.allclose(d.density(ys), 2 * np.abs(ys[:, 0]))


# -- shell estimator ------------------------------------------------------------

@pytest.mark.parametrize("A", [0.05, 0.1, 0.5])
def test_estimator_within_five_percent(A):
    est = estimate_growth_index(ExpQuadDensity(1, A=A), k_max=6)
    assert est.source == "estimated" and est.attained is None
    assert est.eps0 == pytest.approx(A, rel=0.05)


def test_estimator_examples():
    assert 0.099 <= estimate_growth_index(ExpQuadDensity(1, A=0.1), 6).eps0 <= 0.101
    assert estimate_growth_index(ExpQuadDensity(1, r_max=3.0), 6).eps0 == 0
    # e^{|x|^1.5}: subquadratic exponent, so log m_k / 4^k -> 0.  The three-shell
    # slope tracks 2^{1.5k}/4^k and halves every two extra shells.
    mu = ExpQuadDensity(1, modifier=M(stretch_rate=-1.0))
    ests = [estimate_growth_index(mu, k).eps0 for k in (6, 8, 10)]
    assert ests[0] > ests[1] > ests[2] > 0
    assert all(b / a < 0.55 for a, b in zip(ests, ests[1:]))
    ratios = [log_shell_mass(mu, 2.0 ** (k - 1), 2.0 ** k) / 4.0 ** k for k in range(4, 11)]
    assert all(b < a for a, b in zip(ratios, ratios[1:])) and ratios[-1] < 0.05
    with pytest.raises(InsufficientShells):
        estimate_growth_index(constant(1), 3)


# -- uniform and total-variation norms -------------------------------------------

def test_uniform_norm_examples():
    assert uniform_norm(constant(1)) == pytest.approx(2.0, rel=1e-9)
    assert uniform_norm(dirac(0.0)) == pytest.approx(1.0)
    assert math.isinf(uniform_norm(ExpQuadDensity(1, b=[1.0])))
    assert math.isinf(uniform_norm(ExpQuadDensity(1, A=0.1)))
    assert uniform_norm(constant(2)) == pytest.approx(math.pi, rel=1e-9)


def test_btv_norm_examples():
    assert btv_norm(DiracComb(np.array([[0.0], [1.0]]), np.array([1.0, -2.0]))) == pytest.approx(3.0)
    assert math.isinf(btv_norm(constant(1)))
    assert btv_norm(ExpQuadDensity(1, modifier=M.exp_decay(1))) == pytest.approx(2.0, rel=1e-10)


@given(st.floats(-4, 4))
def test_ball_mass_of_stripe(x):
    # |[-1,1] intersect (x-1, x+1)|
    want = max(0.0, min(1.0, x + 1) - max(-1.0, x - 1))
    assert ball_mass(ExpQuadDensity(1, r_max=1.0), [x]) == pytest.approx(want, abs=1e-9)


# -- construction guards ----------------------------------------------------------

def test_invalid_families():
    with pytest.raises(InvalidSpec):
        AnnulusSum(1, (1.0,), (1.0,), (0.5,))
    with pytest.raises(InvalidSpec):
        AnnulusSum(1, (-1.0,), (1.0,), (2.0,))
    with pytest.raises((InvalidSpec, ValueError)):
        GridDensity(1, 1.0, np.ones((2, 2)))


def test_grid_density_piecewise_constant():
    g = GridDensity(1, 2.0, np.array([1.0, 0.0, 3.0, 2.0]))
    assert btv_norm(g) == pytest.approx(6.0)
    assert g.density(np.array([[-1.5], [-0.5], [0.5], [1.5]])).tolist() == [1.0, 0.0, 3.0, 2.0]
