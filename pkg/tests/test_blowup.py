import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatgrowth.blowup import (
    ConvexSetSpec,
    HalfSpace,
    blowup_time,
    build_convex_regular_data,
    classify_point,
    limit_profile_at_T,
    norm_blowup_track,
    regular_set_integral,
)
from heatgrowth.errors import InvalidSpec, NotFactored, SignedDataUnsupported
from heatgrowth.kernel import evaluate
from heatgrowth.measures import DiracComb, ExpQuadDensity, Modifier, dirac, translate

M = Modifier
A = 0.25
E51 = ExpQuadDensity(1, A)
E52 = ExpQuadDensity(1, A, modifier=M.power_decay(2))
E53 = ExpQuadDensity(1, A, modifier=M.exp_decay(1))
E54 = ExpQuadDensity(1, A, modifier=M.exp_decay(1) * M.power_decay(2))
E55 = ExpQuadDensity(1, A, modifier=M.stretched_exp_decay(1, 1.5))


def codes(mu, xs):
    return "".join(c.code for _, c in limit_profile_at_T(mu, [[x] for x in xs]))


# -- maximal time -----------------------------------------------------------------

def test_blowup_time_examples():
    assert blowup_time(E51) == 1.0
    assert math.isinf(blowup_time(DiracComb(np.array([[0.0], [2.0]]), np.array([1.0, 1.0]))))
    assert blowup_time(ExpQuadDensity(1, 0.5, modifier=M.stretched_exp_decay(1, 1.5))) == 0.5
    with pytest.raises(SignedDataUnsupported):
        blowup_time(DiracComb(np.array([[0.0]]), np.array([-1.0])))


# -- the integral I_v --------------------------------------------------------------

def test_regular_set_integral_examples():
    r = regular_set_integral(A, M.exp_decay(1), [0.0])
    assert r.status == "convergent" and r.value == pytest.approx(2.0, rel=1e-9)
    assert regular_set_integral(A, M.exp_decay(1), [2.1]).divergent
    assert regular_set_integral(A, M.power_decay(2), [0.1]).divergent
    assert regular_set_integral(A, M.power_decay(2), [0.0]).value == pytest.approx(math.pi, rel=1e-9)


@given(st.floats(-1.9, 1.9))
def test_regular_set_integral_closed_form_inside_ball(x):
    # int e^{2Axz - |z|} dz = 2 / (1 - (2Ax)^2)
    a = 2 * A * x
    r = regular_set_integral(A, M.exp_decay(1), [x])
    assert r.value == pytest.approx(2 / (1 - a * a), rel=1e-8)


def test_regular_set_integral_guards():
    with pytest.raises(ValueError):
        regular_set_integral(0.0, M.exp_decay(1), [0.0])
    with pytest.raises(NotFactored):
        regular_set_integral(0.1, E51, [0.0])
    with pytest.raises(NotFactored):
        regular_set_integral(A, "not a factor", [0.0])


# -- the five examples ---------------------------------------------------------------

def test_example_profiles():
    xs = [0, 1, 1.9, 2.1, 3]
    assert codes(E53, xs) == "RRRBB"
    assert codes(E51, xs) == "BBBBB"
    assert codes(E55, xs) == "RRRRR"
    assert codes(E52, [0.0, 0.5, -0.5, 2.0]) == "RBBB"
    assert [classify_point(E54, [x]).code for x in (2.0, -2.0, 2.2, 1.0)] == list("RRBR")
    # the open ball excludes its boundary, the closed one includes it
    assert classify_point(E53, [2.0]).code == "B"


def test_global_data_is_reported_as_such():
    assert classify_point(dirac(0.0), [0.0]).verdict == "GlobalInTime"


def test_regular_limit_matches_formula():
    # (A/pi)^{1/2} int e^{2Axy - |y|} dy at x = 1
    c = classify_point(E53, [1.0])
    want = math.sqrt(A / math.pi) * 2 / (1 - 0.25) * math.exp(-A)
    # the limit weights the data by e^{-A|x-y|^2}, which is e^{-A x^2} times I_v
    assert c.limit == pytest.approx(want, rel=1e-9)


# -- dichotomy consistency ------------------------------------------------------------

@pytest.mark.parametrize("mu,x", [(E53, 0.0), (E53, 1.0), (E53, -1.5), (E54, 1.5), (E54, 2.0),
                                  (E55, 3.0), (E52, 0.0)])
def test_regular_points_have_monotone_bounded_approach(mu, x):
    c = classify_point(mu, [x])
    assert c.verdict == "Regular"
    T = blowup_time(mu)
    ts = [T * (1 - 10.0 ** -k) for k in range(1, 10)]
    vals = [evaluate(mu, [x], t).value for t in ts]
    # the approach is one-sided (from above at the origin, from below further
    # out), so the gaps to the limit shrink monotonically up to quadrature noise
    gaps = [abs(v - c.limit) for v in vals]
    assert all(b <= a + 1e-9 * c.limit for a, b in zip(gaps, gaps[1:]))
    assert len({np.sign(v - c.limit) for v in vals[:4]} - {0.0}) == 1
    assert vals[-1] == pytest.approx(c.limit, rel=1e-4)


@pytest.mark.parametrize("mu,x", [(E51, 0.0), (E51, 2.5), (E53, 3.0), (E54, 2.2), (E52, 0.5)])
def test_blowup_points_exceed_any_bound(mu, x):
    assert classify_point(mu, [x]).verdict == "Blowup"
    T = blowup_time(mu)
    vals = [evaluate(mu, [x], T * (1 - 10.0 ** -k)).value for k in range(1, 14)]
    assert max(vals) > 1e6


@pytest.mark.parametrize("mu", [E51, E52, E53, E54, E55], ids=["5.1", "5.2", "5.3", "5.4", "5.5"])
@given(x=st.floats(-4, 4), z=st.floats(-3, 3))
@settings(max_examples=15)
def test_translation_consistency(mu, x, z):
    if any(abs(abs(x) - b) < 1e-2 for b in (0.0, 2.0)):
        return  # too close to a boundary for the shifted arithmetic
    a = classify_point(mu, [x]).verdict
    b = classify_point(translate(mu, [z]), [x + z]).verdict
    assert a == b


# -- convexity of the regular set --------------------------------------------------

def test_regular_set_is_convex_along_segments():
    rng = np.random.default_rng(5)
    planar = ExpQuadDensity(2, A, modifier=M.exp_decay(1))
    spec = ConvexSetSpec((0.2, -0.1), (HalfSpace((1.0, 0.0), 1.0), HalfSpace((0.6, 0.8), 0.5, True)))
    for mu in (planar, build_convex_regular_data(spec, A)):
        pts = rng.uniform(-3, 3, (60, 2))
        reg = [p for p in pts if classify_point(mu, p).verdict == "Regular"]
        assert len(reg) >= 4
        for i in range(0, len(reg) - 1, 2):
            mid = 0.5 * (reg[i] + reg[i + 1])
            assert classify_point(mu, mid).verdict == "Regular"


# -- synthesis of data with a prescribed regular set --------------------------------

def test_convex_examples():
    u = build_convex_regular_data(ConvexSetSpec((0.0, 0.0), (HalfSpace((1.0, 0.0), 1.0),)), A)
    assert [classify_point(u, p).code for p in ([1, 0], [0, 5], [1.5, 0])] == list("RRB")
    spec = ConvexSetSpec((0.0, 0.0), (HalfSpace((1.0, 0.0), 1.0), HalfSpace((0.0, 1.0), 1.0)))
    u = build_convex_regular_data(spec, A)
    assert [classify_point(u, p).code for p in ([0, 0], [2, 0], [1, 1], [0, 1.3])] == list("RBRB")
    u = build_convex_regular_data(ConvexSetSpec((0.0, 0.0)), A)
    assert [classify_point(u, p).code for p in ([0, 0], [20, 3], [-7, 11])] == list("RRR")


def test_strict_half_space_excludes_its_boundary():
    spec = ConvexSetSpec((0.0, 0.0), (HalfSpace((0.0, 1.0), 1.0, True),))
    u = build_convex_regular_data(spec, A)
    assert [classify_point(u, p).code for p in ([0, 0.999], [0, 1.0], [3, 1.0])] == list("RBB")
    spec = ConvexSetSpec((0.0, 0.0), (HalfSpace((0.0, 1.0), 1.0, False),))
    u = build_convex_regular_data(spec, A)
    assert classify_point(u, [3.0, 1.0]).code == "R"


def test_convex_spec_validation():
    with pytest.raises(InvalidSpec):
        ConvexSetSpec((0.0, 0.0), (HalfSpace((1.0, 0.0), 0.0, True),))
    with pytest.raises(InvalidSpec):
        ConvexSetSpec((0.0, 0.0), (HalfSpace((2.0, 0.0), 1.0),))
    with pytest.raises(InvalidSpec):
        ConvexSetSpec((0.0, 0.0), (HalfSpace((1.0, 0.0, 0.0), 1.0),))


def test_boundary_gap_inside_is_exact():
    spec = ConvexSetSpec((1.0, 0.0), (HalfSpace((1.0, 0.0), 1.0), HalfSpace((0.0, 1.0), 2.0)))
    assert spec.contains([1.5, 0.0]) and not spec.contains([2.5, 0.0])
    assert spec.boundary_gap([1.5, 0.0]) == pytest.approx(0.5)
    assert spec.boundary_gap([2.5, 0.0]) > 0


unit = st.floats(0, 2 * math.pi)


@st.composite
def convex_specs(draw):
    k = draw(st.integers(0, 3))
    hs = []
    for _ in range(k):
        th = draw(unit)
        hs.append(HalfSpace((math.cos(th), math.sin(th)), draw(st.floats(0.3, 2.0)), draw(st.booleans())))
    return ConvexSetSpec((draw(st.floats(-1, 1)), draw(st.floats(-1, 1))), tuple(hs))


@given(spec=convex_specs(), p=st.tuples(st.floats(-4, 4), st.floats(-4, 4)))
@settings(max_examples=40)
def test_convex_round_trip_property(spec, p):
    p = np.asarray(spec.x0) + np.asarray(p)
    if spec.boundary_gap(p) <= 0.1:
        return
    u = build_convex_regular_data(spec, A)
    c = classify_point(u, p)
    assert c.verdict == ("Regular" if spec.contains(p) else "Blowup")
    if c.verdict == "Regular":
        assert c.limit > 0 and math.isfinite(c.limit)


# -- norm track --------------------------------------------------------------------

def test_norm_track_examples():
    tr = norm_blowup_track(E51, 1.0, [0.5, 0.9, 0.99])
    assert tr[0] < tr[1] <= tr[2] and tr[-1] > 10 * tr[0]
    d = norm_blowup_track(dirac(0.0), 1.0, [1.0, 10.0, 100.0])
    assert max(d) < 1.0
    # pointwise limits exist everywhere, yet the weighted norm still diverges
    tr = norm_blowup_track(E55, 1.0, [0.5, 0.9, 0.99])
    assert math.isinf(tr[-1]) or tr[-1] > 10 * tr[0]
