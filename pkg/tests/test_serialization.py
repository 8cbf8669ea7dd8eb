"""Measure documents and the HGRD sidecar."""
import struct

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from heatgrowth.blowup import ConvexSetSpec, HalfSpace
from heatgrowth.errors import InvalidSpec
from heatgrowth.kernel import evaluate_many
from heatgrowth.measures import (
    AnnulusSum,
    DiracComb,
    ExpQuadDensity,
    GridDensity,
    HalfSpacePiece,
    Modifier,
    Sum,
)
from heatgrowth.serialization import (
    convex_spec_from_doc,
    convex_spec_to_doc,
    dump_measure,
    load_measure,
    measure_from_doc,
    measure_to_doc,
    read_hgrd,
    write_hgrd,
)


@given(arrays(np.float64, st.sampled_from([(4,), (3, 3), (2, 2, 2)]),
              elements=st.floats(-1e300, 1e300)))
def test_hgrd_round_trip(tmp_path_factory, a):
    p = tmp_path_factory.mktemp("g") / "s.hgrd"
    write_hgrd(p, a)
    b = read_hgrd(p)
    assert b.shape == a.shape
    assert np.array_equal(a, b)


def test_hgrd_layout(tmp_path):
    p = tmp_path / "s.hgrd"
    write_hgrd(p, np.arange(4.0).reshape(2, 2))
    raw = p.read_bytes()
    assert raw[:4] == b"HGRD"
    assert struct.unpack("<III", raw[4:16]) == (1, 2, 2)
    assert np.frombuffer(raw[16:], "<f8").tolist() == [0.0, 1.0, 2.0, 3.0]


@pytest.mark.parametrize("mutate,msg", [
    (lambda r: b"XXXX" + r[4:], "not an HGRD"),
    (lambda r: r[:4] + struct.pack("<I", 9) + r[8:], "version"),
    (lambda r: r[:-8], "size"),
    (lambda r: r[:10], "short"),
])
def test_hgrd_rejects_corrupt_files(tmp_path, mutate, msg):
    p = tmp_path / "s.hgrd"
    write_hgrd(p, np.ones((2, 2)))
    p.write_bytes(mutate(p.read_bytes()))
    with pytest.raises(InvalidSpec, match=msg):
        read_hgrd(p)


def test_hgrd_rejects_non_cube(tmp_path):
    with pytest.raises(InvalidSpec):
        write_hgrd(tmp_path / "s.hgrd", np.ones((2, 3)))


MEASURES = {
    "dirac_comb": DiracComb(np.array([[0.0, 1.0], [2.0, -1.0]]), np.array([1.0, 0.5])),
    "exp_quad": ExpQuadDensity(2, 0.1, [0.5, 0.0], Modifier.exp_decay(1.0) * Modifier.power_decay(2),
                               [1.0, 0.0], 0.0, 5.0),
    "annulus_sum": AnnulusSum(1, (1.0, 2.0), (2.0, 8.0), (2.0, 2.0)),
    "half_space": HalfSpacePiece(2, [1.0, 0.0], 0.5, True, 0.2),
    "grid": GridDensity(1, 2.0, np.array([0.0, 1.0, 3.0, 1.0])),
    "sum": Sum.of((0.5, ExpQuadDensity(1, 0.0, [1.0])), (-0.5, DiracComb(np.array([[0.0]]), np.ones(1)))),
}


@pytest.mark.parametrize("kind", sorted(MEASURES))
def test_measure_round_trip(tmp_path, kind):
    mu = MEASURES[kind]
    path = tmp_path / f"{kind}.yaml"
    dump_measure(mu, path)
    back = load_measure(path)
    assert type(back) is type(mu)
    assert measure_to_doc(back, sidecar=tmp_path / "again") == measure_to_doc(mu, sidecar=tmp_path / "again")
    X = np.zeros((3, mu.dimension))
    X[:, 0] = [-0.5, 0.0, 0.75]
    a, _, _ = evaluate_many(mu, X, 0.3)
    b, _, _ = evaluate_many(back, X, 0.3)
    assert np.array_equal(a, b)


def test_grid_writes_sidecar(tmp_path):
    dump_measure(MEASURES["grid"], tmp_path / "g.yaml")
    doc = yaml.safe_load((tmp_path / "g.yaml").read_text())
    assert doc["body"]["samples_file"] == "g.hgrd"
    assert (tmp_path / "g.hgrd").exists()


def test_grid_without_sidecar_refused():
    with pytest.raises(InvalidSpec):
        measure_to_doc(MEASURES["grid"])


def test_shorthand_kinds():
    c = measure_from_doc({"dimension": 1, "body": {"kind": "constant", "value": 2.0}})
    d = measure_from_doc({"dimension": 2, "body": {"kind": "dirac", "at": [1, 2], "weight": 3}})
    v, _, _ = evaluate_many(c, np.zeros((1, 1)), 1.0)
    assert v[0] == pytest.approx(2.0)
    assert d.locations.tolist() == [[1.0, 2.0]] and d.weights.tolist() == [3.0]


@pytest.mark.parametrize("doc", [
    None,
    {"dimension": 1},
    {"dimension": 0, "body": {"kind": "constant"}},
    {"dimension": 1, "body": {"kind": "nope"}},
    {"dimension": 1, "body": {"value": 1}},
    {"dimension": 1, "body": {"kind": "exp_quad", "A": "big"}},
    {"dimension": 1, "body": {"kind": "dirac_comb", "weights": [1]}},
    {"dimension": 1, "body": {"kind": "grid", "radius": 1, "samples_file": "missing.hgrd"}},
])
def test_bad_documents(doc):
    with pytest.raises(InvalidSpec):
        measure_from_doc(doc)


def test_malformed_yaml(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("dimension: [1\n")
    with pytest.raises(InvalidSpec):
        load_measure(p)


def test_convex_round_trip():
    spec = ConvexSetSpec((0.0, 0.0), (HalfSpace((1.0, 0.0), 1.0, False), HalfSpace((0.0, -1.0), 2.0, True)))
    doc = convex_spec_to_doc(spec)
    assert convex_spec_from_doc(yaml.safe_load(yaml.safe_dump(doc))) == spec


@pytest.mark.parametrize("doc", [{}, {"x0": [0], "half_spaces": [{"n": [1]}]}])
def test_bad_convex_documents(doc):
    with pytest.raises(InvalidSpec):
        convex_spec_from_doc(doc)
