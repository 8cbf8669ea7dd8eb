"""Measure documents (YAML) and the HGRD binary sidecar for grid samples.

A document looks like::

    dimension: 1
    body:
      kind: exp_quad
      A: 0.25
      modifier: {exp_rate: 1.0}

Sums nest as ``{kind: sum, terms: [{coef: 0.5, body: {...}}, ...]}``.
Grid samples live in a separate file: a 16-byte header (magic ``HGRD``,
then version, N and cells-per-axis as little-endian u32) followed by the
samples as little-endian float64 in row-major order.
"""
from __future__ import annotations

import math
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np
import yaml

from .blowup import ConvexSetSpec, HalfSpace
from .errors import InvalidSpec
from .families import (
    AnnulusSum,
    DiracComb,
    ExpQuadDensity,
    GridDensity,
    HalfSpacePiece,
    Measure,
    Modifier,
    Sum,
)

__all__ = [
    "read_hgrd",
    "write_hgrd",
    "measure_to_doc",
    "measure_from_doc",
    "load_measure",
    "dump_measure",
    "convex_spec_from_doc",
    "convex_spec_to_doc",
]

HGRD_MAGIC = b"HGRD"
HGRD_VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_hgrd(path, samples: np.ndarray) -> None:
    s = np.asarray(samples, dtype="<f8")
    if len(set(s.shape)) != 1:
        raise InvalidSpec("grid samples must be a cube")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(HGRD_MAGIC, HGRD_VERSION, s.ndim, s.shape[0]))
        fh.write(np.ascontiguousarray(s).tobytes(order="C"))


def read_hgrd(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InvalidSpec("HGRD file too short")
    magic, version, N, m = _HEADER.unpack_from(raw)
    if magic != HGRD_MAGIC:
        raise InvalidSpec("not an HGRD file")
    if version != HGRD_VERSION:
        raise InvalidSpec(f"unsupported HGRD version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * m ** N:
        raise InvalidSpec("HGRD payload size does not match its header")
    return np.frombuffer(body, dtype="<f8").reshape((m,) * N).astype(float)


def _lst(a):
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def _modifier_doc(m: Modifier):
    default = asdict(Modifier())
    return {k: v for k, v in asdict(m).items() if v != default[k]}


def _body(mu, sidecar, counter):
    if isinstance(mu, Sum):
        return {"kind": "sum", "terms": [{"coef": float(c), "body": _body(m, sidecar, counter)}
                                         for c, m in mu.terms]}
    if isinstance(mu, DiracComb):
        return {"kind": "dirac_comb", "locations": [_lst(p) for p in mu.locations],
                "weights": _lst(mu.weights)}
    if isinstance(mu, ExpQuadDensity):
        d = {"kind": "exp_quad", "A": float(mu.A), "b": _lst(mu.b), "center": _lst(mu.center),
             "r_min": float(mu.r_min), "r_max": float(mu.r_max)}
        mod = _modifier_doc(mu.modifier)
        if mod:
            d["modifier"] = mod
        return d
    if isinstance(mu, AnnulusSum):
        return {"kind": "annulus_sum", "weights": list(mu.weights), "scales": list(mu.scales),
                "ratios": list(mu.ratios), "center": _lst(mu.center)}
    if isinstance(mu, HalfSpacePiece):
        return {"kind": "half_space", "n": _lst(mu.n), "c": float(mu.c), "strict": bool(mu.strict),
                "A": float(mu.A), "x0": _lst(mu.x0), "shift": _lst(mu.shift), "scale": float(mu.scale)}
    if isinstance(mu, GridDensity):
        if sidecar is None:
            raise InvalidSpec("grid densities need a sidecar path")
        counter[0] += 1
        path = Path(f"{sidecar}.{counter[0]}.hgrd") if counter[0] > 1 else Path(f"{sidecar}.hgrd")
        write_hgrd(path, mu.samples)
        return {"kind": "grid", "radius": float(mu.radius), "center": _lst(mu.center),
                "samples_file": path.name}
    raise InvalidSpec(f"cannot serialise {type(mu).__name__}")


def measure_to_doc(mu: Measure, sidecar=None) -> dict:
    """Document for ``mu``; grid samples are written next to ``sidecar`` (a path stem)."""
    return {"dimension": int(mu.dimension), "body": _body(mu, sidecar, [0])}


def _num(v, name):
    try:
        return float(v)
    except (TypeError, ValueError):
        raise InvalidSpec(f"{name} must be a number") from None


def _from_body(b, N, base):
    if not isinstance(b, dict) or "kind" not in b:
        raise InvalidSpec("every body needs a 'kind'")
    kind = b["kind"]
    try:
        if kind == "sum":
            terms = tuple((_num(t.get("coef", 1.0), "coef"), _from_body(t["body"], N, base))
                          for t in b["terms"])
            return Sum(terms)
        if kind == "dirac":
            p = np.atleast_1d(np.asarray(b.get("at", [0.0] * N), dtype=float))
            return DiracComb(p.reshape(1, N), np.array([_num(b.get("weight", 1.0), "weight")]))
        if kind == "dirac_comb":
            loc = np.asarray(b["locations"], dtype=float).reshape(-1, N)
            return DiracComb(loc, np.asarray(b["weights"], dtype=float))
        if kind == "constant":
            m = ExpQuadDensity(N)
            v = _num(b.get("value", 1.0), "value")
            return m if v == 1.0 else Sum.of((v, m))
        if kind == "exp_quad":
            mod = Modifier(**{k: float(v) for k, v in (b.get("modifier") or {}).items()})
            return ExpQuadDensity(N, _num(b.get("A", 0.0), "A"), b.get("b"), mod, b.get("center"),
                                  _num(b.get("r_min", 0.0), "r_min"), _num(b.get("r_max", math.inf), "r_max"))
        if kind == "annulus_sum":
            return AnnulusSum(N, tuple(b["weights"]), tuple(b["scales"]), tuple(b["ratios"]), b.get("center"))
        if kind == "half_space":
            return HalfSpacePiece(N, b["n"], _num(b["c"], "c"), bool(b.get("strict", False)),
                                  _num(b["A"], "A"), b.get("x0"), b.get("shift"),
                                  _num(b.get("scale", 1.0), "scale"))
        if kind == "grid":
            path = Path(base) / b["samples_file"]
            if not path.exists():
                raise InvalidSpec(f"missing grid sidecar {path}")
            samples = read_hgrd(path)
            if samples.ndim != N:
                raise InvalidSpec("grid sidecar dimension does not match the document")
            return GridDensity(N, _num(b["radius"], "radius"), samples, b.get("center"))
    except KeyError as exc:
        raise InvalidSpec(f"{kind}: missing field {exc.args[0]!r}") from None
    except TypeError as exc:
        raise InvalidSpec(f"{kind}: {exc}") from None
    raise InvalidSpec(f"unknown measure kind {kind!r}")


def measure_from_doc(doc: dict, base_dir=".") -> Measure:
    if not isinstance(doc, dict) or "dimension" not in doc or "body" not in doc:
        raise InvalidSpec("a measure document needs 'dimension' and 'body'")
    N = int(doc["dimension"])
    if N < 1:
        raise InvalidSpec("dimension must be >= 1")
    return _from_body(doc["body"], N, base_dir)


def load_measure(path) -> Measure:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise InvalidSpec(f"{path}: {exc}") from None
    return measure_from_doc(doc, path.parent)


def dump_measure(mu: Measure, path) -> None:
    path = Path(path)
    doc = measure_to_doc(mu, sidecar=path.with_suffix(""))
    path.write_text(yaml.safe_dump(doc, sort_keys=False))


def convex_spec_from_doc(doc: dict) -> ConvexSetSpec:
    """``{x0: [...], half_spaces: [{n: [...], c: 1.0, strict: false}, ...]}``."""
    if not isinstance(doc, dict) or "x0" not in doc:
        raise InvalidSpec("a convex set document needs 'x0'")
    hs = []
    for h in doc.get("half_spaces") or []:
        try:
            hs.append(HalfSpace(tuple(float(v) for v in h["n"]), float(h["c"]), bool(h.get("strict", False))))
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"bad half-space entry: {exc}") from None
    return ConvexSetSpec(tuple(float(v) for v in doc["x0"]), tuple(hs))


def convex_spec_to_doc(spec: ConvexSetSpec) -> dict:
    return {"x0": list(spec.x0),
            "half_spaces": [{"n": list(h.n), "c": h.c, "strict": h.strict} for h in spec.half_spaces]}
