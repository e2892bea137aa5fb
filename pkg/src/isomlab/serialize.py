"""JSON schemas for vectors, representations, sequences and certificates.

Output is deterministic: keys keep the order in which they are built, floats
are printed with 17 significant digits and complex numbers become
``[re, im]``.  Non-finite floats are written as the strings ``"Infinity"``,
``"-Infinity"`` and ``"NaN"`` so the output stays strict JSON.

Decoders raise :class:`SchemaError` naming the offending field.
"""
from __future__ import annotations

import json
import math
from numbers import Number

import numpy as np

from . import discrete, expspan, fell, gauss, reps
from .certificate import Certificate
from .expspan import ExpVector, Term

__all__ = [
    "SchemaError",
    "dumps",
    "loads",
    "encode",
    "decode_complex",
    "decode_expvector",
    "decode_sparse",
    "decode_fellpoint",
    "decode_sequence",
    "decode_cylinder",
    "decode_rep",
    "decode_vector",
    "decode_certificate",
]


class SchemaError(ValueError):
    """Input does not match the expected schema; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# -- encoding -----------------------------------------------------------------

def _float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def encode(obj):
    """Plain JSON-ready structure for any object the package emits."""
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [encode(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {(",".join(map(str, sorted(k))) if isinstance(k, frozenset) else str(k)): encode(v)
                for k, v in obj.items()}
    if isinstance(obj, (frozenset, set)):
        return sorted(encode(x) for x in obj)
    if isinstance(obj, (list, tuple)):
        return [encode(x) for x in obj]
    if isinstance(obj, ExpVector):
        return encode_expvector(obj)
    if isinstance(obj, discrete.SparseVector):
        return encode_sparse(obj)
    if isinstance(obj, reps.DirectSumVector):
        return {"components": [encode(c) for c in obj.components]}
    if isinstance(obj, gauss.GaussianCylinderVector):
        return encode_cylinder(obj)
    if hasattr(obj, "to_dict"):
        return encode(obj.to_dict())
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _write(obj, out: list):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for j, (k, v) in enumerate(obj.items()):
            if j:
                out.append(", ")
            out.append(json.dumps(k) + ": ")
            _write(v, out)
        out.append("}")
    else:
        out.append("[")
        for j, v in enumerate(obj):
            if j:
                out.append(", ")
            _write(v, out)
        out.append("]")


def dumps(obj) -> str:
    out: list[str] = []
    _write(encode(obj), out)
    return "".join(out) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<document>", f"malformed JSON ({exc.msg} at line {exc.lineno})") from None


def encode_expvector(v: ExpVector) -> dict:
    return {"dim": v.dim, "terms": [
        {"coeff": [t.coeff.real, t.coeff.imag], "shift": list(t.shift),
         "decay": [[z.real, z.imag] for z in t.decay]} for t in v.terms]}


def encode_sparse(v: discrete.SparseVector) -> dict:
    return {"dim": v.dim, "entries": [
        {"index": list(k), "coeff": [complex(c).real, complex(c).imag]}
        for k, c in sorted(v.entries.items())]}


def encode_cylinder(v: gauss.GaussianCylinderVector) -> dict:
    return {"terms": [
        {"coeff": [c.real, c.imag], "factors": [
            {"k": k, "alpha": [f.alpha0.real, f.alpha0.imag], "floor": f.floor0, "shift": f.shift}
            for k, f in factors]} for c, factors in v.terms]}


# -- decoding -----------------------------------------------------------------

def _need(data, key, field):
    if not isinstance(data, dict):
        raise SchemaError(field, "expected an object")
    if key not in data:
        raise SchemaError(f"{field}.{key}", "missing")
    return data[key]


def _real(x, field):
    if isinstance(x, str) and x in ("Infinity", "-Infinity", "NaN"):
        return float(x.replace("Infinity", "inf"))
    if isinstance(x, bool) or not isinstance(x, Number):
        raise SchemaError(field, f"expected a number, got {json.dumps(x)}")
    return float(x)


def decode_complex(x, field="value") -> complex:
    """A number or a ``[re, im]`` pair."""
    if isinstance(x, list):
        if len(x) != 2:
            raise SchemaError(field, "complex numbers are [re, im] pairs")
        return complex(_real(x[0], f"{field}[0]"), _real(x[1], f"{field}[1]"))
    return complex(_real(x, field))


def _list(x, field):
    if not isinstance(x, list):
        raise SchemaError(field, "expected a list")
    return x


def _dim(data, field, minimum=0):
    d = _need(data, "dim", field)
    if isinstance(d, bool) or not isinstance(d, int) or d < minimum:
        raise SchemaError(f"{field}.dim", f"expected an integer >= {minimum}")
    return d


def decode_expvector(data, field="vector") -> ExpVector:
    dim = _dim(data, field)
    terms = []
    for j, term in enumerate(_list(_need(data, "terms", field), f"{field}.terms")):
        where = f"{field}.terms[{j}]"
        coeff = decode_complex(_need(term, "coeff", where), f"{where}.coeff")
        shift = [_real(s, f"{where}.shift") for s in _list(_need(term, "shift", where), f"{where}.shift")]
        decay = [decode_complex(z, f"{where}.decay") for z in _list(_need(term, "decay", where), f"{where}.decay")]
        try:
            terms.append(Term(coeff, expspan._nonneg(shift, dim), expspan.half_plane_point(decay, dim)))
        except ValueError as exc:
            raise SchemaError(where, str(exc)) from None
    return ExpVector(dim, terms)


def decode_sparse(data, field="vector") -> discrete.SparseVector:
    dim = _dim(data, field, 1)
    entries = {}
    for j, e in enumerate(_list(_need(data, "entries", field), f"{field}.entries")):
        where = f"{field}.entries[{j}]"
        index = _list(_need(e, "index", where), f"{where}.index")
        if len(index) != dim or not all(isinstance(i, int) and not isinstance(i, bool) and i >= 0 for i in index):
            raise SchemaError(f"{where}.index", f"expected {dim} non-negative integers")
        key = tuple(index)
        entries[key] = entries.get(key, 0j) + decode_complex(_need(e, "coeff", where), f"{where}.coeff")
    return discrete.SparseVector(dim, entries)


def decode_fellpoint(data, field="point") -> fell.FellPoint:
    d = _need(data, "d", field)
    if isinstance(d, bool) or not isinstance(d, int):
        raise SchemaError(f"{field}.d", "expected an integer")
    A = _list(_need(data, "A", field), f"{field}.A")
    lam = _need(data, "lambda", field)
    if not isinstance(lam, dict):
        raise SchemaError(f"{field}.lambda", "expected an object")
    try:
        return fell.FellPoint(d, A, {int(j): _real(x, f"{field}.lambda.{j}") for j, x in lam.items()})
    except (ValueError, TypeError) as exc:
        raise SchemaError(field, str(exc)) from None


def decode_sequence(data, field="sequence") -> gauss.BoundarySequence:
    prefix = _list(_need(data, "prefix", field), f"{field}.prefix")
    prefix = [None if x is None else _real(x, f"{field}.prefix") for x in prefix]
    gen = data.get("generator")
    try:
        if gen is not None and not isinstance(gen, dict):
            raise SchemaError(f"{field}.generator", "expected an object or null")
        if isinstance(gen, dict) and gen.get("kind") == "shifted":
            base = decode_sequence(_need(gen, "base", f"{field}.generator"), f"{field}.generator.base")
            tail = gauss.ShiftedTail(base, _real(_need(gen, "scale", f"{field}.generator"), f"{field}.generator.scale"),
                                     _real(_need(gen, "power", f"{field}.generator"), f"{field}.generator.power"))
        else:
            if isinstance(gen, dict):
                for key in {"geometric": ("t",), "constant": ("value",)}.get(gen.get("kind"), ()):
                    _need(gen, key, f"{field}.generator")
            tail = gauss._tail_from_dict(gen)
        return gauss.BoundarySequence(prefix, tail)
    except SchemaError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise SchemaError(f"{field}.generator", str(exc)) from None


def decode_cylinder(data, field="vector") -> gauss.GaussianCylinderVector:
    terms = []
    for j, term in enumerate(_list(_need(data, "terms", field), f"{field}.terms")):
        where = f"{field}.terms[{j}]"
        coeff = decode_complex(_need(term, "coeff", where), f"{where}.coeff")
        factors = {}
        for i, f in enumerate(_list(term.get("factors", []), f"{where}.factors")):
            fw = f"{where}.factors[{i}]"
            k = _need(f, "k", fw)
            if isinstance(k, bool) or not isinstance(k, int) or k < 1:
                raise SchemaError(f"{fw}.k", "expected a coordinate >= 1")
            factors[k] = gauss.CylinderFactor(decode_complex(_need(f, "alpha", fw), f"{fw}.alpha"),
                                              _real(_need(f, "floor", fw), f"{fw}.floor"),
                                              _real(f.get("shift", 0.0), f"{fw}.shift"))
        terms.append((coeff, factors))
    return gauss.GaussianCylinderVector(terms)


def _decode_generator(g, field):
    kind = _need(g, "type", field)
    if kind == "shift":
        step = g.get("step", 1)
        if isinstance(step, bool) or not isinstance(step, int) or step < 1:
            raise SchemaError(f"{field}.step", "expected a positive integer")
        return discrete.Shift(step)
    if kind == "phase":
        return discrete.Phase(_real(_need(g, "theta", field), f"{field}.theta"))
    raise SchemaError(f"{field}.type", f"unknown generator type {kind!r}")


def decode_rep(data, field="rep") -> reps.RepresentationHandle:
    kind = _need(data, "kind", field)
    if kind == "shift":
        return reps.ShiftRep(_dim(data, field, 1))
    if kind == "model":
        return fell.ModelRep(decode_fellpoint(_need(data, "point", field), f"{field}.point"))
    if kind == "discrete":
        gens = _list(_need(data, "generators", field), f"{field}.generators")
        if not gens:
            raise SchemaError(f"{field}.generators", "need at least one generator")
        return reps.DiscreteRep(discrete.BasisIsometry(
            [_decode_generator(g, f"{field}.generators[{j}]") for j, g in enumerate(gens)]))
    if kind == "direct_sum":
        parts = _list(_need(data, "summands", field), f"{field}.summands")
        try:
            return reps.DirectSumRep([decode_rep(p, f"{field}.summands[{j}]") for j, p in enumerate(parts)])
        except SchemaError:
            raise
        except ValueError as exc:
            raise SchemaError(f"{field}.summands", str(exc)) from None
    if kind == "gauss":
        return gauss.GaussianRep(decode_sequence(_need(data, "sequence", field), f"{field}.sequence"),
                                 _dim(data, field, 1))
    raise SchemaError(f"{field}.kind", f"unknown representation kind {kind!r}")


def decode_vector(data, rep: reps.RepresentationHandle, field="vector"):
    """Vector in the space ``rep`` acts on."""
    if isinstance(rep, reps.DirectSumRep):
        comps = _list(_need(data, "components", field), f"{field}.components")
        if len(comps) != len(rep.summands):
            raise SchemaError(f"{field}.components", f"expected {len(rep.summands)} components")
        return reps.DirectSumVector([decode_vector(c, r, f"{field}.components[{j}]")
                                     for j, (c, r) in enumerate(zip(comps, rep.summands))])
    if isinstance(rep, reps.DiscreteRep):
        v = decode_sparse(data, field)
        if v.dim != rep.dim:
            raise SchemaError(f"{field}.dim", f"expected {rep.dim}")
        return v
    if isinstance(rep, gauss.GaussianRep):
        return decode_cylinder(data, field)
    v = decode_expvector(data, field)
    expected = len(rep.axes) if isinstance(rep, fell.ModelRep) else rep.dim
    if v.dim != expected:
        raise SchemaError(f"{field}.dim", f"expected {expected}")
    return v


def decode_certificate(data, field="certificate") -> Certificate:
    try:
        return Certificate.from_dict(data)
    except KeyError as exc:
        raise SchemaError(f"{field}.{exc.args[0]}", "missing") from None
    except (ValueError, TypeError) as exc:
        raise SchemaError(field, str(exc)) from None
