"""JSON input parsing with strict schemas, and deterministic output writers.

Three input kinds are recognised by their keys:

* Jacobi parameters: ``{"a": [...], "b": [...], "tail": "free"}`` or
  ``"tail": {"envelope": {"C": 1.0, "R": 1.5}}``;
* spectral data: ``{"u": [...], "radius": 1.5, "states": [{"z": 0.5, "w": 0.75}]}``
  (``radius`` optional, default infinite);
* Verblunsky coefficients: ``{"alphas": [0.5, [0.1, -0.2], ...]}`` with
  complex entries written as ``[re, im]``.
"""
from __future__ import annotations

import csv
import json
import math
import re

import numpy as np

from .errors import SchemaError
from .forward import BoundState, Envelope, Free, JacobiParams
from .inverse import SpectralData
from .numerics import TaylorSeries
from .opuc import VerblunskySeq

__all__ = ["parse_input", "parse_text", "dumps", "write_output", "write_csv"]

_JACOBI_KEYS = {"a", "b", "tail"}
_SPECTRAL_KEYS = {"u", "radius", "states"}
_OPUC_KEYS = {"alphas"}


def _line_of(text, field):
    """Line (1-based) where the top-level key of ``field`` first appears."""
    key = re.match(r"[A-Za-z_]+", field)
    if key is None:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key.group(0)), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _real(value, field, text):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{field} must be a number", field=field, line=_line_of(text, field))
    x = float(value)
    if not math.isfinite(x):
        raise SchemaError(f"{field} must be finite", field=field, line=_line_of(text, field))
    return x


def _real_list(obj, key, text, allow_empty=True):
    value = obj.get(key)
    if not isinstance(value, list):
        raise SchemaError(f"{key} must be a list of numbers", field=key, line=_line_of(text, key))
    if not value and not allow_empty:
        raise SchemaError(f"{key} must not be empty", field=key, line=_line_of(text, key))
    return [_real(v, f"{key}[{i}]", text) for i, v in enumerate(value)]


def _check_keys(obj, allowed, text):
    extra = sorted(set(obj) - allowed)
    if extra:
        raise SchemaError(f"unknown field {extra[0]!r}", field=extra[0], line=_line_of(text, extra[0]))


def _parse_tail(value, text):
    if value is None or value == "free":
        return Free()
    if isinstance(value, dict) and set(value) == {"envelope"} and isinstance(value["envelope"], dict):
        env = value["envelope"]
        if set(env) != {"C", "R"}:
            raise SchemaError("envelope needs exactly the fields C and R", field="tail", line=_line_of(text, "tail"))
        C = _real(env["C"], "tail.envelope.C", text)
        R = _real(env["R"], "tail.envelope.R", text)
        if C < 0 or R <= 1:
            raise SchemaError("envelope needs C >= 0 and R > 1", field="tail", line=_line_of(text, "tail"))
        return Envelope(C, R)
    raise SchemaError('tail must be "free" or {"envelope": {"C": ..., "R": ...}}', field="tail", line=_line_of(text, "tail"))


def _parse_jacobi(obj, text):
    _check_keys(obj, _JACOBI_KEYS, text)
    if "a" not in obj or "b" not in obj:
        missing = "a" if "a" not in obj else "b"
        raise SchemaError(f"missing field {missing}", field=missing)
    a = _real_list(obj, "a", text)
    b = _real_list(obj, "b", text)
    for i, x in enumerate(a):
        if not x > 0:
            raise SchemaError(f"a[{i}] must be positive, got {x!r}", field=f"a[{i}]", line=_line_of(text, "a"))
    if len(a) != len(b):
        raise SchemaError(f"a and b differ in length ({len(a)} vs {len(b)})", field="b", line=_line_of(text, "b"))
    tail = _parse_tail(obj.get("tail"), text)
    try:
        return JacobiParams(a, b, tail)
    except Exception as exc:
        raise SchemaError(str(exc), field="tail", line=_line_of(text, "tail")) from exc


def _parse_spectral(obj, text):
    _check_keys(obj, _SPECTRAL_KEYS, text)
    u = _real_list(obj, "u", text, allow_empty=False)
    radius = math.inf
    if "radius" in obj:
        r = obj["radius"]
        radius = math.inf if r in ("inf", "infinity") else _real(r, "radius", text)
        if not radius > 1:
            raise SchemaError("radius must exceed 1", field="radius", line=_line_of(text, "radius"))
    states_in = obj.get("states", [])
    if not isinstance(states_in, list):
        raise SchemaError("states must be a list", field="states", line=_line_of(text, "states"))
    states = []
    for i, s in enumerate(states_in):
        field = f"states[{i}]"
        if not isinstance(s, dict) or set(s) != {"z", "w"}:
            raise SchemaError(f"{field} needs exactly the fields z and w", field=field, line=_line_of(text, "states"))
        z = _real(s["z"], f"{field}.z", text)
        w = _real(s["w"], f"{field}.w", text)
        if not 0 < abs(z) < 1:
            raise SchemaError(f"{field}.z must lie in (-1, 1) minus 0", field=f"{field}.z", line=_line_of(text, "states"))
        if not w > 0:
            raise SchemaError(f"{field}.w must be positive", field=f"{field}.w", line=_line_of(text, "states"))
        states.append(BoundState.from_weight(z, w))
    return SpectralData(TaylorSeries(u, radius), tuple(states))


def _parse_opuc(obj, text):
    _check_keys(obj, _OPUC_KEYS, text)
    raw = obj["alphas"]
    if not isinstance(raw, list):
        raise SchemaError("alphas must be a list", field="alphas", line=_line_of(text, "alphas"))
    out = []
    for i, v in enumerate(raw):
        field = f"alphas[{i}]"
        if isinstance(v, list):
            if len(v) != 2:
                raise SchemaError(f"{field} must be a number or [re, im]", field=field, line=_line_of(text, "alphas"))
            c = complex(_real(v[0], field, text), _real(v[1], field, text))
        else:
            c = complex(_real(v, field, text))
        if abs(c) >= 1:
            raise SchemaError(f"|{field}| must be below 1", field=field, line=_line_of(text, "alphas"))
        out.append(c)
    return VerblunskySeq(out)


def parse_text(text):
    """Parse a JSON document into ``JacobiParams``, ``SpectralData`` or ``VerblunskySeq``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(obj, dict):
        raise SchemaError("top level must be an object", line=1)
    keys = set(obj)
    if keys & {"a", "b"}:
        return _parse_jacobi(obj, text)
    if "u" in keys:
        return _parse_spectral(obj, text)
    if "alphas" in keys:
        return _parse_opuc(obj, text)
    raise SchemaError("cannot tell the input kind: expected a/b, u or alphas", line=1)


def parse_input(path):
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read())


def _plain(value):
    """Convert numpy scalars, arrays and complex values to JSON-ready objects."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [_plain(float(value.real)), _plain(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return value


def dumps(obj):
    """Deterministic JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_output(obj, path=None, stream=None):
    text = dumps(obj)
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    elif stream is not None:
        stream.write(text)
    return text


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
