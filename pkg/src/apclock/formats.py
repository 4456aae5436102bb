"""JSON and CSV interchange.

Every JSON document is an object with ``"schema": "apclock-1"`` and a
``"kind"`` of ``spectrum``, ``state``, ``apfunction``, ``operator``,
``report`` or ``scenario``. Operator entries are ``[re, im]`` pairs in
row-major rows; state amplitudes and APFunction terms carry separate ``re``
and ``im`` fields. :data:`SCHEMAS` holds the JSON Schema for each kind.

CSV files have a header row. Density traces use columns ``t,p``;
autocorrelation traces use ``tau,re,im,abs``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .apfun import APFunction
from .canonical import StateVector
from .spectrum import Spectrum, spectrum_from_dict, spectrum_to_dict

SCHEMA_VERSION = "apclock-1"

_complex = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_real_or_null = {"type": ["number", "null"]}
_module = {
    "type": "object",
    "required": ["basis", "denominator", "hbar", "mode"],
    "properties": {
        "basis": {"type": "array", "items": {"type": "number"}},
        "denominator": {"type": "integer", "minimum": 1},
        "hbar": {"type": "number", "exclusiveMinimum": 0},
        "mode": {"enum": ["exact", "float"]},
        "eps_freq": {"type": "number"},
    },
}
_spectrum_body = {
    "type": "object",
    "required": ["levels", "mode", "hbar"],
    "properties": {
        "hbar": {"type": "number", "exclusiveMinimum": 0},
        "mode": {"enum": ["exact", "float"]},
        "levels": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["energy"],
                "properties": {
                    "energy": {"type": ["number", "string", "array"]},
                    "degeneracy": {"type": "integer", "minimum": 1},
                },
            },
        },
        "basis": {"type": ["array", "null"], "items": {"type": "number"}},
        "eps_freq": {"type": "number"},
        "label": {"type": "string"},
    },
}


def _envelope(kind: str, body: dict) -> dict:
    props = {"schema": {"const": SCHEMA_VERSION}, "kind": {"const": kind}}
    props.update(body.get("properties", {}))
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "required": ["schema", "kind"] + body.get("required", []),
        "properties": props,
    }


_metric = {
    "type": "object",
    "required": ["value", "tolerance", "passed", "provenance"],
    "properties": {
        "value": _real_or_null,
        "tolerance": _real_or_null,
        "passed": {"type": "boolean"},
        "provenance": {"type": "string"},
        "comparison": {"type": "string"},
    },
}

SCHEMAS: dict[str, dict] = {
    "spectrum": _envelope("spectrum", _spectrum_body),
    "state": _envelope("state", {
        "required": ["spectrum", "amplitudes"],
        "properties": {
            "spectrum": _spectrum_body,
            "amplitudes": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["level", "re", "im"],
                    "properties": {
                        "level": {"type": "integer", "minimum": 0},
                        "d": {"type": "integer", "minimum": 0},
                        "re": {"type": "number"},
                        "im": {"type": "number"},
                    },
                },
            },
        },
    }),
    "apfunction": _envelope("apfunction", {
        "required": ["module", "terms"],
        "properties": {
            "module": _module,
            "terms": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["freq", "re", "im"],
                    "properties": {
                        "freq": {
                            "type": "object",
                            "required": ["key", "value"],
                            "properties": {"key": {"type": "array", "items": {"type": "integer"}},
                                           "value": {"type": "number"}},
                        },
                        "re": {"type": "number"},
                        "im": {"type": "number"},
                    },
                },
            },
        },
    }),
    "operator": _envelope("operator", {
        "required": ["dim", "entries"],
        "properties": {
            "dim": {"type": "integer", "minimum": 1},
            "entries": {"type": "array", "items": {"type": "array", "items": _complex}},
        },
    }),
    "report": _envelope("report", {
        "required": ["purity", "entropy", "entropy_error", "entropy_backend", "information",
                     "energy_entropy", "eur_slack"],
        "properties": {
            "purity": {"type": "number", "minimum": 0},
            "entropy": {"type": "number"},
            "entropy_error": {"type": "number", "minimum": 0},
            "entropy_backend": {"enum": ["time-average", "torus", "exact-periodic", "factorized"]},
            "information": {"type": "number"},
            "energy_entropy": {"type": "number"},
            "eur_slack": {"type": "number"},
            "exact_ur_residual": _real_or_null,
        },
    }),
    "scenario": _envelope("scenario", {
        "required": ["name", "params", "metrics", "artifacts", "passed"],
        "properties": {
            "name": {"type": "string"},
            "params": {"type": "object"},
            "metrics": {"type": "object", "additionalProperties": _metric},
            "artifacts": {"type": "array", "items": {"type": "string"}},
            "passed": {"type": "boolean"},
        },
    }),
}


def _finite(x):
    """JSON has no NaN or infinity; map them to null."""
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _finite(obj.item())
    return _finite(obj)


def envelope(kind: str, body: Mapping) -> dict:
    return {"schema": SCHEMA_VERSION, "kind": kind, **_clean(dict(body))}


def complex_pairs(values) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex).ravel()]


def spectrum_document(s: Spectrum) -> dict:
    return envelope("spectrum", spectrum_to_dict(s))


def state_document(psi: StateVector) -> dict:
    """Nonzero amplitudes as ``{"level", "d", "re", "im"}`` records."""
    s = psi.spectrum
    amps = [{"level": int(j), "d": int(d), "re": float(c.real), "im": float(c.imag)}
            for j, d, c in zip(s.level_of, s.deg_index, psi.amplitudes) if c != 0]
    return envelope("state", {"spectrum": spectrum_to_dict(s), "amplitudes": amps})


def apfunction_document(f: APFunction) -> dict:
    return envelope("apfunction", f.to_dict())


def operator_document(a) -> dict:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("operator must be a square matrix")
    return envelope("operator", {"dim": a.shape[0], "entries": [complex_pairs(row) for row in a]})


def report_document(report) -> dict:
    return envelope("report", report.to_dict())


def _check_kind(doc: Mapping, kind: str):
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema {doc.get('schema')!r}; expected {SCHEMA_VERSION}")
    if doc.get("kind") != kind:
        raise ValueError(f"expected a {kind} document, got {doc.get('kind')!r}")


def spectrum_from_document(doc: Mapping) -> Spectrum:
    _check_kind(doc, "spectrum")
    return spectrum_from_dict(doc)


def state_from_document(doc: Mapping) -> StateVector:
    _check_kind(doc, "state")
    s = spectrum_from_dict(doc["spectrum"])
    amps = np.zeros(s.dim, dtype=complex)
    for a in doc["amplitudes"]:
        amps[s.index(int(a["level"]), int(a.get("d", 0)))] += complex(a["re"], a["im"])
    return StateVector(s, amps)


def apfunction_from_document(doc: Mapping) -> APFunction:
    _check_kind(doc, "apfunction")
    return APFunction.from_dict(doc)


def operator_from_document(doc: Mapping) -> np.ndarray:
    _check_kind(doc, "operator")
    a = np.array([[complex(re, im) for re, im in row] for row in doc["entries"]], dtype=complex)
    if a.shape != (doc["dim"], doc["dim"]):
        raise ValueError(f"operator entries have shape {a.shape}, dim is {doc['dim']}")
    return a


def write_json(doc: Mapping, path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")
    return path


def read_json(path) -> dict:
    with Path(path).open(encoding="utf-8") as fh:
        return json.load(fh)


def write_csv(path, header: Sequence[str], columns: Sequence) -> Path:
    """Write equal-length columns with a header row; floats in ``repr`` precision."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    if len(cols) != len(header) or len({c.size for c in cols}) > 1:
        raise ValueError("one column of equal length per header entry")
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {h: data[:, i] for i, h in enumerate(header)}


def write_density_csv(path, t, p) -> Path:
    return write_csv(path, ["t", "p"], [t, p])


def write_autocorrelation_csv(path, tau, a) -> Path:
    a = np.asarray(a, dtype=complex)
    return write_csv(path, ["tau", "re", "im", "abs"], [tau, a.real, a.imag, np.abs(a)])
