"""Market files: a small JSON document describing one market.

    {
      "schema_version": 1,
      "label": "optional free text",
      "n": 3,
      "beta": [10, 10, 15],
      "cost": [0, 0, 0],
      "d_matrix": [[-1, 0, -0.5], [0, -1, -0.5], [-0.5, -0.5, -1]]
    }

Exactly one of ``d_matrix`` / ``b_matrix`` must be present. Floats are
written with ``repr`` precision, so parse/serialize round-trips exactly.
"""

import json
from pathlib import Path

import numpy as np

from .errors import EigenbundleError, ParseError
from .market import MarketSpec

SCHEMA_VERSION = 1
_KNOWN = {"schema_version", "label", "n", "beta", "cost", "d_matrix", "b_matrix"}


def _vector(doc, key, n):
    if key not in doc:
        raise ParseError("missing required field", field=key)
    val = doc[key]
    if not isinstance(val, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val):
        raise ParseError("must be a list of numbers", field=key)
    if len(val) != n:
        raise ParseError(f"expected {n} entries, got {len(val)}", field=key)
    return np.array(val, dtype=float)


def _matrix(doc, key, n):
    val = doc[key]
    if not isinstance(val, list) or len(val) != n:
        raise ParseError(f"must be a list of {n} rows", field=key)
    for i, row in enumerate(val):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"row {i + 1} must have {n} entries", field=key)
        for j, x in enumerate(row):
            if not isinstance(x, (int, float)) or isinstance(x, bool):
                raise ParseError(f"entry ({i + 1},{j + 1}) is not a number", field=key)
    return np.array(val, dtype=float)


def spec_from_dict(doc: dict) -> MarketSpec:
    if not isinstance(doc, dict):
        raise ParseError("market file must contain a JSON object")
    unknown = sorted(set(doc) - _KNOWN)
    if unknown:
        raise ParseError(f"unknown field(s) {unknown}")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})", field="schema_version")
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError("must be a positive integer", field="n")
    has_d, has_b = "d_matrix" in doc, "b_matrix" in doc
    if has_d == has_b:
        raise ParseError("exactly one of d_matrix / b_matrix must be given")
    key = "d_matrix" if has_d else "b_matrix"
    beta = _vector(doc, "beta", n)
    cost = _vector(doc, "cost", n)
    mat = _matrix(doc, key, n)
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise ParseError("must be a string", field="label")
    try:
        return MarketSpec(beta=beta, cost=cost, label=label, **{key: mat})
    except EigenbundleError as exc:
        field = key if "matrix" in str(exc) else None
        raise ParseError(str(exc), field=field) from exc


def spec_to_dict(spec: MarketSpec) -> dict:
    doc = {"schema_version": SCHEMA_VERSION}
    if spec.label:
        doc["label"] = spec.label
    doc["n"] = spec.n
    doc["beta"] = spec.beta.tolist()
    doc["cost"] = spec.cost.tolist()
    if spec.d_matrix is not None:
        doc["d_matrix"] = spec.d_matrix.tolist()
    else:
        doc["b_matrix"] = spec.b_matrix.tolist()
    return doc


def parse_market(text: str) -> MarketSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return spec_from_dict(doc)


def dumps_market(spec: MarketSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2) + "\n"


def load_market(path) -> MarketSpec:
    return parse_market(Path(path).read_text())


def save_market(spec: MarketSpec, path) -> None:
    Path(path).write_text(dumps_market(spec))


def load_taxes(path, n: int) -> np.ndarray:
    """Read a tax vector: either a bare JSON list or ``{"tau": [...]}``."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if isinstance(doc, dict):
        return _vector(doc, "tau", n)
    return _vector({"tau": doc}, "tau", n)
