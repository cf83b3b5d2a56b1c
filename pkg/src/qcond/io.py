"""JSON documents for states, channels, tables and verification reports.

Every document carries ``"version": "1.<minor>"``; decoders reject other
major versions. Complex numbers are ``[re, im]`` pairs and floats are
written with Python's shortest round-trip repr, so ``decode(encode(x))``
reproduces ``x`` exactly.
"""
import csv
import io as _stdio
import json
from typing import Any, Dict, Union

import jsonschema
import numpy as np

from .channels import QuantumChannel, validate_channel
from .conditional import ConditionalTable
from .errors import ParseError, QcondError, SchemaMismatch, ValidationError
from .linalg import from_json, to_json
from .states import DensityMatrix, density_from_matrix

VERSION = "1.0"
SUPPORTED_MAJOR = 1

_COMPLEX_MATRIX = {
    "type": "object",
    "required": ["rows", "cols", "data"],
    "properties": {
        "rows": {"type": "integer", "minimum": 1},
        "cols": {"type": "integer", "minimum": 1},
        "data": {"type": "array", "items": {
            "type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}}},
    },
}

_HEADER = {
    "version": {"type": "string", "pattern": r"^\d+\.\d+$"},
    "kind": {"type": "string"},
}

_GROUPS = {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0}}}

SCHEMAS: Dict[str, dict] = {
    "density": {
        "type": "object",
        "required": ["version", "kind", "dim", "matrix"],
        "properties": {**_HEADER, "dim": {"type": "integer", "minimum": 1}, "matrix": _COMPLEX_MATRIX},
    },
    "channel": {
        "type": "object",
        "required": ["version", "kind", "dim_in", "dim_out", "kraus"],
        "properties": {**_HEADER,
                       "dim_in": {"type": "integer", "minimum": 1},
                       "dim_out": {"type": "integer", "minimum": 1},
                       "kraus": {"type": "array", "minItems": 1, "items": _COMPLEX_MATRIX}},
    },
    "conditional_table": {
        "type": "object",
        "required": ["version", "kind", "p_rq", "p_q", "p_r"],
        "properties": {**_HEADER,
                       "p_rq": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                       "p_q": {"type": "array", "items": {"type": "number"}},
                       "p_r": {"type": "array", "items": {"type": "number"}},
                       "basis_q": {"anyOf": [{"type": "null"}, _COMPLEX_MATRIX]},
                       "basis_r": {"anyOf": [{"type": "null"}, _COMPLEX_MATRIX]},
                       "degenerate_q": _GROUPS,
                       "degenerate_r": _GROUPS},
    },
    "verification_report": {
        "type": "object",
        "required": ["version", "kind", "passed", "config", "checks"],
        "properties": {**_HEADER,
                       "passed": {"type": "boolean"},
                       "config": {"type": "object", "required": ["master_seed", "n_trials", "dims"]},
                       "checks": {"type": "array", "items": {
                           "type": "object",
                           "required": ["name", "anchor", "tolerance", "trials", "failures",
                                        "worst_slack", "worst_seed"],
                           "properties": {
                               "name": {"type": "string"}, "anchor": {"type": "string"},
                               "tolerance": {"type": "number"},
                               "trials": {"type": "integer", "minimum": 0},
                               "failures": {"type": "integer", "minimum": 0},
                               "worst_slack": {"type": ["number", "null"]},
                               "worst_seed": {"type": ["integer", "null"]}}}},
                       "observed": {"type": "object"},
                       "errors": {"type": "array"}},
    },
    "trace": {
        "type": "object",
        "required": ["version", "kind", "check", "anchor", "group", "seed", "slack", "tolerance"],
        "properties": {**_HEADER,
                       "check": {"type": "string"}, "anchor": {"type": "string"},
                       "group": {"type": "string"}, "seed": {"type": "integer"},
                       "slack": {"type": ["number", "null"]}, "tolerance": {"type": "number"},
                       "matches": {"type": "boolean"}},
    },
}


def _header(kind: str) -> dict:
    return {"version": VERSION, "kind": kind}


def encode_density(rho: DensityMatrix) -> dict:
    return {**_header("density"), "dim": rho.dimension, "matrix": to_json(rho.matrix)}


def encode_channel(channel: QuantumChannel) -> dict:
    return {**_header("channel"), "dim_in": channel.dim_in, "dim_out": channel.dim_out,
            "kraus": [to_json(k) for k in channel.kraus]}


def encode_table(table: ConditionalTable) -> dict:
    return {
        **_header("conditional_table"),
        "p_rq": np.asarray(table.probs, dtype=float).tolist(),
        "p_q": np.asarray(table.p_from, dtype=float).tolist(),
        "p_r": np.asarray(table.p_to, dtype=float).tolist(),
        "basis_q": None if table.basis_from is None else to_json(table.basis_from),
        "basis_r": None if table.basis_to is None else to_json(table.basis_to),
        "degenerate_q": [list(g) for g in table.degenerate_from],
        "degenerate_r": [list(g) for g in table.degenerate_to],
    }


def encode_report(report) -> dict:
    return {**_header("verification_report"), **report.to_dict()}


def encode_trace(trace: dict) -> dict:
    return {**_header("trace"), **trace}


def encode(obj) -> dict:
    """Encode any supported object as a JSON-ready dict."""
    from .verify import VerificationReport

    if isinstance(obj, DensityMatrix):
        return encode_density(obj)
    if isinstance(obj, QuantumChannel):
        return encode_channel(obj)
    if isinstance(obj, ConditionalTable):
        return encode_table(obj)
    if isinstance(obj, VerificationReport):
        return encode_report(obj)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = None) -> str:
    doc = obj if isinstance(obj, dict) else encode(obj)
    return json.dumps(doc, indent=indent, allow_nan=False)


def loads(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                         position=exc.pos) from exc


def _field_path(error: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in error.absolute_path) or "<root>"


def check_schema(doc: Any, kind: str) -> dict:
    """Validate the header and the ``kind`` schema; raise ``SchemaMismatch`` naming the field."""
    if not isinstance(doc, dict):
        raise SchemaMismatch("document must be a JSON object", field="<root>")
    version = doc.get("version")
    if not isinstance(version, str) or "." not in version:
        raise SchemaMismatch("missing or malformed version", field="version")
    major = version.split(".")[0]
    if not major.isdigit() or int(major) != SUPPORTED_MAJOR:
        raise SchemaMismatch(f"unsupported major version {version!r}", field="version")
    if doc.get("kind") != kind:
        raise SchemaMismatch(f"expected kind {kind!r}, got {doc.get('kind')!r}", field="kind")
    validator = jsonschema.Draft7Validator(SCHEMAS[kind])
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SchemaMismatch(f"{_field_path(err)}: {err.message}", field=_field_path(err))
    return doc


def _as_doc(source: Union[str, bytes, dict]) -> dict:
    if isinstance(source, (str, bytes)):
        return loads(source)
    return source


def decode_density(source) -> DensityMatrix:
    doc = check_schema(_as_doc(source), "density")
    try:
        m = from_json(doc["matrix"])
        if m.shape != (doc["dim"], doc["dim"]):
            raise ValidationError(f"matrix shape {m.shape} does not match dim {doc['dim']}", field="matrix")
        return density_from_matrix(m)
    except ValidationError:
        raise
    except QcondError as exc:
        raise ValidationError(f"matrix: {exc}", field="matrix") from exc


def decode_channel(source) -> QuantumChannel:
    doc = check_schema(_as_doc(source), "channel")
    try:
        ops = [from_json(k) for k in doc["kraus"]]
        for i, k in enumerate(ops):
            if k.shape != (doc["dim_out"], doc["dim_in"]):
                raise ValidationError(f"Kraus operator {i} has shape {k.shape}", field=f"kraus/{i}")
        return validate_channel(ops)
    except ValidationError:
        raise
    except QcondError as exc:
        raise ValidationError(f"kraus: {exc}", field="kraus") from exc


def decode_table(source, tol: float = 1e-9) -> ConditionalTable:
    doc = check_schema(_as_doc(source), "conditional_table")
    probs = np.array(doc["p_rq"], dtype=float)
    p_q = np.array(doc["p_q"], dtype=float)
    p_r = np.array(doc["p_r"], dtype=float)
    if probs.ndim != 2 or probs.shape != (len(p_r), len(p_q)):
        raise ValidationError(f"p_rq shape {probs.shape} does not match marginals", field="p_rq")
    if np.any(probs < -tol) or np.any(probs > 1 + tol):
        raise ValidationError("entries must lie in [0, 1]", field="p_rq")
    if np.max(np.abs(probs.sum(axis=0) - 1)) > tol:
        raise ValidationError("columns of p_rq must sum to 1", field="p_rq")
    if np.max(np.abs(p_r - probs @ p_q)) > tol:
        raise ValidationError("p_r violates the law of total probability", field="p_r")
    return ConditionalTable(
        probs=probs, p_from=p_q, p_to=p_r,
        basis_from=None if doc.get("basis_q") is None else from_json(doc["basis_q"]),
        basis_to=None if doc.get("basis_r") is None else from_json(doc["basis_r"]),
        degenerate_from=tuple(tuple(g) for g in doc.get("degenerate_q", [])),
        degenerate_to=tuple(tuple(g) for g in doc.get("degenerate_r", [])),
    )


def decode_report(source) -> dict:
    """Reports are decoded to validated plain dicts; they are outputs, not inputs to computation."""
    return check_schema(_as_doc(source), "verification_report")


DECODERS = {
    "density": decode_density,
    "channel": decode_channel,
    "conditional_table": decode_table,
    "verification_report": decode_report,
}


def decode(source):
    """Decode any supported document, dispatching on its ``kind``."""
    doc = _as_doc(source)
    if not isinstance(doc, dict) or doc.get("kind") not in DECODERS:
        raise SchemaMismatch(f"unknown document kind {doc.get('kind') if isinstance(doc, dict) else None!r}",
                             field="kind")
    return DECODERS[doc["kind"]](doc)


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def rows_to_csv(header, rows) -> str:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def report_to_csv(report_doc: dict) -> str:
    header = ["name", "anchor", "tolerance", "trials", "failures", "worst_slack", "worst_seed", "passed"]
    return rows_to_csv(header, [[c[h] for h in header] for c in report_doc["checks"]])


def table_to_csv(table: ConditionalTable, row_label: str = "r", col_label: str = "q") -> str:
    header = [f"{row_label}\\{col_label}"] + [f"{col_label}={q}" for q in range(table.n_from)] + [f"p_{row_label}"]
    rows = [[str(r)] + list(table.probs[r]) + [table.p_to[r]] for r in range(table.n_to)]
    rows.append([f"p_{col_label}"] + list(table.p_from) + [""])
    return rows_to_csv(header, rows)
