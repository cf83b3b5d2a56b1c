import csv
import io as stdio
import json

import jsonschema
import numpy as np
import pytest

from qcond import io
from qcond.channels import random_channel
from qcond.conditional import conditional_probs
from qcond.errors import ParseError, SchemaMismatch, ValidationError
from qcond.states import random_density
from qcond.verify import TrialConfig, reproduce, run_suite


def test_channel_round_trip():
    ch = random_channel(3, 2, 2, seed=4)
    back = io.decode(io.dumps(ch))
    np.testing.assert_array_equal(back.kraus, ch.kraus)


def test_density_round_trip():
    rho = random_density(4, seed=2)
    back = io.decode_density(io.dumps(rho))
    np.testing.assert_array_equal(back.matrix, rho.matrix)


def test_table_round_trip():
    t = conditional_probs(random_channel(3, 3, 2, seed=1), random_density(3, seed=1)).table
    back = io.decode(io.dumps(t))
    np.testing.assert_array_equal(back.probs, t.probs)
    np.testing.assert_array_equal(back.basis_to, t.basis_to)
    assert back.degenerate_from == t.degenerate_from


def test_truncated_json():
    text = io.dumps(random_channel(2, seed=1))
    with pytest.raises(ParseError) as exc:
        io.loads(text[:40])
    assert exc.value.position is not None


def test_non_trace_preserving_channel_rejected():
    doc = io.encode_channel(random_channel(2, seed=1))
    doc["kraus"] = [doc["kraus"][0]]
    with pytest.raises(ValidationError) as exc:
        io.decode_channel(doc)
    assert exc.value.field == "kraus"


def test_schema_mismatch_names_field():
    doc = io.encode_density(random_density(2, seed=1))
    bad = dict(doc, dim="two")
    with pytest.raises(SchemaMismatch) as exc:
        io.decode_density(bad)
    assert exc.value.field == "dim"
    with pytest.raises(SchemaMismatch) as exc:
        io.decode_density(dict(doc, version="2.0"))
    assert exc.value.field == "version"
    with pytest.raises(SchemaMismatch) as exc:
        io.decode_channel(doc)
    assert exc.value.field == "kind"


def test_minor_version_accepted():
    doc = io.encode_density(random_density(2, seed=1))
    io.decode_density(dict(doc, version="1.7"))


def test_invalid_density_rejected():
    doc = io.encode_density(random_density(2, seed=1))
    doc["matrix"]["data"][0] = [2.0, 0.0]
    doc["matrix"]["data"][3] = [-1.0, 0.0]
    with pytest.raises(ValidationError) as exc:
        io.decode_density(doc)
    assert exc.value.field == "matrix"


def test_table_validation():
    doc = io.encode_table(conditional_probs(random_channel(2, seed=3), random_density(2, seed=3)).table)
    doc["p_r"] = [0.9, 0.1]
    with pytest.raises(ValidationError) as exc:
        io.decode_table(doc)
    assert exc.value.field == "p_r"


def test_report_and_trace_validate_against_schema():
    cfg = TrialConfig(master_seed=1, n_trials=3)
    report = run_suite(cfg)
    doc = json.loads(io.dumps(report))
    jsonschema.validate(doc, io.SCHEMAS["verification_report"])
    assert io.decode_report(doc)["passed"] is True
    c = report.checks["holevo_equality"]
    trace = io.encode_trace(reproduce(c.worst_seed, "holevo_equality", cfg, c.worst_slack))
    jsonschema.validate(json.loads(json.dumps(trace)), io.SCHEMAS["trace"])


def test_csv_uses_full_precision():
    t = conditional_probs(random_channel(3, 3, 2, seed=5), random_density(3, seed=5)).table
    rows = list(csv.reader(stdio.StringIO(io.table_to_csv(t))))
    assert rows[0][0] == "r\\q"
    values = np.array([[float(x) for x in row[1:4]] for row in rows[1:4]])
    np.testing.assert_array_equal(values, t.probs)
    assert io.fmt(0.1) == "0.10000000000000001"
