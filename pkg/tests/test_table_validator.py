import glob
import json
import os
import re
import subprocess
import sys

import pytest

from config import REPO_ROOT
from errors import TableFormatError
from table_validator import validate, validate_table_dict

REFERENCE_TABLES = sorted(glob.glob(os.path.join(REPO_ROOT, "tables", "reference", "*", "*.json")))


def _good():
    return {
        "schema": "weight-table/1",
        "kernel": "off_diag",
        "alpha": "0.5",
        "p": 3,
        "digits": 20,
        "weights": [
            {"gamma": [1, 1], "value": "4.7e-2"},
            {"gamma": [2, 1], "value": "-4.6e-3"},
        ],
        "provenance": {"working_precision": 50},
    }


def test_reference_tables_present():
    assert len(REFERENCE_TABLES) == 12


@pytest.mark.parametrize("path", REFERENCE_TABLES, ids=os.path.basename)
def test_reference_tables_validate(path):
    assert validate(path)["ok"] is True


def test_good_table():
    assert validate_table_dict(_good()) == {"kernel": "off_diag", "alpha": "0.5", "p": 3, "digits": 20, "weights": 2}


@pytest.mark.parametrize("mutate,needle", [
    (lambda t: t.update(schema="weight-table/0"), "schema"),
    (lambda t: t.update(kernel="diag"), "unknown kernel"),
    (lambda t: t.update(alpha=0.5), "decimal string"),
    (lambda t: t.update(alpha="2"), "(0, 2)"),
    (lambda t: t.update(p=1), ""),
    (lambda t: t.update(p=True), "integer"),
    (lambda t: t.update(digits=45), "exceed"),
    (lambda t: t["weights"].pop(), "expected 2 weights"),
    (lambda t: t["weights"].reverse(), "order mismatch"),
    (lambda t: t["weights"][0].update(value=0.047), "decimal string"),
    (lambda t: t["weights"][0].update(value="abc"), "not a decimal"),
    (lambda t: t["weights"][0].update(mantissa_only="yes"), "boolean"),
])
def test_bad_tables(mutate, needle):
    t = _good()
    mutate(t)
    with pytest.raises(TableFormatError, match=re.escape(needle)):
        validate_table_dict(t)


def test_unreadable_file(tmp_path):
    p = tmp_path / "t.json"
    p.write_text("[")
    with pytest.raises(TableFormatError):
        validate(str(p))


def test_command_line_exit_code(tmp_path):
    p = tmp_path / "t.json"
    bad = _good()
    bad["p"] = 1
    p.write_text(json.dumps(bad))
    script = os.path.join(REPO_ROOT, "src", "table_validator.py")
    res = subprocess.run([sys.executable, script, str(p)], capture_output=True, text=True)
    assert res.returncode == 2
    assert json.loads(res.stdout)["ok"] is False
