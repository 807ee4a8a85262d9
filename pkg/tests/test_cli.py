import json
import subprocess
import sys
from pathlib import Path

import pytest

from voxform.cli import (
    DEFAULT_CONFIG,
    RunConfig,
    cmd_sewing,
    load_config,
    main,
    parse_config_text,
)
from voxform.scalars import ExactScalar as E
from fractions import Fraction as F


def test_parse_default_config():
    cfg = parse_config_text(DEFAULT_CONFIG)
    assert cfg.cutoff == 6 and cfg.level == 12
    assert cfg.epsilon == E(F(1, 16))
    assert cfg.zeta1 == E(F(1, 4))
    assert cfg.zeta2() == E(F(1, 4))
    assert cfg.two_point == (E(2), E(1))


def test_parse_rational_and_complex_literals():
    cfg = parse_config_text("""
[sewing]
epsilon = 1/8
zeta1 = 1/2+1/4i
""")
    assert cfg.epsilon == E(F(1, 8))
    assert cfg.zeta1 == E(F(1, 2), F(1, 4))


def test_bad_config_reports_error(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[run]\nnot a line\n")
    rc = main(["sewing", "--config", str(bad)])
    assert rc == 2


def test_unknown_key_rejected():
    with pytest.raises(ValueError):
        parse_config_text("[run]\nmystery = 1\n")


def test_sewing_suite_passes(tmp_path):
    out = tmp_path / "r.json"
    rc = main(["sewing", "--out", str(out)])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["schema_version"] == 1
    assert payload["summary"]["fail"] == 0
    ids = [c["id"] for c in payload["checks"]]
    assert ids == sorted(ids)
    assert sum(1 for i in ids if i.startswith("sewing.reject[")) == 5


def test_reports_byte_identical(tmp_path):
    r1, r2 = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["sewing", "--out", str(r1)]) == 0
    assert main(["sewing", "--out", str(r2)]) == 0
    assert r1.read_bytes() == r2.read_bytes()


def test_empty_suite_selection(tmp_path):
    out = tmp_path / "e.json"
    rc = main(["coords", "--suite", "", "--out", str(out)])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["checks"] == []


def test_fault_injection_fails_suite(tmp_path):
    out = tmp_path / "f.json"
    rc = main(["coords", "--out", str(out), "--inject-fault",
               "coords-roundtrip"])
    assert rc == 1
    payload = json.loads(out.read_text())
    bad = [c for c in payload["checks"] if c["status"] == "fail"]
    assert any(c["id"] == "coords.roundtrip" for c in bad)


def test_coords_suite_passes(tmp_path):
    out = tmp_path / "c.json"
    assert main(["coords", "--out", str(out)]) == 0


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "voxform.cli", "sewing"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["summary"]["fail"] == 0
