import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from abelia.cli import load_config, read_config_file, run
from abelia.errors import InvalidParams
from abelia.output import csv_text, jsonable


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_bounds_delta_json():
    code, out, _ = call("bounds", "delta", "--ell", "3", "--p", "2", "--r", "3")
    assert code == 0
    data = json.loads(out)
    assert data["delta"] == "1/468"
    assert data["alternatives"][0]["delta"] == "1/3"


def test_bounds_table_csv():
    code, out, _ = call("bounds", "table", "--ell-max", "7", "--out", "csv")
    assert code == 0
    rows = rows_of(out)
    assert [r["ell"] for r in rows] == [str(n) for n in range(2, 8)]
    assert rows[1]["delta_final"] == "1/468" and rows[1]["r0"] == "7"


def test_crossover_and_profile():
    assert json.loads(call("bounds", "crossover", "--ell", "2", "--p", "3")[1])["r0"] == 4
    code, out, _ = call("bounds", "profile", "--ell", "3", "--p", "2", "--r", "3", "--eta", "1")
    assert code == 0 and json.loads(out)["delta"] == "1/108"


def test_torsion_field_csv_with_negative_discs():
    code, out, _ = call("torsion", "field", "--discs", "-23,5", "--ell", "3", "--out", "csv")
    assert code == 0
    (row,) = rows_of(out)
    assert row["total"] == "3" and row["disc_L"] == str(23 * 5 * 115)


def test_torsion_scan_prints_caption():
    code, out, _ = call("torsion", "scan", "--cond-max", "40", "--ell", "3")
    assert code == 0
    data = json.loads(out)
    assert "caption" in json.dumps(data)


def test_classgroup_range():
    code, out, _ = call("classgroup", "--range", "-30", "-20", "--ell", "3", "--out", "csv")
    assert code == 0
    assert [r["D"] for r in rows_of(out)] == ["-24", "-23", "-20"]


def test_field_commands():
    assert call("field", "info", "--ext", "f=63;H=8,55;p=3;r=2")[0] == 0
    code, out, _ = call("field", "disc-check", "--discs", "-3,5,-4")
    assert code == 0 and '"passed": true' in out
    assert call("field", "enumerate", "--f", "15", "--p", "2", "--r", "2")[0] == 0
    assert call("field", "frobenius", "--discs", "-3,5", "--q", "7")[0] == 0
    code, out, _ = call("field", "subfields", "--f", "63", "--gens", "8,55", "--p", "3", "--r", "2", "--out", "csv")
    assert code == 0 and len(rows_of(out)) >= 4


def test_primes_commands():
    code, out, _ = call("primes", "pi", "--x", "100", "--q", "4", "--a", "1")
    assert code == 0 and "11" in out
    code, out, _ = call("primes", "goodbad", "--discs", "-3,5", "--theta", "1/2", "--c", "1/20", "--out", "csv")
    assert code == 0
    assert [r["verdict"] for r in rows_of(out)] == ["BAD", "BAD", "GOOD"]
    code, out, _ = call("primes", "pigeonhole", "--discs", "-3,5,-4", "--x", "5000")
    assert code == 0 and '"passed": true' in out
    assert call("primes", "bt-check", "--x", "1000", "--q", "7", "--a", "3")[0] == 0
    assert call("primes", "density", "--q-max", "5", "--s-list", "2,3")[0] == 0


def test_algebra_commands():
    code, out, _ = call("algebra", "augmentation", "--ell", "3", "--p", "2")
    assert code == 0
    code, out, _ = call("algebra", "verify", "--ell", "3", "--p", "2", "--max-dim", "2")
    assert code == 0 and json.loads(out)["failures"] == []


@pytest.mark.parametrize(
    "argv,code",
    [
        ((), 1),
        (("bounds",), 1),
        (("bounds", "delta", "--ell", "3"), 1),
        (("bounds", "delta", "--ell", "4", "--p", "2", "--r", "2"), 1),
        (("torsion", "field", "--discs", "-3,5", "--ell", "2"), 1),
        (("primes", "pi", "--x", "100", "--q", "4", "--a", "2"), 1),
        (("--sieve-limit", "1000", "primes", "pi", "--x", "5000"), 3),
        (("algebra", "verify", "--ell", "3", "--p", "2", "--max-dim", "9"), 3),
        (("nonsense",), 1),
    ],
)
def test_exit_codes(argv, code):
    assert call(*argv)[0] == code


def test_structured_errors():
    code, _, err = call("bounds", "delta", "--ell", "4", "--p", "2", "--r", "2")
    rec = json.loads(err)
    assert rec["error"] == "InvalidParams" and rec["exit_code"] == 1


def test_corrupted_cache_exit_code(tmp_path):
    cache = tmp_path / "cache.jsonl"
    cache.write_text("{broken\n")
    code, _, err = call("--cache", str(cache), "torsion", "field", "--discs", "-23,5", "--ell", "3")
    assert code == 3 and json.loads(err)["error"] == "CacheError"


def test_cache_written_by_cli(tmp_path):
    cache = tmp_path / "cache.jsonl"
    assert call("--cache", str(cache), "torsion", "field", "--discs", "-23,5", "--ell", "3")[0] == 0
    assert len(cache.read_text().splitlines()) == 3


def test_config_precedence(tmp_path):
    cfg = tmp_path / "abelia.conf"
    cfg.write_text("# comment\nsieve_limit = 5000\noutput_format = csv\nepsilon_delta = 1/10\n")
    assert read_config_file(cfg)["sieve_limit"] == 5000
    assert load_config(cfg, environ={}).output_format == "csv"
    env = {"ABELIA_SIEVE_LIMIT": "7000"}
    assert load_config(cfg, environ=env).sieve_limit == 7000
    assert load_config(cfg, {"sieve_limit": 9000}, environ=env).sieve_limit == 9000
    assert load_config(cfg, environ={}).epsilon_delta == Fraction(1, 10)
    assert load_config(environ={"ABELIA_CONFIG": str(cfg)}).sieve_limit == 5000
    bad = tmp_path / "bad.conf"
    bad.write_text("unknown_key = 3\n")
    with pytest.raises(InvalidParams):
        read_config_file(bad)
    with pytest.raises(InvalidParams):
        load_config(environ={"ABELIA_PARALLELISM": "0"})


def test_config_file_drives_output_format(tmp_path):
    cfg = tmp_path / "abelia.conf"
    cfg.write_text("output_format = csv\n")
    code, out, _ = call("--config", str(cfg), "bounds", "delta", "--ell", "3", "--p", "2", "--r", "2")
    assert code == 0 and out.startswith("ell,")


def test_csv_output_is_deterministic():
    argv = ("torsion", "scan", "--cond-max", "80", "--ell", "3", "--out", "csv")
    assert call(*argv)[1] == call(*argv)[1]


def test_output_helpers():
    assert jsonable({"a": Fraction(1, 3), "b": Fraction(4), "c": (1, 2)}) == {"a": "1/3", "b": 4, "c": [1, 2]}
    text = csv_text([{"x": 0.1 + 0.2, "y": True, "z": None}], ["x", "y", "z"])
    assert text == "x,y,z\n0.3,true,\n"


def test_selftest_passes():
    code, out, _ = call("selftest")
    assert code == 0
    assert all(s["passed"] for s in json.loads(out))


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "abelia", "bounds", "delta", "--ell", "5", "--p", "2", "--r", "2"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["delta"] == "1/1620"
