import json
import subprocess
import sys

import pytest

from realizer.cli import main
from realizer.corpus import NESTED_CASES


def cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out.strip(), err.strip()


def test_check_prints_the_type(capsys):
    assert cli(capsys, "check", "-e", "fun x:nat. inj1{nat+unit} x") == (0, "nat -> nat+unit", "")


def test_check_json(capsys):
    code, out, _ = cli(capsys, "check", "--emit", "json", "-e", "true")
    assert code == 0 and json.loads(out) == {"type": "bool"}


def test_compile_both_variants(capsys):
    assert cli(capsys, "compile", "-e", "(fun x:nat.x) 3")[1] == "mu a0. < mu(x . a1) < x | a1 > | 3 . a0 >"
    out = cli(capsys, "compile", "--variant", "cbv", "-e", "(fun x:nat.x) 3")[1]
    assert "mut v." in out


def test_compile_json(capsys):
    code, out, _ = cli(capsys, "compile", "--emit", "json", "-e", "3")
    assert code == 0 and json.loads(out) == {"k": "nat", "n": 3}


def test_run_prints_the_trace(capsys):
    code, out, _ = cli(capsys, "run", "-e", "(fun x:nat.x) 3")
    assert code == 0
    assert out.splitlines()[-1].endswith("< 3 | alpha >")


def test_normalize_integer_pole(capsys):
    assert cli(capsys, "normalize", "--pole", "nat", "-e", "if true then 4 else 7") == (0, "4", "")


def test_normalize_nested_cases_both_variants(capsys):
    for variant in ("cbn", "cbv"):
        assert cli(capsys, "normalize", "--pole", "nat", "--variant", variant, "-e", NESTED_CASES)[1] == "1"


def test_normalize_trace_matches_run(capsys):
    _, realized, _ = cli(capsys, "normalize", "--variant", "cbv", "-e", "(fun x:nat.x) 3")
    _, machine, _ = cli(capsys, "run", "--variant", "cbv", "-e", "(fun x:nat.x) 3")
    assert realized == machine


def test_compare(capsys):
    code, out, _ = cli(capsys, "compare", "--variant", "cbv", "-e", "(fun x:nat.x) 3")
    assert code == 0
    assert out == "traces identical (3 steps)"


def test_negative_type_is_unsupported(capsys):
    code, out, err = cli(capsys, "normalize", "-e", "fun x:nat.x")
    assert code == 4 and out == ""
    assert "negative" in err


def test_nat_pole_on_bool_is_unsupported(capsys):
    assert cli(capsys, "normalize", "--pole", "nat", "-e", "true")[0] == 4


def test_parse_error_exit_code(capsys):
    code, _, err = cli(capsys, "check", "-e", "fun x nat. x")
    assert code == 1
    assert "parse error" in err


def test_type_error_reports_expected_and_found(capsys):
    code, _, err = cli(capsys, "run", "-e", "(fun x:nat. x) ()")
    assert code == 1
    assert "type error" in err and "nat" in err and "unit" in err


def test_fuel_exhaustion_exit_code(capsys):
    code, _, err = cli(capsys, "run", "--fuel", "1", "-e", "(fun x:nat.x) 3")
    assert code == 2
    assert "fuel" in err


def test_file_input(tmp_path, capsys):
    f = tmp_path / "prog.stlc"
    f.write_text("# a comment\n(fun x:nat. x)\n  3\n")
    assert cli(capsys, "normalize", "--pole", "nat", str(f)) == (0, "3", "")


def test_missing_file(tmp_path, capsys):
    assert cli(capsys, "check", str(tmp_path / "absent.stlc"))[0] == 1


def test_verify_round_trip(tmp_path, capsys):
    _, out, _ = cli(capsys, "run", "--emit", "json", "-e", "(fun f:nat->nat. f 2) (fun z:nat. z)")
    f = tmp_path / "trace.json"
    f.write_text(out)
    assert cli(capsys, "verify", str(f)) == (0, "valid (4 steps)", "")


def test_verify_rejects_a_tampered_trace(tmp_path, capsys):
    _, out, _ = cli(capsys, "run", "--emit", "json", "-e", "(fun x:nat.x) 3")
    data = json.loads(out)
    data["final"]["t"]["n"] = 4
    data["steps"][-1]["next"]["t"]["n"] = 4
    f = tmp_path / "trace.json"
    f.write_text(json.dumps(data))
    code, _, err = cli(capsys, "verify", str(f))
    assert code == 3
    assert "invalid trace" in err


def test_verify_rejects_malformed_json(tmp_path, capsys):
    f = tmp_path / "trace.json"
    f.write_text("{}")
    assert cli(capsys, "verify", str(f))[0] == 1


def test_output_is_deterministic(capsys):
    args = ("run", "--variant", "cbv", "--emit", "json", "-e", NESTED_CASES)
    assert cli(capsys, *args) == cli(capsys, *args)


def test_bad_fuel_is_an_argument_error(capsys):
    with pytest.raises(SystemExit):
        main(["run", "--fuel", "0", "-e", "3"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "realizer", "normalize", "--pole", "nat",
                           "-e", "if false then 4 else 7"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == "7\n"
