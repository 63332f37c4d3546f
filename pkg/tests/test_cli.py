import json
import subprocess
import sys
from pathlib import Path

import pytest

from drl import cli

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_statics_example(capsys):
    code, out, _ = run(capsys, "statics", "{?true} refines {x:=1}")
    assert code == 0 and out.strip() == "FV={x} BV={}"


def test_statics_program_and_cofinite(capsys):
    _, out, _ = run(capsys, "statics", "x:=1 ++ ?true")
    assert out.strip() == "FV={} BV={x} MBV={}"
    _, out, _ = run(capsys, "statics", "--json", "[a]x>0")
    data = json.loads(out)
    assert data["fv"] == {"all_except": []} and data["schema"] == cli.SCHEMA
    _, out, _ = run(capsys, "statics", "{y:=1; a}; x:=1")
    assert "BV=ALL" in out


def test_parse_and_print(capsys):
    code, out, _ = run(capsys, "parse", "--json", "x+1")
    tree = json.loads(out)
    assert code == 0 and tree["kind"] == "term" and tree["ast"]["node"] == "Plus"
    assert len(out.strip().splitlines()) == 1
    _, out, _ = run(capsys, "print", "--desugar", "<x:=1>x>0")
    assert out.strip() == "![x:=1]!x>0"


def test_parse_error_is_usage(capsys):
    code, out, err = run(capsys, "parse", "x+")
    assert code == 2 and "parse error" in err and out == ""


def test_subst(capsys):
    code, out, _ = run(capsys, "subst", "[a]p(x)", "--rules", "a ~> x:=1",
                       "--rules", "p(.) ~> .>=y")
    assert code == 0 and out.strip() == "[x:=1]x>=y"
    code, out, _ = run(capsys, "subst", "--json", "[x:=1]p(x)", "--rules", "p(.) ~> .>=x")
    data = json.loads(out)
    assert code == 1 and not data["ok"] and "clash" in data
    code, _, err = run(capsys, "subst", "[x:=1]p(x)")
    assert code == 2 and "--rules" in err


def test_subst_program_reports_taboo(capsys):
    code, out, _ = run(capsys, "subst", "--json", "--kind", "program", "x:=c()",
                       "--rules", "c() ~> y", "--taboo", "z")
    data = json.loads(out)
    assert code == 0 and data["taboo_out"] == ["x", "z"]


def test_axioms(capsys):
    code, out, _ = run(capsys, "axioms")
    assert code == 0 and len(out.strip().splitlines()) == 50
    _, out, _ = run(capsys, "axioms", "--json", "--key", "ode")
    data = json.loads(out)
    assert data["key"] == "ode" and "refines" in data["formula"]
    code, _, err = run(capsys, "axioms", "--key", "nope")
    assert code == 2 and "unknown axiom" in err


def test_check(capsys):
    code, out, _ = run(capsys, "check", str(CORPUS / "derived" / "cup_comm.proof.json"))
    assert code == 0 and out.startswith("ok")
    code, out, _ = run(capsys, "check", "--json", str(CORPUS / "derived"))
    lines = [json.loads(l) for l in out.strip().splitlines()]
    assert code == 0 and len(lines) >= 17 and all(l["ok"] for l in lines)


def test_check_failure_and_missing(capsys, tmp_path):
    bad = tmp_path / "bad.proof.json"
    bad.write_text(json.dumps({"name": "bad", "steps": [
        {"id": "1", "rule": "prop", "formula": "p() -> q()"}]}))
    code, out, _ = run(capsys, "check", str(bad))
    assert code == 1 and "FAIL" in out
    code, _, err = run(capsys, "check", str(tmp_path / "missing.json"))
    assert code == 2 and "no such file" in err
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    code, _, _ = run(capsys, "check", str(junk))
    assert code == 2


def test_atom_budget_flag(capsys, tmp_path):
    f = " & ".join(f"x>{i}" for i in range(6))
    script = tmp_path / "wide.proof.json"
    script.write_text(json.dumps({"name": "wide", "steps": [
        {"id": "1", "rule": "prop", "formula": f"{f} -> {f}"}]}))
    assert run(capsys, "check", str(script))[0] == 0
    assert run(capsys, "check", "--atom-budget", "3", str(script))[0] == 1
    from drl import kernel
    assert kernel.MAX_ATOMS == 20


def test_decide(capsys):
    code, out, _ = run(capsys, "decide", "--file", str(CORPUS / "car.drl"))
    data = json.loads(out)
    assert code == 0 and data["verdict"] == "Valid" and "unloop" in data["axioms_used"]
    code, out, _ = run(capsys, "decide", "--file", str(CORPUS / "car_fast.drl"))
    data = json.loads(out)
    assert code == 1 and data["verdict"] == "Invalid" and "initial" in data["witness"]
    code, out, _ = run(capsys, "decide", "--file", str(CORPUS / "car_nonlinear.drl"))
    assert code == 0 and json.loads(out)["verdict"] == "Unknown"
    code, out, _ = run(capsys, "decide", "x:=1", "x:=1 ++ x:=2")
    assert code == 0 and json.loads(out)["verdict"] == "Valid"
    code, out, _ = run(capsys, "decide", "--idempotent", "n:=n+1")
    assert code == 1


def test_decide_usage(capsys, tmp_path):
    assert run(capsys, "decide")[0] == 2
    assert run(capsys, "decide", "--file", str(tmp_path / "none.drl"))[0] == 2
    bad = tmp_path / "bad.drl"
    bad.write_text("vars: x\n")
    code, _, err = run(capsys, "decide", "--file", str(bad))
    assert code == 2 and "missing section" in err


def test_fuzz_axioms(capsys):
    code, out, _ = run(capsys, "fuzz-axioms", "--json", "--seed", "1", "--samples", "2",
                       "--states", "2", "--axiom", "[:=]", "--axiom", "K")
    lines = [json.loads(l) for l in out.strip().splitlines()]
    assert code == 0 and [l["key"] for l in lines] == ["[:=]", "K"]
    assert all(l["evaluations"] == 4 for l in lines)


def test_fuzz_mutant_fails(capsys):
    code, out, _ = run(capsys, "fuzz-axioms", "--seed", "0", "--samples", "40",
                       "--states", "20", "--axiom", "ode_rev_mutant")
    assert code == 1 and out.startswith("FAIL")


def test_env_and_flag_precedence(monkeypatch):
    args = cli.build_parser().parse_args(["fuzz-axioms"])
    monkeypatch.setenv("DRL_SEED", "9")
    monkeypatch.setenv("DRL_BUDGET", "33")
    cfg = cli.load_config(args)
    assert cfg.seed == 9 and cfg.branch_budget == 33
    args = cli.build_parser().parse_args(["fuzz-axioms", "--seed", "4"])
    assert cli.load_config(args).seed == 4
    args = cli.build_parser().parse_args(["decide", "--branch-budget", "7"])
    assert cli.load_config(args).branch_budget == 7
    assert cli.load_config(args, environ={}).seed == 0


def test_bad_env_is_usage(capsys, monkeypatch):
    monkeypatch.setenv("DRL_SEED", "abc")
    code, _, err = run(capsys, "axioms")
    assert code == 2 and "DRL_SEED" in err


def test_unknown_subcommand(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys)[0] == 2


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "drl.cli", "statics", "{?true} refines {x:=1}"],
                          capture_output=True, text=True, cwd=ROOT)
    assert proc.returncode == 0 and proc.stdout.strip() == "FV={x} BV={}"
