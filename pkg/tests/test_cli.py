"""End-to-end command line runs, driven through cli.main directly."""

import pytest

from chrgen.cli import main

from conftest import DATA


def test_generate_min_text(capsys):
    rc = main(["generate", str(DATA / "min.clp"), str(DATA / "min.spec"),
               "--mode", "primitive"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "min(X,Y,Z) ==> Z#=<X, Z#=<Y." in out


def test_generate_machine_format(tmp_path, capsys):
    out_file = tmp_path / "rules.json"
    rc = main(["generate", str(DATA / "min.clp"), str(DATA / "min.spec"),
               "--mode", "primitive", "--format", "machine",
               "--out", str(out_file)])
    assert rc == 0
    import json

    payload = json.loads(out_file.read_text())
    assert payload["rules"]
    assert "stats" in payload


def test_transform_command(tmp_path, capsys):
    rules = tmp_path / "in.rules"
    rules.write_text("append(X,Y,Z), X=[] ==> Y=Z.\n")
    rc = main(["transform", str(rules), str(DATA / "append.clp")])
    captured = capsys.readouterr()
    assert rc == 0
    assert "<=>" in captured.out
    assert "rejected" in captured.err


def test_emit_command(tmp_path, capsys):
    rules = tmp_path / "in.rules"
    rules.write_text("and(X,Y,Z), Z=1 <=> X=1, Y=1, Z=1.\n")
    rc = main(["emit", str(rules), "--no-header"])
    out = capsys.readouterr().out
    assert rc == 0
    assert out == "and(X,Y,1) <=> X=1, Y=1.\n"


def test_validate_command(tmp_path, capsys):
    rules = tmp_path / "in.rules"
    rules.write_text("and(X,Y,Z), Z=1 ==> X=1, Y=1.\n")
    rc = main(["validate", str(rules), "--program", str(DATA / "bool.clp")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "violations: 0" in out


def test_validate_flags_bad_rule(tmp_path, capsys):
    rules = tmp_path / "in.rules"
    rules.write_text("and(X,Y,Z), Z=0 ==> X=0.\n")
    rc = main(["validate", str(rules), "--program", str(DATA / "bool.clp")])
    out = capsys.readouterr().out
    assert rc == 1
    assert "VIOLATION" in out


def test_validate_runs_goals(tmp_path, capsys):
    rules = tmp_path / "in.rules"
    rules.write_text(
        "min(X,Y,Z), X#=<Y <=> Z=X, X#=<Y.\n"
        "min(X,Y,Z), Y#=<X <=> Z=Y, Y#=<X.\n"
    )
    goals = tmp_path / "goals.txt"
    goals.write_text("min(0,1,Z)\n")
    rc = main(["validate", str(rules), "--program", str(DATA / "bool.clp"),
               "--goals", str(goals)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "1 consistent final store" in out
    assert "Z=0" in out


def test_oracle_command(capsys):
    rc = main(["oracle", str(DATA / "bool.clp")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "and(1,1,1)" in out
    assert "min(0,1,0)" in out


def test_input_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.clp"
    bad.write_text("p(X :- q.")
    rc = main(["generate", str(bad), str(DATA / "min.spec")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_missing_file_exit_code(capsys):
    rc = main(["emit", "/nonexistent/rules.txt"])
    assert rc == 1


def test_no_tabling_reports_depth_exceeded(capsys):
    rc = main(["generate", str(DATA / "append.clp"), str(DATA / "append.spec"),
               "--mode", "primitive", "--no-tabling", "--no-simplify"])
    captured = capsys.readouterr()
    assert rc == 0
    assert "depth_exceeded" in captured.err
