"""CHR source emission: equality inlining, guard extraction, and the
printed rule forms."""

import pytest

from chrgen.emit import emit, encode_rule, format_chr_rule
from chrgen.rules import parse_rules


def _emit_lines(text, **kwargs):
    rs = parse_rules(text)
    result = emit(rs, header=False, **kwargs)
    return result.text.strip().splitlines()


# ---------------------------------------------------------------------------
# Published encodings  [PAPER]
# ---------------------------------------------------------------------------


def test_and_rule_byte_exact():
    lines = _emit_lines("and(X,Y,Z), Z=1 <=> X=1, Y=1, Z=1.")
    assert lines == ["and(X,Y,1) <=> X=1, Y=1."]


def test_min_rule_byte_exact():
    lines = _emit_lines("min(X,Y,Z), X#=<Y <=> Z=X, X#=<Y.")
    assert lines == ["min(X,Y,Z) <=> X=<Y | Z=X."]


# ---------------------------------------------------------------------------
# Inlining and guards
# ---------------------------------------------------------------------------


def test_lhs_equality_becomes_substitution():
    lines = _emit_lines("p(X), X=a ==> q(X).")
    assert lines == ["p(a) ==> q(a)."]


def test_variable_variable_equality_merges():
    lines = _emit_lines("p(X,Y), X=Y ==> q(X).")
    (line,) = lines
    head = line.split(" ==>")[0]
    assert head.count("(") == 1  # single head atom remains
    args = head[head.index("(") + 1 : head.index(")")].split(",")
    assert args[0] == args[1]


def test_order_constraint_becomes_guard():
    lines = _emit_lines("p(X,Y), X#<Y ==> q(X).")
    assert lines == ["p(X,Y) ==> X<Y | q(X)."]


def test_disequality_guard_symbol():
    lines = _emit_lines("p(X,Y), X\\=Y ==> q(X).")
    assert lines == ["p(X,Y) ==> X\\==Y | q(X)."]


def test_failure_rule_body_false():
    lines = _emit_lines("p(X), X=a ==> false.")
    assert lines == ["p(a) ==> false."]


def test_splitting_rule_alternatives():
    lines = _emit_lines("p(X,Y) ==> X=a ; Y=a.")
    assert lines == ["p(X,Y) ==> X=a ; Y=a."]


def test_rhs_equalities_printed_as_calls():
    lines = _emit_lines("p(X,Y) ==> X=Y.")
    assert lines == ["p(X,Y) ==> X=Y."]


def test_builtin_restriction():
    rs = parse_rules("p(X,Y), X#=<Y ==> q(X).")
    result = emit(rs, builtins=frozenset({"eq", "neq"}), header=False)
    # the order guard is not available: the rule is dropped with a note
    assert result.chr_rules == []
    assert any("cannot encode" in note for note in result.dropped)


def test_header_contains_digest():
    rs = parse_rules("p(X) ==> q(X).")
    text = emit(rs).text
    first = text.splitlines()[0]
    assert first.startswith("%") and "ruleset" in first


def test_unsatisfiable_lhs_dropped():
    rs = parse_rules("p(X), X=a, X=b ==> q(X).")
    result = emit(rs, header=False)
    assert result.chr_rules == []
    assert result.dropped


def test_encode_rule_structure():
    rs = parse_rules("min(X,Y,Z), X#=<Y <=> Z=X, X#=<Y.")
    encoded = encode_rule(rs.rules[0])
    assert encoded.kind == "simplification"
    assert not encoded.keeps_heads
    assert len(encoded.heads) == 1
    assert len(encoded.guard) == 1
    assert format_chr_rule(encoded) == "min(X,Y,Z) <=> X=<Y | Z=X."
