"""Small helpers shared by the test modules."""

from chrgen.rules import RuleSet, format_rule


def rule_lines(rs: RuleSet) -> set[str]:
    """The formatted rules of a set, as a set of one-line strings."""
    return {format_rule(r) for r in rs.rules}


def canonical_keys(rs: RuleSet) -> set[tuple]:
    return {r.canonical_key() for r in rs.rules}
