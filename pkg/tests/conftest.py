"""Shared fixtures: parsed demo programs and candidate specs.

The data files under tests/data are the inputs exercised throughout the
suite: list concatenation (append.clp), integer minimum (min.clp), and a
table of boolean connectives plus a boolean minimum (bool.clp).
"""

from pathlib import Path

import pytest

from chrgen.program import parse_program, parse_spec

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def append_program():
    return parse_program((DATA / "append.clp").read_text())


@pytest.fixture(scope="session")
def min_program():
    return parse_program((DATA / "min.clp").read_text())


@pytest.fixture(scope="session")
def bool_program():
    return parse_program((DATA / "bool.clp").read_text())


@pytest.fixture(scope="session")
def append_spec():
    return parse_spec((DATA / "append.spec").read_text(), mode="primitive")


@pytest.fixture(scope="session")
def min_spec():
    return parse_spec((DATA / "min.spec").read_text(), mode="primitive")
