from __future__ import annotations

import functools

import pytest

from tollforge.basis import monomial
from tollforge.design import design_by_recursion, design_full, design_simplified


@functools.lru_cache(maxsize=None)
def cached_design(kind: str, d: int, n: int):
    fn = {"full": design_full, "simplified": design_simplified, "recursion": design_by_recursion}[kind]
    return fn(monomial(d, n))


@pytest.fixture
def designs():
    return cached_design


_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
