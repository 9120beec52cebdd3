from collections import defaultdict

import pytest

_CRITERIA: dict[int, list[tuple[str, bool, str]]] = defaultdict(list)


class CriterionRecorder:
    def check(self, number: int, label: str, passed: bool, detail: str = "") -> None:
        _CRITERIA[number].append((label, bool(passed), detail))
        assert passed, f"criterion {number} [{label}] failed: {detail}"


@pytest.fixture(scope="session")
def criterion():
    return CriterionRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        parts = _CRITERIA[number]
        ok = all(p for _, p, _ in parts)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}")
        for label, passed, detail in parts:
            terminalreporter.write_line(f"    {'pass' if passed else 'FAIL'}  {label}: {detail}")
