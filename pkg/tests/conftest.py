import contextlib

import pytest

_criteria: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def criterion():
    """Context manager that records one PASS/FAIL line per acceptance criterion."""

    @contextlib.contextmanager
    def record(label: str):
        detail = {"text": ""}
        try:
            yield detail
        except BaseException:
            _criteria.append((label, False, detail["text"]))
            raise
        _criteria.append((label, True, detail["text"]))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, text in _criteria:
        line = f"[{'PASS' if ok else 'FAIL'}] {label}"
        terminalreporter.write_line(f"{line}  ({text})" if text else line)
