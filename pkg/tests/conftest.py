import contextlib

import pytest

_ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    """Context manager factory: ``with criterion(k, text): ...`` records PASS/FAIL for criterion k."""

    @contextlib.contextmanager
    def record(k: int, text: str):
        _ACCEPTANCE[k] = (text, False)
        yield
        _ACCEPTANCE[k] = (text, True)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        text, ok = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {text}")
