import pytest

_ACCEPTANCE = {}


class AcceptanceLog:
    """Collects one verdict per acceptance criterion for the terminal summary."""

    def check(self, number, ok, detail):
        _ACCEPTANCE[number] = ("PASS" if ok else "FAIL", detail)
        print(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    def skip(self, number, reason):
        _ACCEPTANCE[number] = ("SKIP", reason)
        pytest.skip(reason)


@pytest.fixture
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        verdict, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {detail}")
