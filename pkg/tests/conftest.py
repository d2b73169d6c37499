import pytest

_ACCEPTANCE: dict = {}


class AcceptanceLog:
    """Collects one verdict line per acceptance criterion plus optional notes."""

    def record(self, number: int, title: str, passed: bool, detail: str, notes=()):
        verdict = "PASS" if passed else "FAIL"
        line = f"{verdict} criterion {number}: {title} -- {detail}"
        _ACCEPTANCE[number] = (line, list(notes))
        print(line)
        for note in notes:
            print(f"    note: {note}")
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        line, notes = _ACCEPTANCE[number]
        terminalreporter.write_line(line)
        for note in notes:
            terminalreporter.write_line(f"    note: {note}")
