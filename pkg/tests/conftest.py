import pytest

_LINES: dict[int, str] = {}


class Recorder:
    def __call__(self, number: int, ok: bool, detail: str, seconds: float) -> None:
        status = "PASS" if ok else "FAIL"
        _LINES[number] = f"criterion {number}: {status}  ({seconds:.1f} s)  {detail}"


@pytest.fixture(scope="session")
def acceptance():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
