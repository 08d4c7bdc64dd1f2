import pytest

CRITERIA: dict[int, tuple[bool | None, str]] = {}
STATUS = {True: "PASS", False: "FAIL", None: "SKIP"}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion; the summary prints one line each."""

    def record(number: int, ok: bool | None, detail: str) -> bool | None:
        CRITERIA[number] = (ok, detail)
        print(f"criterion {number}: {STATUS[ok]}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {STATUS[ok]}  {detail}")
