import pytest

from dampedq.core import make_params

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ref_params():
    return make_params(1.0, 0.6)


@pytest.fixture
def acceptance_log():
    """Collects one line per acceptance criterion; echoed in the terminal summary."""

    def log(line: str) -> None:
        print(line)
        _ACCEPTANCE_LINES.append(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
