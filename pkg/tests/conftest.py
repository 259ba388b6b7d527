import pytest

from isochk.history import build_history

AMBIGUOUS = [[[("w", "x", 1)]], [[("w", "x", 1)], [("r", "x", 1)]]]
TANGLED = [
    [[("r", "y", 1), ("w", "x", 1)]],
    [[("w", "x", 1), ("w", "y", 1)]],
    [[("r", "x", 1), ("r", "y", 0)]],
]
WRITE_SKEW = [[[("r", "x", 0), ("w", "y", 1)]], [[("r", "y", 0), ("w", "x", 1)]]]
LOST_UPDATE = [[[("r", "x", 0), ("w", "x", 1)]], [[("r", "x", 0), ("w", "x", 2)]]]


@pytest.fixture
def ambiguous():
    return build_history(AMBIGUOUS)


@pytest.fixture
def tangled():
    return build_history(TANGLED)


@pytest.fixture
def write_skew():
    return build_history(WRITE_SKEW)


@pytest.fixture
def lost_update():
    return build_history(LOST_UPDATE)


# Acceptance criteria report one line each; repeated in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
