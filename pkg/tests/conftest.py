import pytest

from dsreadout.model import ModelParams

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def fig2():
    """omega21 = 4, J = J_D = 1/2 in units of gamma, Delta = 0."""
    return ModelParams(omega21=4.0, j=0.5, jd=0.5, gamma=1.0)


@pytest.fixture
def deep():
    return ModelParams(omega21=10.0, j=0.2, jd=0.2, gamma=1.0)


@pytest.fixture
def record():
    def _record(criterion: str, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
