import numpy as np
import pytest

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def criterion():
    """Record the verdict line for one acceptance criterion."""

    def record(number: int, title: str, result):
        mark = "PASS" if result.passed else "FAIL"
        line = f"criterion {number} [{mark}] {title}: {result.detail} ({result.seconds:.1f}s)"
        _CRITERIA[number] = line
        print(line)
        return result

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
