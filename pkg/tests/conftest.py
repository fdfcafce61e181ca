from __future__ import annotations

from pathlib import Path

import pytest

from maccache.params import SystemParams

GOLDEN = Path(__file__).parent / "golden"

# (params, demands) for the three worked examples
EXAMPLES = {
    1: (SystemParams(5, 5, 1, 2), (0, 1, 2, 3, 4)),
    2: (SystemParams(8, 8, 1, 4), tuple(range(8))),
    3: (SystemParams(9, 9, 2, 2), (0, 2, 4, 6, 8, 1, 3, 5, 7)),
}

ACCEPTANCE_LINES: list[str] = []


def golden_lines(name: str) -> list[str]:
    return (GOLDEN / name).read_text().splitlines()


@pytest.fixture(params=sorted(EXAMPLES), ids=lambda n: f"example{n}")
def example(request):
    params, demands = EXAMPLES[request.param]
    return request.param, params, demands


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
