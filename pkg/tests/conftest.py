from pathlib import Path

import pytest

from loosegait.scenario import parse_scenario

REPO = Path(__file__).resolve().parents[1]
SCENARIOS = REPO / "scenarios"

SMALL = """
[terrain]
size_x = 10
size_z = 4
resolution = 128
slope = 0.0
[material]
preset = mud
[run]
duration = 2.0
"""


@pytest.fixture
def small_scenario():
    def make(*overrides):
        return parse_scenario(SMALL, list(overrides))
    return make


ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        line = f"[{n}] {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
