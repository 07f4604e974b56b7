import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from resonances.radial import PotentialSpec  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"

# Well-plus-barrier geometries whose background phase at the resonance is
# close to a multiple of pi, so the line shape is a nearly symmetric peak.
REFERENCE_SEGMENTS = ((1.30, -15.0), (1.60, 60.0))
NARROW_SEGMENTS = ((1.32, -15.0), (1.62, 80.0))

# outcome lines for the acceptance criteria, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def reference_potential():
    return PotentialSpec(REFERENCE_SEGMENTS)


@pytest.fixture(scope="session")
def narrow_potential():
    return PotentialSpec(NARROW_SEGMENTS)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
