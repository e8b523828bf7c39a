import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_pair(rng, rmin=0.3, rmax=3.0):
    """Two points at a random separation in [rmin, rmax] and random orientation."""
    r = rng.normal(size=3)
    d = rng.normal(size=3)
    d *= rng.uniform(rmin, rmax) / np.linalg.norm(d)
    return r, r + d


ACCEPTANCE_LINES = []


def record(criterion: int, title: str, ok: bool, detail: str) -> None:
    """Store one acceptance verdict; all verdicts are printed at the end of the session."""
    ACCEPTANCE_LINES.append(f"criterion {criterion} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
