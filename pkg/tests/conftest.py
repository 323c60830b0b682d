import numpy as np
import pytest

from fracdir.geometry import Ball, HalfSpace


@pytest.fixture
def ball():
    return Ball((0.0,), 1.0)


@pytest.fixture
def half_line():
    return HalfSpace(1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion and fail on asserted misses."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(number: int, title: str, checks, detail: str = ""):
        checks = list(checks)
        bad = [c.name for c in checks if c.asserted and not c.passed]
        asserted = sum(c.asserted for c in checks)
        status = "FAIL" if bad or not asserted else "PASS"
        line = f"criterion {number:>2}: {status}  {title}  [{asserted} asserted checks{detail}]"
        if bad:
            line += f"  failing: {bad}"
        lines.append((number, line))
        print(line)
        assert asserted, "no asserted checks"
        assert not bad, line
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
