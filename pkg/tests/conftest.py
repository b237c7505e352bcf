import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", deadline=None, derandomize=True, max_examples=50)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_star_polygon(rng, n, center=(0.5, 0.5), rmin=0.3, rmax=1.0):
    """Star-shaped simple polygon with ``n`` vertices in counterclockwise order."""
    ang = np.sort(rng.uniform(0.0, 2 * np.pi, n))
    # keep angular gaps away from zero so vertices stay distinct
    ang = np.linspace(0, 2 * np.pi, n, endpoint=False) + 0.3 * (ang - ang.mean()) / n
    r = rng.uniform(rmin, rmax, n)
    return np.stack([center[0] + r * np.cos(ang), center[1] + r * np.sin(ang)], 1)


class _Criterion:
    """Collects the sub-checks of one acceptance criterion."""

    def __init__(self, number, title):
        self.number, self.title = number, title
        self.failures, self.notes = [], []

    def expect(self, ok, message):
        if not ok:
            self.failures.append(message)
        return bool(ok)

    def note(self, message):
        self.notes.append(message)


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """``with criterion(n, title) as c: c.expect(...)`` prints one pass/fail line."""
    from contextlib import contextmanager

    @contextmanager
    def run(number, title):
        c = _Criterion(number, title)
        try:
            yield c
        except Exception as exc:
            c.failures.append(f"{type(exc).__name__}: {exc}")
        status = "PASS" if not c.failures else "FAIL"
        detail = "; ".join(c.failures or c.notes)
        line = f"criterion {number:>2} {status}  {title}" + (f"  [{detail}]" if detail else "")
        _ACCEPTANCE[number] = line
        print(line)
        assert not c.failures, line

    return run


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
