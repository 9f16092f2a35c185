import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("oselab", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("oselab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_subspace(rng, d, k):
    from oselab.grassmann import orthonormalize

    return orthonormalize(rng.standard_normal((d, k)))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion.

    Usage: ``with criterion(3, "detail") as c: ...``; the line reads FAIL if
    the block raises, and the detail can be updated through ``c.detail``.
    """

    class Record:
        def __init__(self, number, detail):
            self.number, self.detail = number, detail

        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            status = "PASS" if exc_type is None else "FAIL"
            line = f"criterion {self.number}: {status}: {self.detail}"
            if exc_type is not None and exc is not None:
                line += f" ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
            ACCEPTANCE_LINES.append(line)
            print(line)
            return False

    return Record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
