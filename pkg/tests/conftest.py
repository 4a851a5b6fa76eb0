import numpy as np
import pytest

from einsvd.einstein import SplitTensor
from einsvd.rng import randn

ACCEPTANCE_LINES = []


def seeded(shape, seed=0, row_order=None):
    """Seeded standard-normal SplitTensor; rows default to the first half of the modes."""
    data = randn(shape, seed)
    return SplitTensor(data, len(shape) // 2 if row_order is None else row_order)


@pytest.fixture
def report_acceptance():
    def _report(number, title, ok, detail=""):
        line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip()
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


def assert_close_up_to_sign(x, y, atol):
    x, y = np.ravel(x, order="F"), np.ravel(y, order="F")
    assert min(np.max(np.abs(x - y)), np.max(np.abs(x + y))) <= atol
