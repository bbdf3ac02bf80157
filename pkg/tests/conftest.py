from fractions import Fraction

import pytest

from mmot.core import make_instance

HALF = Fraction(1, 2)


@pytest.fixture
def square():
    """c = (x - y)^2 on {0, 1}, uniform marginals."""
    return make_instance(coords=[[0, 1], [0, 1]], builtin="pairwise_quadratic")


@pytest.fixture
def cube():
    """Pairwise quadratic on {0, 1}^3, uniform marginals."""
    return make_instance(coords=[[0, 1]] * 3, builtin="pairwise_quadratic")


@pytest.fixture
def cube_point_third():
    """Pairwise quadratic on {0, 1}^3 with the third marginal a point mass at 0."""
    return make_instance(coords=[[0, 1]] * 3, builtin="pairwise_quadratic",
                         marginals=[[HALF, HALF], [HALF, HALF], [1, 0]])


_CRITERIA: dict = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    num, title = marker.args
    ok = call.excinfo is None
    prev = _CRITERIA.get(num, (title, True))
    _CRITERIA[num] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, ok = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}")
