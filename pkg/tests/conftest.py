import pytest

from fowler.fem_space import FemSpace
from fowler.mesh import build_uniform_mesh

#: lines recorded by the acceptance suite, echoed at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def space_factory():
    def make(N=16, r=2, L=1.0):
        return FemSpace(build_uniform_mesh(L, N), r)
    return make
