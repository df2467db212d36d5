import pytest

from oxdiode import preset
from oxdiode.solver.core import DeviceSolver
from oxdiode.solver.physics import PhysicsFlags

TE_ONLY = PhysicsFlags(barrier_lowering=False, schottky_tunneling=False, srh=False, tat=False,
                       interface_trap_density=0.0)


@pytest.fixture(scope="session")
def schottky():
    return preset("schottky-fig1")


@pytest.fixture(scope="session")
def heterojunction():
    return preset("heterojunction-fig2")


@pytest.fixture(scope="session")
def schottky_solver(schottky):
    return DeviceSolver(schottky, 300.0)


@pytest.fixture(scope="session")
def hj_solver(heterojunction):
    return DeviceSolver(heterojunction, 300.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
