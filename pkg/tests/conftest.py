import numpy as np
import pytest

from fastavg.operator import EllipticOperator1D, eigensolve, invariant_density

_ACCEPTANCE = []


def record_acceptance(number, name, passed, detail=""):
    _ACCEPTANCE.append((number, name, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {name}: {detail}")


@pytest.fixture(scope="session")
def unit_op():
    return EllipticOperator1D(0.0, np.pi, 1.0)


@pytest.fixture(scope="session")
def basis8(unit_op):
    return eigensolve(unit_op, 8, 32)


@pytest.fixture(scope="session")
def measure32(unit_op):
    return invariant_density(unit_op, 32)
