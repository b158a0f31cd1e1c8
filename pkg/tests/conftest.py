import pytest

from bnec.design import DesignConfig, design_code
from bnec.fixtures import FIXTURES, load_fixture, repetition_code


@pytest.fixture(scope="session")
def rep():
    return repetition_code(7)


@pytest.fixture(scope="session")
def nets():
    return {name: load_fixture(name) for name in FIXTURES}


@pytest.fixture(scope="session")
def designed(nets):
    """One code per fixture at the automatic field size."""
    return {name: design_code(g, 1, DesignConfig(seed=11)) for name, g in nets.items()}


@pytest.fixture(scope="session")
def small_codes(nets):
    """Codes over small fields, for exhaustive oracles."""
    return {
        "three_path": design_code(nets["three_path"], 1, DesignConfig(q=11, seed=2)),
        "butterfly": design_code(nets["butterfly"], 1, DesignConfig(q=11, seed=2)),
        "delta3": design_code(nets["delta3"], 1, DesignConfig(q=7, seed=2)),
    }


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record and print one pass/fail line for an acceptance criterion."""
    def record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append((n, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
