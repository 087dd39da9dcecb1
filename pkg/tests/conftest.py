import pytest

from weightapprox import MrsSolver, WeightSpec, build_basis

FREUD2 = WeightSpec.freud(2.0)
FREUD4 = WeightSpec.freud(4.0)
ERDOS = WeightSpec.iterexp(1, 2.0, 0.0)
TOWER2 = WeightSpec.power_tower(2.0)


@pytest.fixture(scope="session")
def freud2():
    return FREUD2


@pytest.fixture(scope="session")
def erdos():
    return ERDOS


@pytest.fixture(scope="session")
def solver2():
    return MrsSolver(FREUD2)


@pytest.fixture(scope="session")
def basis2():
    return build_basis(FREUD2, 24)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
