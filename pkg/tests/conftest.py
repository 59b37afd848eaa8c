from pathlib import Path

import pytest

from qipsim.problem import Constraint, IpProblem, Monomial, Polynomial, parse_problem

ROOT = Path(__file__).resolve().parents[1]
PROBLEMS = ROOT / "problems"

# brute-force feasible set of the five-variable demonstration instance
DEMO_FEASIBLE = [0, 1, 2, 27, 28, 29]
DEMO_COSTS = [0.0, 1.5, 3.0, 1.0, 2.5, 4.0]


def poly(*terms):
    return Polynomial.from_terms([Monomial(float(c), tuple(e)) for c, e in terms])


@pytest.fixture(scope="session")
def demo():
    return parse_problem((PROBLEMS / "nonconvex_5var.json").read_text())


@pytest.fixture(scope="session")
def empty_feasible():
    return parse_problem((PROBLEMS / "empty_feasible.json").read_text())


@pytest.fixture
def two_bit_linear():
    """x1 + 2 x2 < 2 over d = 2."""
    return IpProblem(2, 2, poly((1, (1, 0))), (Constraint(poly((1, (1, 0)), (2, (0, 1))), 2.0),))


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(line)
