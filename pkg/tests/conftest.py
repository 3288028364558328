"""Shared fixtures: every expensive solve (SDP hierarchy, oracle grid,
quadrature reference) runs once per session and is reused by the unit
tests and the acceptance checks alike."""

import os

import pytest

from paramoment.cli import parse_problem_file
from paramoment.marginal import moments_for
from paramoment.oracle import (
    OracleConfig,
    evaluate_grid,
    integrate_value_function,
    reference_coordinate_moments,
)
from paramoment.relaxation import CvxoptBackend, solve_primal

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
PROBLEMS = os.path.join(REPO, "problems")

# one relaxation sweep per golden problem, from the minimum order up to 4
SOLVE_ORDERS = {
    "disk_slice": (2, 3, 4),
    "disk_direction": (1, 2, 3, 4),
    "ellipsoid_pair": (2, 3, 4),
    "ellipse_pair": (2, 3, 4),
    "boolean_step": (2, 3, 4),
    "tracking_toy": (1, 2, 3, 4),
}


def problem_path(name: str) -> str:
    return os.path.join(PROBLEMS, name + ".txt")


@pytest.fixture(scope="session")
def backend():
    return CvxoptBackend(1e-8)


@pytest.fixture(scope="session")
def problem_files():
    names = list(SOLVE_ORDERS) + ["empty_slice"]
    return {name: parse_problem_file(problem_path(name)) for name in names}


@pytest.fixture(scope="session")
def gammas(problem_files):
    out = {}
    for name, orders in SOLVE_ORDERS.items():
        prob = problem_files[name].problem
        out[name] = moments_for(prob.marginal, prob.p, 2 * max(orders))
    return out


@pytest.fixture(scope="session")
def solutions(problem_files, gammas, backend):
    """name -> list of RelaxationSolution at SOLVE_ORDERS[name]."""
    out = {}
    for name, orders in SOLVE_ORDERS.items():
        prob = problem_files[name].problem
        out[name] = solve_primal(prob, gammas[name], list(orders), backend)
    return out


@pytest.fixture(scope="session")
def oracle_config():
    return OracleConfig()


@pytest.fixture(scope="session")
def oracle_grids(problem_files, oracle_config):
    """101-node ground-truth grids for the problems the dominance and
    cross-check criteria quote."""
    return {
        name: evaluate_grid(problem_files[name].problem, oracle_config)
        for name in ("disk_slice", "disk_direction", "ellipse_pair")
    }


@pytest.fixture(scope="session")
def rho_refs(problem_files, oracle_config):
    return {
        name: integrate_value_function(problem_files[name].problem, 64, oracle_config)
        for name in ("disk_slice", "disk_direction")
    }


@pytest.fixture(scope="session")
def toy_reference_moments(problem_files):
    cfg = OracleConfig(grid=64)
    return reference_coordinate_moments(
        problem_files["tracking_toy"].problem, 1, range(5), cfg
    )


ACCEPTANCE_LINES: list[tuple[int, str]] = []


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append((number, f"criterion {number:2d}: "
                                     f"{'PASS' if ok else 'FAIL'}  {detail}"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
