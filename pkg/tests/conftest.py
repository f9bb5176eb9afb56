import itertools

import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csr_matrix

from tuzalab.graph import Graph

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def milp_nu_tau(ts):
    """nu and tau through scipy's MILP interface, independent of the package solvers."""
    nt, m = len(ts), ts.host.m
    if nt == 0:
        return 0, 0
    A = csr_matrix((np.ones(3 * nt), (np.repeat(np.arange(nt), 3), ts.tri_edges.ravel())),
                   shape=(nt, m))
    tau = milp(np.ones(m), constraints=LinearConstraint(A, 1, np.inf),
               integrality=np.ones(m), bounds=Bounds(0, 1))
    nu = milp(-np.ones(nt), constraints=LinearConstraint(A.T, 0, 1),
              integrality=np.ones(nt), bounds=Bounds(0, 1))
    return round(-nu.fun), round(tau.fun)


def brute_triangles(g: Graph):
    es = g.edge_set
    return [t for t in itertools.combinations(range(g.n), 3)
            if (t[0], t[1]) in es and (t[0], t[2]) in es and (t[1], t[2]) in es]


@pytest.fixture
def k4():
    return Graph.complete(4)
