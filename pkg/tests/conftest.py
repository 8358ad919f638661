import numpy as np
import pytest

from wavegp import build_graph


def random_connected_graph(rng, n, p=0.3, weighted=False):
    """ER graph with a guaranteed path so tests never hit the connectivity error."""
    edges = []
    present = set()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                w = float(rng.uniform(0.5, 2.0)) if weighted else 1.0
                edges.append((i, j, w))
                present.add((i, j))
    for i in range(n - 1):
        if (i, i + 1) not in present:
            edges.append((i, i + 1, 1.0))
    return build_graph(n, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance pass/fail lines after the test summary."""
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
