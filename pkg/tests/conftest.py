import numpy as np
import pytest

from isoreduce.graph_core import WeightedGraph, random_structural_graph
from isoreduce.markov_family import FamilyParams

CORPUS_SEED = 20240601
CORPUS_SIZE = 200

_acceptance_lines: list[str] = []


def build_corpus(seed=CORPUS_SEED, size=CORPUS_SIZE):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(size):
        n = int(rng.integers(2, 13))
        out.append(random_structural_graph(rng, n))
    return out


@pytest.fixture(scope="session")
def corpus():
    return build_corpus()


@pytest.fixture
def two_cycle():
    return WeightedGraph.from_edges(2, [(1, 2, 1.0), (2, 1, 1.0)]), (1,)


@pytest.fixture(scope="session")
def reference_params():
    return FamilyParams.reference().validate()


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion, then assert."""

    def record(number, name, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}"
        _acceptance_lines.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
