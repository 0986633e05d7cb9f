import numpy as np
import pytest

from twophase import instances
from twophase.exact import LiveGraph
from twophase.graph import AssignmentSpec, les_miserables, make_instance


@pytest.fixture(scope="session")
def lm():
    return make_instance(les_miserables(), AssignmentSpec(master_seed=1))


@pytest.fixture
def fork():
    return instances.fork_network(), instances.fork_economics()


@pytest.fixture
def tree():
    return instances.tree_network(), instances.tree_economics()


def label_mask(network, text_edges) -> LiveGraph:
    idx = {lab: i for i, lab in enumerate(network.labels)}
    return LiveGraph.from_edges(network, [(idx[a], idx[b]) for a, b in text_edges])


def label_ids(network, labels) -> tuple:
    idx = {lab: i for i, lab in enumerate(network.labels)}
    return tuple(sorted(idx[x] for x in labels))


def binomial_interval(p, n, z=3.0):
    s = z * np.sqrt(p * (1 - p) / n)
    return p - s, p + s


ACCEPTANCE: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
