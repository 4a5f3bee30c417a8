"""Shared fixtures and brute-force oracles.

The oracles here are deliberately naive loops over plain Python values so
that they stay independent of the vectorized code they check.
"""

import itertools
import json
from pathlib import Path

import numpy as np
import pytest

from cwsopt.problems import GridInstance

DATA = Path(__file__).parent / "data"


def oracle_dominates(a, b):
    return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))


def oracle_non_dominated(points):
    pts = [tuple(map(float, p)) for p in points]
    return [i for i, p in enumerate(pts) if not any(oracle_dominates(q, p) for j, q in enumerate(pts) if j != i)]


def oracle_weakly_non_dominated(points):
    pts = [tuple(map(float, p)) for p in points]
    return [
        i
        for i, p in enumerate(pts)
        if not any(all(x > y for x, y in zip(q, p)) for j, q in enumerate(pts) if j != i)
    ]


def oracle_ranks(points):
    pts = [tuple(map(float, p)) for p in points]
    ranks = [None] * len(pts)
    level = 0
    left = set(range(len(pts)))
    while left:
        front = {i for i in left if not any(oracle_dominates(pts[j], pts[i]) for j in left if j != i)}
        for i in front:
            ranks[i] = level
        left -= front
        level += 1
    return ranks


def oracle_epsilon_pareto(candidate, sample):
    """Solve each epsilon-constrained subproblem over the sample by enumeration."""
    c = tuple(map(float, candidate))
    k = len(c)
    for j in range(k):
        feasible = [q for q in sample if all(q[i] >= c[i] for i in range(k) if i != j)]
        if max(q[j] for q in feasible) > c[j]:
            return False
    return True


def random_point_set(rng, max_points=64, max_k=5, integer=True):
    n = int(rng.integers(1, max_points + 1))
    k = int(rng.integers(2, max_k + 1))
    if integer:
        # small integer grid forces ties and duplicates
        return rng.integers(0, 5, size=(n, k)).astype(float)
    return rng.random((n, k))


@pytest.fixture
def grid_instance():
    return GridInstance.from_dict(json.loads((DATA / "grid_2x2.json").read_text()))


@pytest.fixture
def grid_instance_path():
    return DATA / "grid_2x2.json"


def enumerate_schedules(instance):
    n = instance.n_operations
    choices = [instance.admissible(i) for i in range(n)]
    for assignment in itertools.product(*choices):
        for order in itertools.permutations(range(n)):
            yield assignment, order


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, ok, detail)`` then assert."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
