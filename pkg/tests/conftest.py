"""Shared fixtures and brute-force oracles used across the test modules."""

from __future__ import annotations

import math
import random
from collections import deque

import pytest
from hypothesis import HealthCheck, settings

from neutraldrift.circuit_graph import AON, FunctionKind, Individual, from_spec
from neutraldrift.mutation import MutationParams, init_circuit, point_mutate

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_individual(
    rng: random.Random, n_in: int = 3, n_out: int = 2, n_fn: int = 12, fs=AON, scramble: int = 3
) -> Individual:
    """init_circuit followed by a few heavy mutation rounds.

    Initialisation only wires nodes to lower ids; mutation rounds reach
    DAGs that are not topologically ordered by id.
    """
    ind = init_circuit(n_in, n_out, n_fn, fs, rng)
    for _ in range(scramble):
        point_mutate(ind, MutationParams(0.2, fs), rng)
    return ind


def bfs_active(ind: Individual) -> set[int]:
    """Breadth-first reachability from the outputs, outputs included."""
    seen = set(range(ind.first_output, ind.num_nodes))
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for t in ind.edges[v]:
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return seen


_OPS = {
    FunctionKind.AND: lambda a, b: a & b,
    FunctionKind.OR: lambda a, b: a | b,
    FunctionKind.NAND: lambda a, b: 1 - (a & b),
    FunctionKind.NOR: lambda a, b: 1 - (a | b),
}


def scalar_eval(ind: Individual, row: int) -> tuple[int, ...]:
    """Evaluate one input row recursively, one bit at a time."""
    memo: dict[int, int] = {}

    def value(v: int) -> int:
        if v in memo:
            return memo[v]
        if v < ind.num_inputs:
            out = (row >> v) & 1
        else:
            k = ind.kinds[v]
            args = [value(t) for t in ind.edges[v]]
            out = 1 - args[0] if k == FunctionKind.NOT else _OPS[k](*args)
        memo[v] = out
        return out

    return tuple(value(ind.edges[o][0]) for o in ind.output_nodes())


def chi_square_p(counts, expected) -> float:
    """Upper-tail p of Pearson's goodness-of-fit statistic."""
    from scipy.stats import chi2

    stat = sum((c - e) ** 2 / e for c, e in zip(counts, expected))
    return float(chi2.sf(stat, len(counts) - 1))


def fig1_individual() -> Individual:
    """The 2-input, 2-output example circuit, ids shifted down by one."""
    return from_spec(
        2,
        [
            ("AND", (0, 1)),  # 2
            ("OR", (1, 0)),  # 3
            ("OR", (3, 1)),  # 4
            ("NOT", (2,)),  # 5
            ("NOT", (3,)),  # 6
            ("AND", (6, 3)),  # 7
            ("AND", (7, 4)),  # 8
            ("AND", (6, 10)),  # 9
            ("OR", (7, 6)),  # 10
            ("NOT", (7,)),  # 11
        ],
        [6, 11],
    )


@pytest.fixture
def rng() -> random.Random:
    return random.Random(12345)


def perm(k: int, r: int) -> int:
    return math.perm(k, r) if k >= r else 0


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
