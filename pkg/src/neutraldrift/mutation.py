"""Initialisation and the two variation operators.

Edge mutation redirects one edge to a uniformly chosen node that cannot
close a cycle; function mutation relabels a node and repairs its arity.
Both take the RNG explicitly (a :class:`random.Random`).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .circuit_graph import AON, Edge, FunctionKind, Individual


@dataclass
class MutationParams:
    rate: float = 0.01
    function_set: tuple[FunctionKind, ...] = field(default=AON)

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"mutation rate {self.rate} outside [0, 1]")
        if not self.function_set:
            raise ValueError("function set is empty")
        self.function_set = tuple(self.function_set)


def init_circuit(
    num_inputs: int,
    num_outputs: int,
    num_nodes: int,
    function_set: Sequence[FunctionKind],
    rng: random.Random,
) -> Individual:
    """Random genotype; each function node only points at nodes created before it."""
    if min(num_inputs, num_outputs, num_nodes) < 1:
        raise ValueError("need at least one input, output and function node")
    fs = tuple(function_set)
    kinds: list = [None] * num_inputs
    edges: list = [()] * num_inputs
    for v in range(num_inputs, num_inputs + num_nodes):
        kind = fs[rng.randrange(len(fs))]
        kinds.append(kind)
        edges.append(tuple(rng.randrange(v) for _ in range(kind.arity)))
    sources = num_inputs + num_nodes
    for _ in range(num_outputs):
        kinds.append(None)
        edges.append((rng.randrange(sources),))
    return Individual(num_inputs, num_outputs, num_nodes, kinds, edges)


def _ancestor_flags(ind: Individual, node: int) -> list[bool]:
    """flags[v] is True iff v == node or v has a directed path to node."""
    total = ind.num_nodes
    flags = [False] * total
    flags[node] = True
    if node >= ind.first_output:
        return flags  # outputs have no in-edges
    parents: list[list[int]] = [[] for _ in range(total)]
    edges = ind.edges
    for v in range(ind.num_inputs, total):
        for t in edges[v]:
            parents[t].append(v)
    stack = [node]
    while stack:
        for p in parents[stack.pop()]:
            if not flags[p]:
                flags[p] = True
                stack.append(p)
    return flags


def _check_edge(ind: Individual, edge: Edge) -> None:
    v, pos = edge
    if not (ind.num_inputs <= v < ind.num_nodes and 0 <= pos < len(ind.edges[v])):
        raise ValueError(f"invalid edge handle {edge}")


def edge_candidates(ind: Individual, edge: Edge) -> list[int]:
    """Nodes the edge may be redirected to without creating a cycle.

    Excludes outputs, the current target, the source and its ancestors.
    """
    _check_edge(ind, edge)
    v, pos = edge
    old = ind.edges[v][pos]
    blocked = _ancestor_flags(ind, v)
    return [u for u in range(ind.first_output) if not blocked[u] and u != old]


def mutate_edge(ind: Individual, edge: Edge, rng: random.Random) -> bool:
    """Redirect ``edge`` in place; returns False when no candidate exists."""
    cands = edge_candidates(ind, edge)
    if not cands:
        return False
    ind.set_target(edge, cands[rng.randrange(len(cands))])
    return True


def mutate_function(
    ind: Individual,
    node: int,
    rng: random.Random,
    function_set: Sequence[FunctionKind] = AON,
) -> bool:
    """Relabel a function node, adding or deleting out-edges to fit the new arity."""
    if not ind.is_function(node):
        raise ValueError(f"node {node} is not a function node")
    old = ind.kinds[node]
    choices = [k for k in function_set if k != old]
    if not choices:
        return False
    new = choices[rng.randrange(len(choices))]
    ind.kinds[node] = new
    targets = list(ind.edges[node])
    if new.arity > len(targets):
        blocked = _ancestor_flags(ind, node)
        allowed = [u for u in range(ind.first_output) if not blocked[u]]
        # inputs are never ancestors, so allowed is non-empty
        while len(targets) < new.arity:
            targets.append(allowed[rng.randrange(len(allowed))])
    while len(targets) > new.arity:
        del targets[rng.randrange(len(targets))]
    ind.edges[node] = tuple(targets)
    return True


def _hits(count: int, rate: float, rng: random.Random) -> list[int]:
    """Indices in ``range(count)`` that pass independent Bernoulli(rate) trials.

    Draws geometric gaps instead of one uniform per gene.
    """
    if rate <= 0.0 or count <= 0:
        return []
    if rate >= 1.0:
        return list(range(count))
    log_q = math.log1p(-rate)
    out = []
    i = -1
    while True:
        i += 1 + int(math.log(1.0 - rng.random()) / log_q)
        if i >= count:
            return out
        out.append(i)


def mutate_genes(
    ind: Individual, params: MutationParams, rng: random.Random
) -> tuple[int, list[int]]:
    """Per-gene mutation; returns (attempts, source node of each attempt).

    Function nodes are visited first, then every edge of the resulting
    genotype (function-node edges, then output edges).
    """
    n_in = ind.num_inputs
    touched = []
    for j in _hits(ind.num_function_nodes, params.rate, rng):
        v = n_in + j
        mutate_function(ind, v, rng, params.function_set)
        touched.append(v)

    edges = ind.edges
    total = ind.num_nodes
    n_edges = sum(len(edges[v]) for v in range(n_in, total))
    hits = _hits(n_edges, params.rate, rng)
    if hits:
        # map flat edge indices to (node, position)
        v = n_in
        base = 0
        for h in hits:
            while h >= base + len(edges[v]):
                base += len(edges[v])
                v += 1
            mutate_edge(ind, (v, h - base), rng)
            touched.append(v)
    return len(touched), touched


def point_mutate(ind: Individual, params: MutationParams, rng: random.Random) -> int:
    """Mutate each gene independently with probability ``params.rate``; returns attempts."""
    return mutate_genes(ind, params, rng)[0]
