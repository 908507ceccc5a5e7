"""Graph genotype for Boolean circuits.

Nodes are addressed by dense integer ids laid out as
``[inputs | function nodes | outputs]``. Each node owns an ordered tuple of
out-edge targets; an out-edge points at the node that supplies one of its
operands. Parallel edges are allowed, cycles are not.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence


class FunctionKind(enum.IntEnum):
    AND = 0
    OR = 1
    NOT = 2
    NAND = 3
    NOR = 4

    @property
    def arity(self) -> int:
        return 1 if self is FunctionKind.NOT else 2

    @classmethod
    def parse(cls, name: str) -> "FunctionKind":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown function {name!r}") from None


ARITY = {k: k.arity for k in FunctionKind}

AON = (FunctionKind.AND, FunctionKind.OR, FunctionKind.NOT)
AONN = (FunctionKind.AND, FunctionKind.OR, FunctionKind.NAND, FunctionKind.NOR)
FUNCTION_SETS = {"aon": AON, "aonn": AONN}

# (source node, position in its out-edge tuple)
Edge = tuple[int, int]


@dataclass
class Individual:
    """Fixed-size circuit genotype.

    ``kinds[v]`` is a :class:`FunctionKind` for function nodes and ``None``
    for input and output nodes.
    """

    num_inputs: int
    num_outputs: int
    num_function_nodes: int
    kinds: list
    edges: list = field(repr=False)

    @property
    def num_nodes(self) -> int:
        return self.num_inputs + self.num_function_nodes + self.num_outputs

    @property
    def first_output(self) -> int:
        return self.num_inputs + self.num_function_nodes

    def input_nodes(self) -> range:
        return range(self.num_inputs)

    def function_nodes(self) -> range:
        return range(self.num_inputs, self.first_output)

    def output_nodes(self) -> range:
        return range(self.first_output, self.num_nodes)

    def is_input(self, v: int) -> bool:
        return 0 <= v < self.num_inputs

    def is_function(self, v: int) -> bool:
        return self.num_inputs <= v < self.first_output

    def is_output(self, v: int) -> bool:
        return self.first_output <= v < self.num_nodes

    def copy(self) -> "Individual":
        # edge tuples are immutable, so a shallow list copy is a full copy
        return Individual(
            self.num_inputs,
            self.num_outputs,
            self.num_function_nodes,
            list(self.kinds),
            list(self.edges),
        )

    def iter_edges(self) -> Iterator[Edge]:
        """All edge handles: function-node edges first, then output edges."""
        edges = self.edges
        for v in range(self.num_inputs, self.num_nodes):
            for pos in range(len(edges[v])):
                yield (v, pos)

    def target(self, edge: Edge) -> int:
        v, pos = edge
        return self.edges[v][pos]

    def set_target(self, edge: Edge, new_target: int) -> None:
        v, pos = edge
        out = list(self.edges[v])
        out[pos] = new_target
        self.edges[v] = tuple(out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Individual):
            return NotImplemented
        return (
            self.num_inputs == other.num_inputs
            and self.num_outputs == other.num_outputs
            and self.num_function_nodes == other.num_function_nodes
            and self.kinds == other.kinds
            and [tuple(e) for e in self.edges] == [tuple(e) for e in other.edges]
        )


def from_spec(
    num_inputs: int,
    functions: Sequence[tuple[FunctionKind | str, Sequence[int]]],
    outputs: Sequence[int],
) -> Individual:
    """Build an individual from a compact description.

    ``functions`` lists ``(kind, targets)`` for each function node in id
    order; ``outputs`` gives each output's single target.
    """
    kinds: list = [None] * num_inputs
    edges: list = [()] * num_inputs
    for kind, targets in functions:
        if isinstance(kind, str):
            kind = FunctionKind.parse(kind)
        kinds.append(kind)
        edges.append(tuple(targets))
    for t in outputs:
        kinds.append(None)
        edges.append((t,))
    return Individual(num_inputs, len(outputs), len(functions), kinds, edges)


def active_order(ind: Individual) -> list[int]:
    """Non-output nodes reachable from an output, children before parents."""
    edges = ind.edges
    seen = [False] * ind.num_nodes
    order = []
    for out in ind.output_nodes():
        root = edges[out][0]
        if seen[root]:
            continue
        seen[root] = True
        stack = [(root, iter(edges[root]))]
        while stack:
            v, it = stack[-1]
            for t in it:
                if not seen[t]:
                    seen[t] = True
                    stack.append((t, iter(edges[t])))
                    break
            else:
                stack.pop()
                order.append(v)
    return order


def active_mask(ind: Individual) -> list[bool]:
    """mask[v] is True iff v is an output or reachable from one."""
    edges = ind.edges
    mask = [False] * ind.num_nodes
    stack = []
    for o in ind.output_nodes():
        mask[o] = True
        stack.append(edges[o][0])
    while stack:
        v = stack.pop()
        if not mask[v]:
            mask[v] = True
            stack.extend(edges[v])
    return mask


def active_set(ind: Individual) -> set[int]:
    """Nodes reachable from any output node, outputs included."""
    return set(active_order(ind)) | set(ind.output_nodes())


def neutral_pool(ind: Individual) -> set[int]:
    """Function nodes that no output depends on."""
    mask = active_mask(ind)
    return {v for v in ind.function_nodes() if not mask[v]}


def active_function_count(ind: Individual) -> int:
    n_in = ind.num_inputs
    return sum(1 for v in active_order(ind) if v >= n_in)


def ancestors(ind: Individual, node: int) -> set[int]:
    """``node`` plus every node with a directed path to it."""
    parents: list[list[int]] = [[] for _ in range(ind.num_nodes)]
    edges = ind.edges
    for v in range(ind.num_inputs, ind.num_nodes):
        for t in edges[v]:
            parents[t].append(v)
    found = {node}
    stack = [node]
    while stack:
        for p in parents[stack.pop()]:
            if p not in found:
                found.add(p)
                stack.append(p)
    return found


@dataclass(frozen=True)
class Violation:
    node: int | None
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        where = "graph" if self.node is None else f"node {self.node}"
        return f"{where}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


def validate(ind: Individual) -> list[Violation]:
    """Check every structural invariant; an empty list means the genotype is valid."""
    out: list[Violation] = []
    total = ind.num_nodes
    if min(ind.num_inputs, ind.num_outputs, ind.num_function_nodes) < 0:
        return [Violation(None, "counts", "negative node count")]
    if len(ind.kinds) != total or len(ind.edges) != total:
        return [Violation(None, "counts", f"expected {total} nodes")]

    for v in range(total):
        kind = ind.kinds[v]
        targets = ind.edges[v]
        if ind.is_input(v):
            if kind is not None:
                out.append(Violation(v, "label", "input node carries a function"))
            if len(targets):
                out.append(Violation(v, "arity", f"input has {len(targets)} out-edges"))
        elif ind.is_output(v):
            if kind is not None:
                out.append(Violation(v, "label", "output node carries a function"))
            if len(targets) != 1:
                out.append(Violation(v, "arity", f"output has {len(targets)} out-edges"))
        else:
            if not isinstance(kind, FunctionKind):
                out.append(Violation(v, "label", f"bad function {kind!r}"))
            elif len(targets) != kind.arity:
                out.append(
                    Violation(v, "arity", f"{kind.name} has {len(targets)} out-edges")
                )
        for t in targets:
            if not (isinstance(t, int) and 0 <= t < total):
                out.append(Violation(v, "dangling", f"target {t!r}"))
            elif ind.is_output(t):
                out.append(Violation(v, "output-target", f"edge into output {t}"))

    if not any(x.rule in ("dangling", "counts") for x in out):
        cyclic = _nodes_on_cycles(ind)
        if cyclic:
            out.append(Violation(min(cyclic), "acyclicity", f"cycle through {sorted(cyclic)}"))
    return out


def _nodes_on_cycles(ind: Individual) -> set[int]:
    # Kahn's algorithm; whatever cannot be peeled lies on or behind a cycle
    total = ind.num_nodes
    indeg = [0] * total
    for v in range(total):
        for t in ind.edges[v]:
            indeg[t] += 1
    queue = [v for v in range(total) if indeg[v] == 0]
    removed = 0
    while queue:
        v = queue.pop()
        removed += 1
        for t in ind.edges[v]:
            indeg[t] -= 1
            if indeg[t] == 0:
                queue.append(t)
    if removed == total:
        return set()
    return {v for v in range(total) if indeg[v] > 0}


def is_valid(ind: Individual) -> bool:
    return not validate(ind)


def gene_count(ind: Individual) -> int:
    """Function nodes plus every edge."""
    return ind.num_function_nodes + sum(len(ind.edges[v]) for v in range(ind.num_nodes))


def describe(ind: Individual, nodes: Iterable[int] | None = None) -> str:
    lines = []
    for v in nodes if nodes is not None else range(ind.num_nodes):
        if ind.is_input(v):
            label = f"IN:{v}"
        elif ind.is_output(v):
            label = f"OUT:{v - ind.first_output}"
        else:
            label = ind.kinds[v].name
        lines.append(f"{v:>4} {label:<6} -> {list(ind.edges[v])}")
    return "\n".join(lines)
