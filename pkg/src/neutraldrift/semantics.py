"""Truth-table evaluation and the bit-error fitness.

A column holds one bit per input assignment, packed into a Python int: bit
``r`` is the value on row ``r``, where input slot ``k`` takes bit ``k`` of
``r``. Python ints are arbitrary-width word arrays, so every gate is one
bitwise operation across all ``2**i`` rows at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

from .circuit_graph import FunctionKind, Individual, active_order, validate

if TYPE_CHECKING:
    from .benchmarks import TargetSpec

MAX_INPUTS = 16

_AND, _OR, _NOT, _NAND, _NOR = (int(k) for k in FunctionKind)


@dataclass(frozen=True)
class TruthTable:
    num_inputs: int
    num_outputs: int
    columns: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.columns) != self.num_outputs:
            raise ValueError("one column per output required")
        limit = 1 << self.num_rows
        for c in self.columns:
            if not 0 <= c < limit:
                raise ValueError("column has bits beyond the row count")

    @property
    def num_rows(self) -> int:
        return 1 << self.num_inputs

    def bit(self, row: int, output: int) -> int:
        return (self.columns[output] >> row) & 1

    def row(self, r: int) -> tuple[int, ...]:
        return tuple((c >> r) & 1 for c in self.columns)

    def hamming(self, other: "TruthTable") -> int:
        if (self.num_inputs, self.num_outputs) != (other.num_inputs, other.num_outputs):
            raise ValueError("truth tables have different dimensions")
        return sum((a ^ b).bit_count() for a, b in zip(self.columns, other.columns))


@lru_cache(maxsize=None)
def row_mask(num_inputs: int) -> int:
    return (1 << (1 << num_inputs)) - 1


@lru_cache(maxsize=None)
def input_patterns(num_inputs: int) -> tuple[int, ...]:
    """Column of each input slot: bit r is bit k of r."""
    rows = 1 << num_inputs
    out = []
    for k in range(num_inputs):
        # blocks of 2**k zeros then 2**k ones, repeated
        block = ((1 << (1 << k)) - 1) << (1 << k)
        period = 1 << (k + 1)
        col = 0
        for start in range(0, rows, period):
            col |= block << start
        out.append(col)
    return tuple(out)


def _check_cap(num_inputs: int, cap: int) -> None:
    if num_inputs > cap:
        raise ValueError(f"{num_inputs} inputs exceeds the evaluation cap of {cap}")


def node_values(ind: Individual, order: list[int] | None = None) -> list:
    """Packed value of every active node (``None`` for inactive ones)."""
    mask = row_mask(ind.num_inputs)
    vals: list = [None] * ind.num_nodes
    vals[: ind.num_inputs] = input_patterns(ind.num_inputs)
    kinds = ind.kinds
    edges = ind.edges
    n_in = ind.num_inputs
    for v in active_order(ind) if order is None else order:
        if v < n_in:
            continue
        e = edges[v]
        k = kinds[v]
        if k == _AND:
            x = vals[e[0]] & vals[e[1]]
        elif k == _OR:
            x = vals[e[0]] | vals[e[1]]
        elif k == _NOT:
            x = vals[e[0]] ^ mask
        elif k == _NAND:
            x = (vals[e[0]] & vals[e[1]]) ^ mask
        else:
            x = (vals[e[0]] | vals[e[1]]) ^ mask
        vals[v] = x
    return vals


def columns_unchecked(ind: Individual, order: list[int] | None = None) -> tuple[int, ...]:
    """Output columns without validation; the hot path of the search loop."""
    vals = node_values(ind, order)
    edges = ind.edges
    return tuple(vals[edges[o][0]] for o in ind.output_nodes())


def evaluate(ind: Individual, max_inputs: int = MAX_INPUTS) -> TruthTable:
    """Truth table of ``ind`` over all ``2**i`` input rows."""
    _check_cap(ind.num_inputs, max_inputs)
    problems = validate(ind)
    if problems:
        raise ValueError("invalid individual: " + "; ".join(map(str, problems)))
    return TruthTable(ind.num_inputs, ind.num_outputs, columns_unchecked(ind))


def fitness(ind: Individual, target: "TargetSpec") -> int:
    """Number of output bits that differ from the target table."""
    if (ind.num_inputs, ind.num_outputs) != (target.num_inputs, target.num_outputs):
        raise ValueError(
            f"individual is {ind.num_inputs}x{ind.num_outputs} but target "
            f"{target.problem_name} is {target.num_inputs}x{target.num_outputs}"
        )
    return evaluate(ind).hamming(target.table)


def errors_against(columns: tuple[int, ...], target_columns: tuple[int, ...]) -> int:
    return sum((a ^ b).bit_count() for a, b in zip(columns, target_columns))
