"""Benchmark target functions and the truth-table text format.

Bit conventions: index 0 is the least significant bit everywhere. Adders
take ``(a0..a_{n-1}, b0..b_{n-1}, cin)`` and produce ``(s0..s_{n-1}, cout)``;
multipliers take ``(a, b)`` and produce the ``2n``-bit product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

from .semantics import TruthTable

COMPARATOR_PAIRS = tuple(itertools.combinations(range(4), 2))


@dataclass(frozen=True)
class TargetSpec:
    problem_name: str
    num_inputs: int
    num_outputs: int
    table: TruthTable

    def __post_init__(self) -> None:
        if (self.table.num_inputs, self.table.num_outputs) != (self.num_inputs, self.num_outputs):
            raise ValueError("table dimensions disagree with the target spec")


class TruthTableParseError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


def _bits(x: int, n: int) -> list[int]:
    return [(x >> k) & 1 for k in range(n)]


def _word(bits: list[int]) -> int:
    return sum(b << k for k, b in enumerate(bits))


def _adder(n: int) -> Callable[[list[int]], list[int]]:
    def f(x: list[int]) -> list[int]:
        a, b, cin = _word(x[:n]), _word(x[n : 2 * n]), x[2 * n]
        return _bits(a + b + cin, n + 1)

    return f


def _multiplier(n: int) -> Callable[[list[int]], list[int]]:
    def f(x: list[int]) -> list[int]:
        return _bits(_word(x[:n]) * _word(x[n:]), 2 * n)

    return f


def _demux(x: list[int]) -> list[int]:
    sel = _word(x)
    return [int(j == sel) for j in range(8)]


def _comparator(x: list[int]) -> list[int]:
    out = []
    for p, q in COMPARATOR_PAIRS:
        out += [int(x[p] < x[q]), int(x[p] == x[q]), int(x[p] > x[q])]
    return out


def _even_parity(x: list[int]) -> list[int]:
    return [int(sum(x) % 2 == 0)]


# name -> (inputs, outputs, row function)
PROBLEMS: dict[str, tuple[int, int, Callable[[list[int]], list[int]]]] = {
    "1-Add": (3, 2, _adder(1)),
    "2-Add": (5, 3, _adder(2)),
    "3-Add": (7, 4, _adder(3)),
    "2-Mul": (4, 4, _multiplier(2)),
    "3-Mul": (6, 6, _multiplier(3)),
    "DeMux": (3, 8, _demux),
    "Comp": (4, 18, _comparator),
    **{f"{k}-EP": (k, 1, _even_parity) for k in range(3, 8)},
}


def table_from_rows(num_inputs: int, num_outputs: int, rows) -> TruthTable:
    """``rows[r]`` is the output bit tuple for input row ``r``."""
    cols = [0] * num_outputs
    for r, outs in enumerate(rows):
        for j, b in enumerate(outs):
            if b:
                cols[j] |= 1 << r
    return TruthTable(num_inputs, num_outputs, tuple(cols))


def target_for(problem_name: str) -> TargetSpec:
    try:
        n_in, n_out, fn = PROBLEMS[problem_name]
    except KeyError:
        known = ", ".join(PROBLEMS)
        raise ValueError(f"unknown problem {problem_name!r} (known: {known})") from None
    rows = [fn(_bits(r, n_in)) for r in range(1 << n_in)]
    return TargetSpec(problem_name, n_in, n_out, table_from_rows(n_in, n_out, rows))


def format_truth_table(target: TargetSpec) -> str:
    lines = [f"# problem {target.problem_name}", f"inputs {target.num_inputs} outputs {target.num_outputs}"]
    t = target.table
    for r in range(t.num_rows):
        ins = " ".join(str(b) for b in _bits(r, t.num_inputs))
        outs = " ".join(str(b) for b in t.row(r))
        lines.append(f"{ins} {outs}")
    return "\n".join(lines) + "\n"


def parse_truth_table_file(text: bytes | str, name: str = "custom") -> TargetSpec:
    """Parse the header-plus-rows format written by :func:`format_truth_table`.

    A ``# problem <name>`` comment, if present, overrides ``name``.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    header = None
    n_in = n_out = 0
    seen: dict[int, int] = {}
    rows: dict[int, tuple[int, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            words = line[1:].split()
            if len(words) == 2 and words[0] == "problem":
                name = words[1]
            continue
        if not line:
            continue
        fields = line.split()
        if header is None:
            if len(fields) != 4 or fields[0] != "inputs" or fields[2] != "outputs":
                raise TruthTableParseError(lineno, "expected 'inputs <i> outputs <o>'")
            try:
                n_in, n_out = int(fields[1]), int(fields[3])
            except ValueError:
                raise TruthTableParseError(lineno, "dimensions must be integers") from None
            if n_in < 1 or n_out < 1:
                raise TruthTableParseError(lineno, "dimensions must be positive")
            header = lineno
            continue
        if len(fields) != n_in + n_out:
            raise TruthTableParseError(
                lineno, f"expected {n_in + n_out} bits, found {len(fields)}"
            )
        bad = [f for f in fields if f not in ("0", "1")]
        if bad:
            raise TruthTableParseError(lineno, f"non-binary symbol {bad[0]!r}")
        bits = [int(f) for f in fields]
        r = _word(bits[:n_in])
        if r in seen:
            raise TruthTableParseError(lineno, f"duplicate row (first given on line {seen[r]})")
        seen[r] = lineno
        rows[r] = tuple(bits[n_in:])
    if header is None:
        raise TruthTableParseError(0, "missing header")
    missing = [r for r in range(1 << n_in) if r not in rows]
    if missing:
        last = max(seen.values(), default=header)
        raise TruthTableParseError(
            last, f"{len(missing)} missing rows, first is input word {missing[0]}"
        )
    table = table_from_rows(n_in, n_out, [rows[r] for r in range(1 << n_in)])
    return TargetSpec(name, n_in, n_out, table)
