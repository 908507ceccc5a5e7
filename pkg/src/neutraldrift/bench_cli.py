"""Batch experiments, CSV output and significance summaries."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .benchmarks import PROBLEMS, format_truth_table, target_for
from .circuit_graph import FUNCTION_SETS
from .evolution import DEFAULT_MAX_EVALUATIONS, EvolutionConfig, evolve
from .snd_rewrites import RULESETS, RuleSet
from .stats import mann_whitney_u, median_iqr, vargha_delaney_a

log = logging.getLogger(__name__)

CSV_FIELDS = (
    "problem",
    "ruleset",
    "function_set",
    "nodes",
    "lambda",
    "rate",
    "seed",
    "evaluations",
    "success",
    "final_fitness",
    "mean_active_size",
    "snd_applications",
)
TRACE_FIELDS = ("problem", "ruleset", "function_set", "nodes", "seed", "generation", "fitness", "active_size")
BASELINE = "none"
SIGNIFICANCE = 0.05


@dataclass
class ExperimentPlan:
    problems: list[str]
    rulesets: list[str]
    function_set: str = "aon"
    runs: int = 100
    nodes: list[int] = field(default_factory=lambda: [100])
    base_seed: int = 0
    out: Path | None = None
    lam: int = 4
    rate: float = 0.01
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS
    trace: bool = False
    engine: str = "compiled"

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.function_set not in FUNCTION_SETS:
            raise ValueError(f"unknown function set {self.function_set!r}")
        for p in self.problems:
            target_for(p)  # raises on unknown names
        self.rulesets = [RuleSet.named(r).name for r in self.rulesets]
        if not self.nodes or min(self.nodes) < 1:
            raise ValueError("node counts must be positive")

    def cells(self) -> list[tuple[str, str, int]]:
        return [(p, r, n) for p in self.problems for r in self.rulesets for n in self.nodes]

    def jobs(self) -> list[tuple[str, str, int, int]]:
        return [
            (p, r, n, self.base_seed + i)
            for p, r, n in self.cells()
            for i in range(self.runs)
        ]


@dataclass(frozen=True)
class RunRow:
    problem: str
    ruleset: str
    function_set: str
    nodes: int
    lam: int
    rate: float
    seed: int
    evaluations: int
    success: bool
    final_fitness: int
    mean_active_size: float
    snd_applications: int

    def as_csv(self) -> dict[str, object]:
        d = dataclasses.asdict(self)
        d["lambda"] = d.pop("lam")
        d["success"] = int(self.success)
        d["mean_active_size"] = f"{self.mean_active_size:.4f}"
        return d

    @classmethod
    def from_csv(cls, rec: dict[str, str]) -> "RunRow":
        return cls(
            problem=rec["problem"],
            ruleset=rec["ruleset"],
            function_set=rec["function_set"],
            nodes=int(rec["nodes"]),
            lam=int(rec["lambda"]),
            rate=float(rec["rate"]),
            seed=int(rec["seed"]),
            evaluations=int(rec["evaluations"]),
            success=rec["success"].strip().lower() in ("1", "true"),
            final_fitness=int(rec["final_fitness"]),
            mean_active_size=float(rec["mean_active_size"]),
            snd_applications=int(rec["snd_applications"]),
        )

    def sort_key(self) -> tuple:
        return (self.problem, self.ruleset, self.nodes, self.seed)


def _run_one(plan: ExperimentPlan, job: tuple[str, str, int, int]):
    problem, ruleset, nodes, seed = job
    cfg = EvolutionConfig(
        target=target_for(problem),
        function_set=FUNCTION_SETS[plan.function_set],
        nodes=nodes,
        lam=plan.lam,
        rate=plan.rate,
        ruleset=RuleSet.named(ruleset),
        max_evaluations=plan.max_evaluations,
        seed=seed,
        engine=plan.engine,
    )
    rec = evolve(cfg, trace=plan.trace)
    row = RunRow(
        problem, ruleset, plan.function_set, nodes, plan.lam, plan.rate, seed,
        rec.evaluations, rec.success, rec.best_fitness, rec.mean_active_size, rec.snd_applications,
    )
    return row, rec.trace


def run_experiment(
    plan: ExperimentPlan, workers: int = 1
) -> tuple[list[RunRow], dict[tuple, list[tuple[int, int, int]]]]:
    """Run every job of ``plan``; rows come back sorted by (problem, ruleset, nodes, seed).

    The second value maps (problem, ruleset, nodes, seed) to the run's trace
    when ``plan.trace`` is set, and is empty otherwise.
    """
    jobs = plan.jobs()
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_one, [plan] * len(jobs), jobs))
    else:
        results = [_run_one(plan, j) for j in jobs]
    traces = {}
    rows = []
    for row, trace in results:
        rows.append(row)
        if trace is not None:
            traces[row.sort_key()] = trace
    rows.sort(key=RunRow.sort_key)
    return rows, traces


def write_csv(rows: Iterable[RunRow], fh: TextIO) -> None:
    w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.as_csv())


def read_csv(fh: TextIO) -> list[RunRow]:
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [RunRow.from_csv(rec) for rec in reader]


def write_traces(traces: dict, function_set: str, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for (problem, ruleset, nodes, seed), trace in sorted(traces.items()):
        for gen, fit, size in trace:
            w.writerow((problem, ruleset, function_set, nodes, seed, gen, fit, size))


# -- summaries ---------------------------------------------------------------


@dataclass(frozen=True)
class CellSummary:
    problem: str
    ruleset: str
    function_set: str
    nodes: int
    runs: int
    median: float
    iqr: float
    success_rate: float
    mean_active_size: float
    p_value: float | None = None
    effect_a: float | None = None  # only set when p < 0.05


def summarize(
    rows: Sequence[RunRow], expected_cells: Iterable[tuple[str, str, str, int]] = ()
) -> list[CellSummary]:
    """Per-cell ME/IQR/SR/size plus Mann-Whitney p and A against the NONE cell.

    The baseline of a cell shares its problem, nodes and function set.
    ``expected_cells`` lists (problem, ruleset, function_set, nodes) cells
    that should exist; missing ones are skipped with a warning.
    """
    cells: dict[tuple[str, str, str, int], list[RunRow]] = {}
    for r in rows:
        cells.setdefault((r.problem, r.ruleset, r.function_set, r.nodes), []).append(r)
    for key in expected_cells:
        if key not in cells:
            log.warning("cell %s has no rows; omitted", key)

    out = []
    for key in sorted(cells):
        problem, ruleset, fs, nodes = key
        cell = cells[key]
        evals = [r.evaluations for r in cell]
        s = median_iqr(evals)
        p = a = None
        base = cells.get((problem, BASELINE, fs, nodes))
        if base is not None and ruleset != BASELINE:
            base_evals = [r.evaluations for r in base]
            _, p = mann_whitney_u(evals, base_evals)
            if p < SIGNIFICANCE:
                # probability that the baseline needs more evaluations
                a = vargha_delaney_a(base_evals, evals)
        out.append(
            CellSummary(
                problem, ruleset, fs, nodes, len(cell), s.median, s.iqr,
                sum(r.success for r in cell) / len(cell),
                sum(r.mean_active_size for r in cell) / len(cell),
                p, a,
            )
        )
    return out


def compare(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float | None]:
    """Mann-Whitney p of xs vs ys and, when significant, A(ys, xs)."""
    _, p = mann_whitney_u(xs, ys)
    return p, (vargha_delaney_a(ys, xs) if p < SIGNIFICANCE else None)


def _fmt_p(p: float | None) -> str:
    if p is None:
        return "-"
    if p == 0:
        return "0"
    return f"{p:.3g}" if p >= 1e-3 else f"1e{math.floor(math.log10(p))}"


def format_summary(cells: Sequence[CellSummary]) -> str:
    head = ("problem", "ruleset", "fs", "nodes", "runs", "ME", "IQR", "SR", "size", "p", "A")
    lines = [head]
    for c in cells:
        lines.append(
            (
                c.problem, c.ruleset.upper(), c.function_set, str(c.nodes), str(c.runs),
                f"{c.median:,.0f}", f"{c.iqr:,.0f}", f"{100 * c.success_rate:.0f}%",
                f"{c.mean_active_size:.1f}", _fmt_p(c.p_value),
                "-" if c.effect_a is None else f"{c.effect_a:.2f}",
            )
        )
    widths = [max(len(row[i]) for row in lines) for i in range(len(head))]
    return "\n".join("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in lines)


# -- command line ------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="neutraldrift",
        description="Evolve Boolean circuits with 1+lambda search and semantic neutral drift.",
    )
    ap.add_argument("--problem", default="1-Add", help=f"benchmark name, comma list or 'all' ({', '.join(PROBLEMS)})")
    ap.add_argument("--ruleset", default="none", help=f"one of {'|'.join(RULESETS)}, or a comma list")
    ap.add_argument("--function-set", default="aon", choices=sorted(FUNCTION_SETS))
    ap.add_argument("--nodes", type=_int_list, default=[100], help="function-node budget(s), e.g. 50,100,150")
    ap.add_argument("--lambda", dest="lam", type=int, default=4)
    ap.add_argument("--rate", type=float, default=0.01)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0, help="base seed; run i uses seed + i")
    ap.add_argument("--max-evals", type=int, default=DEFAULT_MAX_EVALUATIONS)
    ap.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    ap.add_argument("--summary", action="store_true", help="print the per-cell summary table")
    ap.add_argument("--dump-target", metavar="NAME", help="print a benchmark's truth table and exit")
    ap.add_argument("--trace", action="store_true", help="also write per-generation traces to <out>.trace.csv")
    ap.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    ap.add_argument("--engine", choices=("compiled", "python"), default="compiled")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")

    if args.dump_target:
        try:
            sys.stdout.write(format_truth_table(target_for(args.dump_target)))
        except (KeyError, ValueError) as exc:
            ap.error(str(exc))
        return 0

    problems = list(PROBLEMS) if args.problem == "all" else args.problem.split(",")
    if args.trace and args.out is None:
        ap.error("--trace needs --out")
    try:
        plan = ExperimentPlan(
            problems=problems,
            rulesets=args.ruleset.split(","),
            function_set=args.function_set,
            runs=args.runs,
            nodes=args.nodes,
            base_seed=args.seed,
            out=args.out,
            lam=args.lam,
            rate=args.rate,
            max_evaluations=args.max_evals,
            trace=args.trace,
            engine=args.engine,
        )
    except (KeyError, ValueError) as exc:
        ap.error(str(exc))

    rows, traces = run_experiment(plan, workers=args.workers)
    if plan.out is not None:
        with open(plan.out, "w", newline="") as fh:
            write_csv(rows, fh)
        if plan.trace:
            with open(f"{plan.out}.trace.csv", "w", newline="") as fh:
                write_traces(traces, plan.function_set, fh)
    elif not args.summary:
        write_csv(rows, sys.stdout)
    if args.summary:
        expected = [(p, r, plan.function_set, n) for p, r, n in plan.cells()]
        print(format_summary(summarize(rows, expected)))
    return 0


def rows_to_text(rows: Iterable[RunRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()
