"""1+lambda search with neutral acceptance and per-generation neutral drift."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .benchmarks import TargetSpec
from .circuit_graph import AON, FunctionKind, Individual, active_order
from .mutation import MutationParams, init_circuit, mutate_genes
from .snd_rewrites import RuleSet, apply_ruleset
from .semantics import MAX_INPUTS, errors_against, node_values

DEFAULT_MAX_EVALUATIONS = 20_000_000


@dataclass
class EvolutionConfig:
    target: TargetSpec
    function_set: tuple[FunctionKind, ...] = AON
    nodes: int = 100
    lam: int = 4
    rate: float = 0.01
    ruleset: RuleSet = field(default_factory=lambda: RuleSet.named("none"))
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS
    seed: int = 0
    # re-evaluate after every rewrite and fail loudly if the table moved
    check_snd: bool = False
    # "compiled" (numba kernels) or "python" (reference operators)
    engine: str = "compiled"

    def __post_init__(self) -> None:
        self.function_set = tuple(self.function_set)
        if self.lam < 1:
            raise ValueError("lambda must be at least 1")
        if self.engine not in ("compiled", "python"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.nodes < 1:
            raise ValueError("need at least one function node")
        if self.target.num_inputs > MAX_INPUTS:
            raise ValueError(f"targets above {MAX_INPUTS} inputs are not supported")
        missing = self.ruleset.required_kinds - set(self.function_set)
        if missing:
            names = ", ".join(sorted(k.name for k in missing))
            raise ValueError(
                f"rule set {self.ruleset.name!r} writes {names}, which the function set lacks"
            )

    @property
    def mutation(self) -> MutationParams:
        return MutationParams(self.rate, self.function_set)


@dataclass
class RunRecord:
    evaluations: int
    success: bool
    best_fitness: int
    mean_active_size: float
    snd_applications: int
    generations: int
    trace: list[tuple[int, int, int]] | None = None  # (generation, fitness, active size)


@dataclass
class _Scored:
    ind: Individual
    fitness: int
    active: list[int]  # active nodes (inputs and function nodes), children first

    def active_flags(self) -> list[bool]:
        # output nodes always count: moving an output edge changes the phenotype
        n_out = self.ind.num_outputs
        flags = [False] * (self.ind.num_nodes - n_out) + [True] * n_out
        for v in self.active:
            flags[v] = True
        return flags

    def size(self) -> int:
        n_in = self.ind.num_inputs
        return sum(1 for v in self.active if v >= n_in)


def _score(ind: Individual, target_cols: tuple[int, ...]) -> _Scored:
    order = active_order(ind)
    vals = node_values(ind, order)
    cols = tuple(vals[ind.edges[o][0]] for o in ind.output_nodes())
    return _Scored(ind, errors_against(cols, target_cols), order)


def select_survivor(parent, children: Sequence, rng: random.Random, key: Callable = None):
    """Best child if it is no worse than the parent, else the parent.

    Items are ``(individual, fitness)`` pairs unless ``key`` extracts the
    fitness. Ties among the best children are broken uniformly.
    """
    if not children:
        raise ValueError("no children to select from")
    key = key or (lambda item: item[1])
    best = min(key(c) for c in children)
    if best > key(parent):
        return parent
    tied = [c for c in children if key(c) == best]
    return tied[0] if len(tied) == 1 else tied[rng.randrange(len(tied))]


def evolve(
    cfg: EvolutionConfig,
    rng: random.Random | None = None,
    trace: bool = False,
) -> RunRecord:
    """One run from a random circuit until the target is met or the budget is spent.

    Per generation: rewrite the parent once with the rule set (free, the
    table cannot change), breed ``lam`` mutants (one evaluation each), keep
    the best mutant unless it is strictly worse than the parent.
    """
    rng = rng if rng is not None else random.Random(cfg.seed)
    target = cfg.target
    ind = init_circuit(target.num_inputs, target.num_outputs, cfg.nodes, cfg.function_set, rng)
    if cfg.engine == "python":
        return _evolve_python(cfg, ind, rng, trace)
    return _evolve_compiled(cfg, ind, rng, trace)


def _evolve_python(cfg: EvolutionConfig, ind: Individual, rng: random.Random, trace: bool) -> RunRecord:
    target_cols = cfg.target.table.columns
    params = cfg.mutation
    rules = cfg.ruleset
    lam = cfg.lam

    parent = _score(ind, target_cols)
    evaluations = 1
    generation = 0
    snd = 0
    size_sum = parent.size()
    size_count = 1
    history = [(0, parent.fitness, size_sum)] if trace else None
    parent_flags = parent.active_flags()

    while parent.fitness > 0 and evaluations < cfg.max_evaluations:
        generation += 1
        if rules.rules:
            if apply_ruleset(parent.ind, rules, rng) is not None:
                snd += 1
                if cfg.check_snd:
                    rescored = _score(parent.ind, target_cols)
                    if rescored.fitness != parent.fitness:
                        raise AssertionError(
                            f"rewrite changed fitness {parent.fitness} -> {rescored.fitness}"
                        )
                # not an evaluation: the rewrite cannot change the table
                parent = _Scored(parent.ind, parent.fitness, active_order(parent.ind))
                parent_flags = parent.active_flags()

        children = []
        for _ in range(lam):
            child = parent.ind.copy()
            _, touched = mutate_genes(child, params, rng)
            if any(parent_flags[v] for v in touched):
                children.append(_score(child, target_cols))
            else:
                # only inactive genes moved: same phenotype, same table
                children.append(_Scored(child, parent.fitness, parent.active))
            evaluations += 1

        survivor = select_survivor(parent, children, rng, key=lambda s: s.fitness)
        if survivor is not parent:
            parent = survivor
            parent_flags = parent.active_flags()
        size = parent.size()
        size_sum += size
        size_count += 1
        if history is not None:
            history.append((generation, parent.fitness, size))

    return RunRecord(
        evaluations=evaluations,
        success=parent.fitness == 0,
        best_fitness=parent.fitness,
        mean_active_size=size_sum / size_count,
        snd_applications=snd,
        generations=generation,
        trace=history,
    )


def _evolve_compiled(cfg: EvolutionConfig, ind: Individual, rng: random.Random, trace: bool) -> RunRecord:
    from . import fast

    target = cfg.target
    n_in, n_out, n_fn = target.num_inputs, target.num_outputs, cfg.nodes
    lam = cfg.lam
    rules = cfg.ruleset
    pats, mask = fast.pack_inputs(n_in)
    packed_target = fast.pack_columns(target.table.columns, n_in)
    fs = np.array([int(k) for k in cfg.function_set], dtype=np.int8)
    state = fast.new_state(rng.getrandbits(64))

    pk, pe = fast.encode(ind)
    n = len(pk)
    active = np.zeros(n, dtype=np.bool_)
    vals = np.empty((n, len(mask)), dtype=np.uint64)
    done = np.empty(n, dtype=np.bool_)

    fit = fast.errors(pk, pe, n_in, n_fn, pats, mask, packed_target, vals, done)
    size = fast.active_flags(pk, pe, n_in, n_fn, active)
    evaluations = 1
    generation = 0
    snd = 0
    size_sum = size
    history = [(0, fit, size)] if trace else None

    codes = fast.rule_codes(rules.rules)
    no_rules = np.empty(0, dtype=np.int64)

    def step(max_generations: int, kernel_rules: np.ndarray) -> tuple[int, int, int, int]:
        return fast.run_generations(
            pk, pe, active, fit, lam, cfg.rate, fs, n_in, n_fn,
            pats, mask, packed_target, state, max_generations, kernel_rules,
        )

    if codes is not None and not trace and not cfg.check_snd:
        budget = max(0, -(-(cfg.max_evaluations - evaluations) // lam))
        fit, gens, s, snd = step(budget, codes)
        generation += gens
        evaluations += lam * gens
        size_sum += s
    else:
        while fit > 0 and evaluations < cfg.max_evaluations:
            if rules.rules:
                if codes is not None:
                    applied = fast.rewrite(pk, pe, n_in, n_fn, codes, active, state) >= 0
                else:
                    # Copy/Collapse have no kernel; rewrite a decoded copy
                    parent = fast.decode(pk, pe, n_in, n_out)
                    applied = apply_ruleset(parent, rules, rng) is not None
                    if applied:
                        pk[:], pe[:] = fast.encode(parent)
                        fast.active_flags(pk, pe, n_in, n_fn, active)
                if applied:
                    snd += 1
                    if cfg.check_snd:
                        after = fast.errors(pk, pe, n_in, n_fn, pats, mask, packed_target, vals, done)
                        if after != fit:
                            raise AssertionError(f"rewrite changed fitness {fit} -> {after}")
            fit, gens, s, _ = step(1, no_rules)
            generation += gens
            evaluations += lam * gens
            size_sum += s
            if history is not None:
                history.append((generation, fit, s))

    return RunRecord(
        evaluations=evaluations,
        success=fit == 0,
        best_fitness=int(fit),
        mean_active_size=size_sum / (generation + 1),
        snd_applications=snd,
        generations=generation,
        trace=history,
    )
