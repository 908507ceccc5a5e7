import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from conftest import chi_square_p, random_individual
from neutraldrift.circuit_graph import AON, AONN, FunctionKind, from_spec, is_valid, validate
from neutraldrift.mutation import (
    MutationParams,
    edge_candidates,
    init_circuit,
    mutate_edge,
    mutate_function,
    mutate_genes,
    point_mutate,
)

AND, OR, NOT = FunctionKind.AND, FunctionKind.OR, FunctionKind.NOT
ALPHA = 0.01


def brute_candidates(ind, edge):
    """Every non-output, non-current target whose rewiring leaves a valid DAG."""
    v, pos = edge
    old = ind.target(edge)
    found = []
    for u in range(ind.first_output):
        if u == old:
            continue
        trial = ind.copy()
        trial.set_target(edge, u)
        if is_valid(trial):
            found.append(u)
    return found


def eight_node_graph():
    # 2 inputs, 5 function nodes, 1 output
    return from_spec(
        2,
        [("AND", (0, 1)), ("NOT", (2,)), ("OR", (2, 0)), ("AND", (3, 4)), ("NOT", (1,))],
        [5],
    )


def test_edge_mutation_noop_when_only_ancestors_remain():
    ind = from_spec(1, [("NOT", (2,)), ("NOT", (0,))], [1])
    before = ind.copy()
    assert edge_candidates(ind, (2, 0)) == []
    assert mutate_edge(ind, (2, 0), random.Random(0)) is False
    assert ind == before


@given(st.integers(0, 10**9), st.data())
def test_candidates_match_brute_force(seed, data):
    ind = random_individual(random.Random(seed), 3, 2, 10)
    edge = data.draw(st.sampled_from(list(ind.iter_edges())))
    assert edge_candidates(ind, edge) == brute_candidates(ind, edge)


def test_edge_mutation_is_uniform_over_candidates():
    ind = eight_node_graph()
    edge = (5, 1)  # AND(3, 4) -> second operand
    cands = brute_candidates(ind, edge)
    assert len(cands) >= 4
    rng = random.Random(7)
    counts = Counter()
    trials = 20_000
    for _ in range(trials):
        child = ind.copy()
        assert mutate_edge(child, edge, rng)
        counts[child.target(edge)] += 1
    assert set(counts) == set(cands)
    expected = [trials / len(cands)] * len(cands)
    assert chi_square_p([counts[c] for c in cands], expected) > ALPHA


def test_function_mutation_same_arity_is_deterministic():
    ind = from_spec(2, [("AND", (0, 1))], [2])
    assert mutate_function(ind, 2, random.Random(0), (AND, OR))
    assert ind.kinds[2] == OR and ind.edges[2] == (0, 1)


def test_function_mutation_forced_new_edge():
    ind = from_spec(1, [("NOT", (0,))], [1])
    assert mutate_function(ind, 1, random.Random(0), (NOT, AND))
    assert ind.kinds[1] == AND and ind.edges[1] == (0, 0)


def test_function_mutation_deletes_either_edge_uniformly():
    ind = from_spec(2, [("AND", (0, 1))], [2])
    rng = random.Random(11)
    counts = Counter()
    for _ in range(10_000):
        child = ind.copy()
        mutate_function(child, 2, rng, (AND, NOT))
        counts[child.edges[2]] += 1
    assert set(counts) == {(0,), (1,)}
    assert chi_square_p([counts[(0,)], counts[(1,)]], [5000, 5000]) > ALPHA


def test_function_mutation_rejects_non_function_nodes():
    ind = from_spec(1, [("NOT", (0,))], [1])
    with pytest.raises(ValueError):
        mutate_function(ind, 0, random.Random(0))
    assert mutate_function(ind, 1, random.Random(0), (NOT,)) is False


def test_init_circuit_shape():
    ind = init_circuit(3, 2, 100, AON, random.Random(5))
    assert ind.num_nodes == 105 and validate(ind) == []


def test_init_single_not_node():
    # the NOT node is forced onto the input; the output may take either node
    seen = set()
    for seed in range(50):
        ind = init_circuit(1, 1, 1, (NOT,), random.Random(seed))
        assert ind.kinds == [None, NOT, None] and ind.edges[1] == (0,)
        seen.add(ind.edges[2])
    assert seen == {(0,), (1,)}


@pytest.mark.parametrize("fs", [AON, AONN])
def test_init_first_kind_is_uniform(fs):
    counts = Counter(init_circuit(3, 2, 10, fs, random.Random(s)).kinds[3] for s in range(10_000))
    assert chi_square_p([counts[k] for k in fs], [10_000 / len(fs)] * len(fs)) > ALPHA


def test_zero_rate_changes_nothing():
    ind = random_individual(random.Random(2), 3, 2, 20)
    before = ind.copy()
    assert point_mutate(ind, MutationParams(0.0), random.Random(0)) == 0
    assert ind == before


def test_unit_rate_visits_every_gene_once():
    ind = from_spec(2, [("AND", (0, 1))], [2])
    assert point_mutate(ind, MutationParams(1.0, (AND, NOT)), random.Random(0)) == 3
    ind = from_spec(2, [("AND", (0, 1))], [2])
    assert point_mutate(ind, MutationParams(1.0, (AND, OR)), random.Random(0)) == 4


def brute_gene_count(ind):
    genes = 0
    for v in range(ind.num_nodes):
        if ind.kinds[v] is not None:
            genes += 1
        genes += len(ind.edges[v])
    return genes


def test_mean_attempts_match_rate_times_genes():
    rate = 0.01
    ind = init_circuit(3, 2, 100, AON, random.Random(9))
    params = MutationParams(rate, AON)
    # relabels happen before the edge pass, shifting the edge count slightly
    arity_shift = sum(
        sum(k.arity - ind.kinds[v].arity for k in AON if k != ind.kinds[v]) / (len(AON) - 1)
        for v in ind.function_nodes()
    )
    expected = rate * brute_gene_count(ind) + rate * rate * arity_shift
    rng = random.Random(1)
    n = 100_000
    total = sum(point_mutate(ind.copy(), params, rng) for _ in range(n))
    se = (brute_gene_count(ind) * rate * (1 - rate) / n) ** 0.5
    assert abs(total / n - expected) < 3 * se


def test_touched_sources_cover_attempts():
    ind = random_individual(random.Random(4), 3, 2, 30)
    attempts, touched = mutate_genes(ind, MutationParams(0.3), random.Random(3))
    assert attempts == len(touched)
    assert all(ind.num_inputs <= v < ind.num_nodes for v in touched)


@given(st.integers(0, 10**9), st.sampled_from([AON, AONN]))
def test_operators_preserve_validity(seed, fs):
    rng = random.Random(seed)
    ind = init_circuit(3, 2, 15, fs, rng)
    for _ in range(30):
        point_mutate(ind, MutationParams(0.1, fs), rng)
        assert validate(ind) == []


def test_bad_params():
    with pytest.raises(ValueError):
        MutationParams(1.5)
    with pytest.raises(ValueError):
        MutationParams(0.1, ())
