import random

import pytest
from hypothesis import given, strategies as st

from conftest import bfs_active, fig1_individual, random_individual
from neutraldrift.circuit_graph import (
    AON,
    AONN,
    FunctionKind,
    active_function_count,
    active_mask,
    active_order,
    active_set,
    ancestors,
    describe,
    from_spec,
    gene_count,
    is_valid,
    neutral_pool,
    validate,
)
from neutraldrift.mutation import init_circuit


def rules_of(ind):
    return {v.rule for v in validate(ind)}


def test_fig1_active_set_is_traced_reachability():
    ind = fig1_individual()
    # outputs reach NOT(OR(i1, i0)) and NOT(AND(NOT(OR), OR)); nothing else
    assert active_set(ind) == {0, 1, 3, 6, 7, 11, 12, 13}
    assert neutral_pool(ind) == {2, 4, 5, 8, 9, 10}


def test_fig1_the_two_named_unreachable_nodes_are_neutral():
    ind = fig1_individual()
    not_left, and_bottom = 5, 2
    assert {not_left, and_bottom} <= neutral_pool(ind)


def test_outputs_wired_to_inputs_leave_every_function_node_neutral():
    ind = from_spec(3, [("AND", (0, 1))] * 5, [0, 2])
    assert active_set(ind) == {0, 2, 8, 9}
    assert neutral_pool(ind) == set(range(3, 8))
    assert active_function_count(ind) == 0


@given(st.integers(0, 10**9))
def test_active_set_matches_bfs_oracle(seed):
    ind = random_individual(random.Random(seed), 3, 1, 10)
    oracle = bfs_active(ind)
    assert active_set(ind) == oracle
    mask = active_mask(ind)
    assert {v for v in range(ind.num_nodes) if mask[v]} == oracle
    assert neutral_pool(ind) == set(ind.function_nodes()) - oracle


@given(st.integers(0, 10**9))
def test_active_order_lists_children_first(seed):
    ind = random_individual(random.Random(seed), 4, 2, 15)
    order = active_order(ind)
    pos = {v: i for i, v in enumerate(order)}
    assert len(pos) == len(order)
    for v in order:
        for t in ind.edges[v]:
            assert pos[t] < pos[v]


def test_fully_active_individual_has_empty_pool():
    ind = from_spec(2, [("AND", (0, 1)), ("NOT", (2,))], [3])
    assert neutral_pool(ind) == set()


@pytest.mark.parametrize("seed", range(20))
def test_init_circuit_is_valid(seed):
    assert validate(init_circuit(3, 2, 30, AONN if seed % 2 else AON, random.Random(seed))) == []


def test_two_cycle_is_an_acyclicity_violation():
    ind = from_spec(1, [("AND", (0, 2)), ("AND", (1, 0))], [1])
    assert "acyclicity" in rules_of(ind)
    assert not is_valid(ind)


def test_self_loop_is_an_acyclicity_violation():
    ind = from_spec(1, [("NOT", (1,))], [1])
    assert rules_of(ind) == {"acyclicity"}


def test_not_with_two_edges_is_an_arity_violation():
    ind = from_spec(2, [("NOT", (0, 1))], [2])
    assert rules_of(ind) == {"arity"}


def test_other_structural_violations():
    dangling = from_spec(1, [("NOT", (7,))], [1])
    assert "dangling" in rules_of(dangling)
    into_output = from_spec(1, [("NOT", (2,))], [1])
    assert "output-target" in rules_of(into_output)
    labelled_input = from_spec(1, [("NOT", (0,))], [1])
    labelled_input.kinds[0] = FunctionKind.AND
    assert "label" in rules_of(labelled_input)
    wide_output = from_spec(1, [("NOT", (0,))], [1])
    wide_output.edges[2] = (0, 1)
    assert "arity" in rules_of(wide_output)
    short = from_spec(1, [("NOT", (0,))], [1])
    short.kinds.pop()
    assert rules_of(short) == {"counts"}


def test_ancestors_include_the_node_itself():
    ind = fig1_individual()
    assert ancestors(ind, 6) == {6, 7, 8, 9, 10, 11, 12, 13}
    assert ancestors(ind, 13) == {13}


def test_gene_count_counts_nodes_and_edges():
    ind = from_spec(2, [("AND", (0, 1)), ("NOT", (2,))], [3, 2])
    assert gene_count(ind) == 2 + 3 + 2


def test_copy_is_independent_and_equal():
    ind = fig1_individual()
    other = ind.copy()
    assert other == ind
    other.set_target((2, 0), 1)
    assert other != ind
    assert ind.edges[2] == (0, 1)


def test_describe_names_every_node():
    text = describe(fig1_individual())
    assert "IN:0" in text and "OUT:1" in text and "NOT" in text
    assert len(text.splitlines()) == 14


def test_from_spec_rejects_unknown_kind():
    with pytest.raises(ValueError):
        from_spec(1, [("XOR", (0, 0))], [1])
