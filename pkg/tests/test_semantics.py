import random

import pytest
from hypothesis import given, strategies as st

from conftest import fig1_individual, random_individual, scalar_eval
from neutraldrift.benchmarks import target_for
from neutraldrift.circuit_graph import AON, AONN, from_spec
from neutraldrift.semantics import (
    TruthTable,
    evaluate,
    fitness,
    input_patterns,
    row_mask,
)


def test_fig1_output0_is_nor_of_the_inputs():
    table = evaluate(fig1_individual())
    assert [table.bit(r, 0) for r in range(4)] == [1, 0, 0, 0]


def test_output_wired_to_input_copies_its_pattern():
    ind = from_spec(3, [("AND", (1, 2))], [0])
    assert evaluate(ind).columns[0] == input_patterns(3)[0]


def test_input_patterns_follow_row_bits():
    for n in range(1, 7):
        pats = input_patterns(n)
        for r in range(1 << n):
            for k in range(n):
                assert (pats[k] >> r) & 1 == (r >> k) & 1
    assert row_mask(3) == 0xFF


def _check_against_scalar(ind):
    table = evaluate(ind)
    for r in range(1 << ind.num_inputs):
        assert table.row(r) == scalar_eval(ind, r)


@pytest.mark.parametrize("seed", range(200))
def test_four_input_individuals_match_scalar_oracle(seed):
    rng = random.Random(seed)
    ind = random_individual(rng, 4, 3, 15, fs=AONN if seed % 3 == 0 else AON)
    _check_against_scalar(ind)


@given(st.integers(5, 8), st.integers(0, 10**9))
def test_wider_individuals_match_scalar_oracle(n_in, seed):
    _check_against_scalar(random_individual(random.Random(seed), n_in, 2, 20))


def test_constant_zero_circuit_against_three_bit_parity():
    # AND(in0, NOT in0) shared by the single output
    ind = from_spec(3, [("NOT", (0,)), ("AND", (0, 3))], [4])
    assert fitness(ind, target_for("3-EP")) == 4


def test_self_target_has_zero_fitness():
    from neutraldrift.benchmarks import TargetSpec

    ind = random_individual(random.Random(3), 3, 2, 10)
    target = TargetSpec("self", 3, 2, evaluate(ind))
    assert fitness(ind, target) == 0


def test_perfect_half_adder_sum_bit():
    # XOR(a, b) = AND(OR(a, b), NOT(AND(a, b)))
    ind = from_spec(
        2,
        [("OR", (0, 1)), ("AND", (0, 1)), ("NOT", (3,)), ("AND", (2, 4))],
        [5],
    )
    assert evaluate(ind).columns == (0b0110,)


def test_errors_on_bad_inputs():
    with pytest.raises(ValueError):
        fitness(fig1_individual(), target_for("1-Add"))
    bad = from_spec(1, [("NOT", (1,))], [1])
    with pytest.raises(ValueError, match="invalid"):
        evaluate(bad)
    with pytest.raises(ValueError, match="cap"):
        evaluate(fig1_individual(), max_inputs=1)


def test_truth_table_checks_column_width():
    with pytest.raises(ValueError):
        TruthTable(1, 1, (0b111,))
    with pytest.raises(ValueError):
        TruthTable(1, 2, (0,))
    t = TruthTable(2, 1, (0b0110,))
    assert t.hamming(TruthTable(2, 1, (0b0000,))) == 2
