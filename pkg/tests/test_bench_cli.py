import csv
import io
import logging

import pytest

from neutraldrift.bench_cli import (
    CSV_FIELDS,
    ExperimentPlan,
    RunRow,
    format_summary,
    main,
    read_csv,
    rows_to_text,
    run_experiment,
    summarize,
    write_csv,
)
from neutraldrift.benchmarks import parse_truth_table_file, target_for

HEADER = "problem,ruleset,function_set,nodes,lambda,rate,seed,evaluations,success,final_fitness,mean_active_size,snd_applications"


def row(ruleset, evaluations, seed=0, problem="1-Add", nodes=100, fs="aon"):
    return RunRow(problem, ruleset, fs, nodes, 4, 0.01, seed, evaluations, True, 0, 40.0, 0)


def test_header_is_exact():
    assert ",".join(CSV_FIELDS) == HEADER
    buf = io.StringIO()
    write_csv([], buf)
    assert buf.getvalue().strip() == HEADER


def test_two_runs_give_two_rows_with_consecutive_seeds():
    plan = ExperimentPlan(["1-Add"], ["none"], runs=2, base_seed=10, max_evaluations=2001)
    rows, traces = run_experiment(plan)
    assert [r.seed for r in rows] == [10, 11]
    assert traces == {}


def test_replaying_a_row_reproduces_it():
    plan = ExperimentPlan(["3-EP"], ["none", "dmn"], runs=2, nodes=[50, 100], base_seed=3)
    rows, _ = run_experiment(plan)
    assert len(rows) == 8
    assert rows == sorted(rows, key=RunRow.sort_key)
    target = rows[5]
    replay, _ = run_experiment(
        ExperimentPlan([target.problem], [target.ruleset], runs=1, nodes=[target.nodes], base_seed=target.seed)
    )
    assert replay == [target]


def test_parallel_run_equals_serial_run():
    plan = ExperimentPlan(["3-EP"], ["none", "dm"], runs=3, max_evaluations=4001)
    assert run_experiment(plan, workers=2)[0] == run_experiment(plan)[0]


def test_csv_round_trip():
    rows = [row("none", 10, 0), row("dmn", 7, 1)]
    assert read_csv(io.StringIO(rows_to_text(rows))) == rows
    with pytest.raises(ValueError):
        read_csv(io.StringIO("a,b\n1,2\n"))


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan(["1-Add"], ["none"], runs=0)
    with pytest.raises(ValueError):
        ExperimentPlan(["9-Add"], ["none"])
    with pytest.raises(ValueError):
        ExperimentPlan(["1-Add"], ["wat"])
    with pytest.raises(ValueError):
        ExperimentPlan(["1-Add"], ["none"], function_set="nand")


def test_cell_against_itself_has_p_one_and_no_a():
    rows = [row("none", e, i) for i, e in enumerate([5, 9, 2, 7])]
    twin = [RunRow(**{**r.__dict__, "ruleset": "dmn"}) for r in rows]
    cells = {c.ruleset: c for c in summarize(rows + twin)}
    assert cells["dmn"].p_value == 1.0 and cells["dmn"].effect_a is None
    assert cells["none"].p_value is None


def test_small_cells_use_exact_p():
    rows = [row("dmn", e, i) for i, e in enumerate([1, 2, 3])]
    rows += [row("none", e, i) for i, e in enumerate([4, 5, 6])]
    cell = next(c for c in summarize(rows) if c.ruleset == "dmn")
    assert cell.p_value == pytest.approx(0.1) and cell.effect_a is None
    assert (cell.median, cell.runs, cell.success_rate) == (2, 3, 1.0)


def test_dominating_cell_reports_a_of_one():
    rows = [row("dmn", 100 + i, i) for i in range(10)]
    rows += [row("none", 1000 + i, i) for i in range(10)]
    cell = next(c for c in summarize(rows) if c.ruleset == "dmn")
    assert cell.p_value < 0.05 and cell.effect_a == 1.0
    text = format_summary(summarize(rows))
    assert "DMN" in text and "1.00" in text


def test_baseline_must_share_nodes_and_function_set():
    rows = [row("dmn", 100 + i, i) for i in range(10)]
    rows += [row("none", 1000 + i, i, nodes=50) for i in range(10)]
    rows += [row("none", 1000 + i, i, fs="aonn") for i in range(10)]
    cell = next(c for c in summarize(rows) if c.ruleset == "dmn")
    assert cell.p_value is None


def test_missing_cells_are_warned_about(caplog):
    with caplog.at_level(logging.WARNING):
        summarize([row("none", 3)], expected_cells=[("1-Add", "dmn", "aon", 100)])
    assert "no rows" in caplog.text


def test_cli_writes_csv(tmp_path, capsys):
    out = tmp_path / "runs.csv"
    assert main(["--problem", "3-EP", "--ruleset", "dmn", "--runs", "2", "--seed", "5", "--out", str(out), "--nodes", "50,60"]) == 0
    with open(out) as fh:
        recs = list(csv.DictReader(fh))
    assert len(recs) == 4
    assert {r["nodes"] for r in recs} == {"50", "60"}
    assert {r["seed"] for r in recs} == {"5", "6"}
    assert capsys.readouterr().out == ""


def test_cli_summary_and_trace(tmp_path, capsys):
    out = tmp_path / "runs.csv"
    main(["--problem", "3-EP", "--ruleset", "none,dm", "--runs", "3", "--out", str(out), "--summary", "--trace",
          "--max-evals", "3001"])
    text = capsys.readouterr().out
    assert "ME" in text and "NONE" in text and "DM" in text
    trace = (tmp_path / "runs.csv.trace.csv").read_text().splitlines()
    assert trace[0] == "problem,ruleset,function_set,nodes,seed,generation,fitness,active_size"
    assert len(trace) > 6


def test_cli_stdout_and_options(capsys):
    main(["--problem", "3-EP", "--runs", "1", "--function-set", "aonn", "--lambda", "2", "--rate", "0.02"])
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == HEADER
    fields = dict(zip(CSV_FIELDS, lines[1].split(",")))
    assert (fields["function_set"], fields["lambda"], fields["rate"]) == ("aonn", "2", "0.02")
    assert (int(fields["evaluations"]) - 1) % 2 == 0


def test_cli_dump_target(capsys):
    main(["--dump-target", "2-Mul"])
    assert parse_truth_table_file(capsys.readouterr().out) == target_for("2-Mul")


def test_cli_rejects_bad_input():
    with pytest.raises(SystemExit):
        main(["--problem", "nope", "--runs", "1"])
    with pytest.raises(SystemExit):
        main(["--trace"])
    with pytest.raises(SystemExit):
        main(["--dump-target", "nope"])
