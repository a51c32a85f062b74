import random
import shlex
import sys
from pathlib import Path

import pytest
from hypothesis import given

from rrmprice.builders import build_model
from rrmprice.instance import synth_instance
from rrmprice.milp import ModelBuilder
from rrmprice.oracle import oracle_optimize
from rrmprice.solver import (ExternalExitError, ExternalSolverConfig, ExternalSpawnError, SolutionParseError,
                             SolveOptions, components, parse_solution_text, resolve_fixed, solve,
                             solve_external, solve_lp)
from rrmprice.stochastic import compute_er, dominance_draws, sample_draws
from strategies import random_instance, small_instances

HIGHS_SCRIPT = Path(__file__).resolve().parents[1] / "scripts" / "highs_solve.py"


def knapsack():
    b = ModelBuilder("test")
    a, c = b.binary("a"), b.binary("b")
    b.add(("cap",), [(a, 2.0), (c, 3.0)], "<=", 4.0)
    b.add_objective(a, 3.0)
    b.add_objective(c, 4.0)
    return b.build()


def test_knapsack():
    sol = solve(knapsack())
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(4.0)
    assert sol.values == pytest.approx([0.0, 1.0])


def test_simple_lp():
    b = ModelBuilder("lp")
    x, y = b.continuous("x", lower=0, upper=1), b.continuous("y", lower=0, upper=1)
    b.add(("c",), [(x, 1), (y, 1)], "<=", 1)
    b.add_objective(x, 1)
    b.add_objective(y, 1)
    assert solve_lp(b.build()).objective == pytest.approx(1.0, rel=1e-9)


def test_infeasible():
    b = ModelBuilder("lp")
    x = b.continuous("x", lower=0, upper=10)
    b.add(("lo",), [(x, 1)], ">=", 2)
    b.add(("hi",), [(x, 1)], "<=", 1)
    b.add_objective(x, 1)
    m = b.build()
    assert solve_lp(m).status == "infeasible"
    assert solve(m).status == "infeasible"


def test_unbounded():
    b = ModelBuilder("lp")
    x = b.continuous("x", lower=0)
    b.add_objective(x, 1)
    assert solve_lp(b.build()).status == "unbounded"


@pytest.mark.parametrize("opts", [
    dict(time_limit_s=0), dict(abs_gap=-1), dict(node_limit=0), dict(threads=0),
    dict(branch_rule="random"), dict(node_order="breadth")])
def test_invalid_options(opts):
    with pytest.raises(ValueError):
        SolveOptions(**opts)


def test_relaxation_bounds_milp():
    inst = synth_instance(1)
    m = build_model("rrm-uncap", inst, sample_draws(inst))
    assert solve_lp(m).objective >= solve(m).objective - 1e-9


@pytest.mark.parametrize("rule", ["pseudo-cost", "most-fractional"])
@pytest.mark.parametrize("order", ["best-bound", "depth-first"])
def test_search_strategies_agree(rule, order):
    inst = random_instance(random.Random(11), 3, 2, 3)
    m = build_model("rrm-uncap", inst, sample_draws(inst))
    ref = solve(m).objective
    assert solve(m, SolveOptions(branch_rule=rule, node_order=order)).objective == pytest.approx(ref, abs=1e-6)


@given(small_instances())
def test_incumbent_is_integral_and_reproducible(inst):
    m = build_model("rrm-uncap", inst, sample_draws(inst))
    sol = solve(m)
    assert sol.status == "optimal"
    for v in m.variables:
        if v.kind == "binary":
            assert abs(sol.values[v.id] - round(sol.values[v.id])) <= 1e-6
    fixed = resolve_fixed(m, sol.values)
    assert fixed.objective == pytest.approx(sol.objective, rel=1e-9, abs=1e-9)


def test_thread_count_does_not_change_result():
    inst = random_instance(random.Random(7), 3, 2, 3, capacities=(1, 2))
    m = build_model("rrm-cap", inst, sample_draws(inst))
    a, b = solve(m, SolveOptions(threads=1)), solve(m, SolveOptions(threads=4))
    assert a.objective == b.objective and a.values == b.values


def test_uncapacitated_model_decomposes_per_customer():
    inst = synth_instance(3)
    assert len(components(build_model("rrm-uncap", inst, sample_draws(inst)))) == 3


def test_node_limit_reports_status():
    inst = synth_instance(3, scenario_count=3)
    sol = solve(build_model("rrm-uncap", inst, sample_draws(inst)), SolveOptions(node_limit=1))
    assert sol.status in ("optimal", "node-limit")


def test_dominance_fixture_ten_customers():
    inst = synth_instance(10)
    d = dominance_draws(inst)
    assert solve(build_model("rrm-uncap", inst, d)).objective == pytest.approx(45.0, abs=1e-6)


def test_capacitated_pair_matches_oracle():
    inst = synth_instance(2, (1, None), seed=3, scenario_count=2)
    d = sample_draws(inst)
    er = compute_er(inst, d)
    want = oracle_optimize(inst, d, er, "cap")[0]
    assert solve(build_model("rrm-cap", inst, d, er)).objective == pytest.approx(want, abs=1e-6)


@pytest.mark.parametrize("text, dialect, want", [
    ("a 1\nb 0\n", "pairs", ("optimal", None, {"a": 1.0, "b": 0.0})),
    ("objective 4\na 0\nb 1\n", "objective-pairs", ("optimal", 4.0, {"a": 0.0, "b": 1.0})),
    ("status infeasible\n", "auto", ("infeasible", None, {})),
])
def test_solution_dialects(text, dialect, want):
    assert parse_solution_text(text, dialect) == want


@pytest.mark.parametrize("text, dialect", [("a 1 2\n", "pairs"), ("a x\n", "auto"), ("a 1\n", "objective-pairs")])
def test_solution_parse_errors(text, dialect):
    with pytest.raises(SolutionParseError):
        parse_solution_text(text, dialect)


def _writer(tmp_path, body):
    script = tmp_path / "fake_solver.py"
    script.write_text("import sys\n" + body)
    return f"{shlex.quote(sys.executable)} {shlex.quote(str(script))} {{model}} {{solution}}"


def test_external_pairs_dialect(tmp_path):
    cmd = _writer(tmp_path, "open(sys.argv[2], 'w').write('a 0\\nb 1\\n')\n")
    sol = solve_external(knapsack(), ExternalSolverConfig(cmd, "pairs"))
    assert sol.objective == pytest.approx(4.0) and sol.stats["external"]


def test_external_objective_mismatch(tmp_path):
    cmd = _writer(tmp_path, "open(sys.argv[2], 'w').write('objective 7\\na 0\\nb 1\\n')\n")
    with pytest.raises(SolutionParseError):
        solve_external(knapsack(), ExternalSolverConfig(cmd, "objective-pairs"))


def test_external_missing_binary():
    with pytest.raises(ExternalSpawnError, match="no-such-solver-xyz"):
        solve_external(knapsack(), ExternalSolverConfig("no-such-solver-xyz {model} {solution}"))


def test_external_nonzero_exit(tmp_path):
    cmd = _writer(tmp_path, "sys.stderr.write('boom')\nsys.exit(3)\n")
    with pytest.raises(ExternalExitError) as ei:
        solve_external(knapsack(), ExternalSolverConfig(cmd))
    assert ei.value.code == 3


def test_external_missing_solution_file(tmp_path):
    cmd = _writer(tmp_path, "pass\n")
    with pytest.raises(SolutionParseError):
        solve_external(knapsack(), ExternalSolverConfig(cmd))


def test_empty_command_rejected():
    with pytest.raises(ValueError):
        ExternalSolverConfig("  ")


def test_external_highs_knapsack():
    pytest.importorskip("highspy")
    cmd = f"{shlex.quote(sys.executable)} {shlex.quote(str(HIGHS_SCRIPT))} {{model}} {{solution}}"
    assert solve_external(knapsack(), ExternalSolverConfig(cmd)).objective == pytest.approx(4.0)
