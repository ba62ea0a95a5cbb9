import pytest

import corpus
from coolang import build, execute, preexecute
from coolang import records
from coolang.code import CodeType
from coolang.errors import CoolRuntimeError, ReverseUnsatisfied
from coolang.runtime import Interpreter, run_program


def test_corpus_programs_print_their_expected_outputs():
    cases = {
        "add_to": (corpus.ADD_TO, corpus.ADD_TO_OUTPUT),
        "out_scope": (corpus.OUT_SCOPE, corpus.OUT_SCOPE_OUTPUT),
        "quadratic": (
            corpus.QUADRATIC_CONSTRAINT,
            corpus.QUADRATIC_CONSTRAINT_OUTPUT,
        ),
        "apple": (corpus.APPLE_PRICE, corpus.APPLE_PRICE_OUTPUT),
        "sin": (corpus.SIN_APPROX, corpus.SIN_APPROX_OUTPUT),
        "loop": (corpus.LOOP_AND_BRANCH, corpus.LOOP_AND_BRANCH_OUTPUT),
        "classes": (corpus.CLASS_SOLVER, corpus.CLASS_SOLVER_OUTPUT),
    }
    for name, (src, want) in cases.items():
        assert corpus.outputs(src) == want, name


def test_reverse_calls_complete_after_forward_ones_in_one_expression():
    # five one-call statements fused into a single longest expression by
    # dropping the separators after binding; reverse roots must then
    # complete descending after the forward roots finish ascending
    src = """
@(1){ $a - 0 }{ a = ans; }
@g(a){ return: a; }
$x1 - 0;
g(1);
g(2);
$x4 - 0;
$x5 - 0;
"""
    t = build(src)
    preexecute(t)
    stmts = [
        ln
        for ln in t.code.lines()
        if ln.ctype is CodeType.EXPR and ln.scope is None and ln.root
    ]
    assert [ln.bound_reverse for ln in stmts] == [True, False, False, True, True]
    order = [ln.address for ln in stmts]
    for ln in list(t.code.lines()):
        if (
            ln.ctype is CodeType.EXPR_END
            and ln.scope is None
            and order[0] < ln.address < order[-1]
        ):
            t.code.remove(ln.address)
    assert len(t.expression_run(order[0])) == 5
    interp = run_program(t)
    assert [order.index(a) + 1 for a in interp.call_log] == [2, 3, 5, 4, 1]


def test_arguments_pass_by_reference():
    src = """
@set(a){ a = 5; }
new: v = 1;
set(v);
v --> 0;
"""
    assert corpus.outputs(src) == ["5.0"]


def test_a_reverse_call_must_solve_its_pending_argument():
    src = """
@(1){ $a - 0 }{ new: t = ans; }
$q - 0;
"""
    with pytest.raises(ReverseUnsatisfied, match="never solved"):
        corpus.outputs(src)


def test_strings_concatenate_and_print_verbatim():
    assert corpus.outputs('new: s = "con" + "cat";\ns --> 0;\n') == ["concat"]


def test_numbers_print_with_full_precision():
    assert corpus.outputs("new: x = 1 / 3;\nx --> 0;\n") == [repr(1.0 / 3.0)]


def test_numeric_faults_stop_the_run():
    with pytest.raises(CoolRuntimeError, match="division by zero"):
        corpus.outputs("new: a = 1 / 0;\n")
    with pytest.raises(CoolRuntimeError, match="fractional power"):
        corpus.outputs("new: a = (0 - 2) ^ 0.5;\n")


def test_the_interpreter_refuses_raw_code():
    with pytest.raises(CoolRuntimeError, match="preexecuted"):
        Interpreter(build(corpus.ADD_TO))


def test_scope_records_are_destroyed_on_exit():
    for name in ("add_to", "out_scope", "loop_and_branch", "chained_derivation"):
        t = build(corpus.ALL_PROGRAMS[name])
        preexecute(t)
        records.reset_counters()
        run_program(t)
        # everything but the global record comes back down
        assert records.created_count == records.destroyed_count + 1, name


def test_instances_outlive_the_calls_that_touch_them():
    t = build(corpus.CLASS_SOLVER)
    preexecute(t)
    records.reset_counters()
    run_program(t)
    # the global record plus m and its two inherited instances stay live
    assert records.created_count == records.destroyed_count + 4
