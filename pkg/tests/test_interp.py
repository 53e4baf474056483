import os
import glob

import pytest
from hypothesis import given, settings, strategies as st

from helpers import prog, random_program
from wdsu import corpus
from wdsu.interp import (
    CRASHED, DIV_BY_ZERO, EMPTY_INPUT, FUEL_EXHAUSTED, INDEX_OOB, TERMINATED,
    UNDEFINED_READ, VALUE_MISMATCH, Config, EvalError, In, Out, Undef, eval_expr,
    fmt_trace, init_config, is_terminal, out_prefix, parse_trace, run, snapshot, step, wrap64,
)
from wdsu.lang import INT, Binary, EnumEq, IntLit, Name, Output, parse_program

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def _state(src, inputs=(), init=None):
    return init_config(prog(src), inputs, init=init).state


def test_eval_guard_error():
    st_ = _state("long a; skip;", init={"a": 5})
    e = Binary("/", IntLit(1), Binary("-", Name("a"), IntLit(5)))
    v, _ = eval_expr(e, st_)
    assert isinstance(v, EvalError) and v.cause == DIV_BY_ZERO


def test_eval_enum_equality():
    st_ = _state("enum c {l1, l2} enum c v; skip;", init={"v": "l2"})
    assert eval_expr(EnumEq("v", "l2"), st_)[0] == 1
    assert eval_expr(EnumEq("v", "l1"), st_)[0] == 0


def test_eval_wraparound():
    st_ = _state("long x; skip;", init={"x": 2 ** 63 - 1})
    assert eval_expr(Binary("+", Name("x"), IntLit(1)), st_) == (-2 ** 63, 1)


def test_wrap64_oracle():
    # two's complement reduction written independently of the interpreter
    for v in (2 ** 63, -2 ** 63 - 1, 3 * 2 ** 64 + 5, 0, -1):
        expect = ((v + 2 ** 63) % 2 ** 64) - 2 ** 63
        assert wrap64(v) == (expect, int(expect != v))


def test_input_step():
    c = init_config(prog("long x; input x;"), [41])
    c2 = step(c)
    assert is_terminal(c2)
    assert c2.state.vals["x"] == 41 and c2.state.io == (In(41),) and c2.state.inputs == ()


def test_prompt_output_steps():
    c = init_config(prog("prompt {o1: 10, o2: 20} output o2;"))
    c1 = step(c)
    assert c1.rest[0] == Output(IntLit(20), "o2") and c1.state.io == ()
    c2 = step(c1)
    assert c2.state.io == (Out(20, "o2"),)
    assert str(c2.state.io[0]) == "out 20 #pmpt:o2"


def test_crash_is_fixpoint():
    r = run(prog("output 1 / 0;"))
    assert step(r.final) == r.final


def test_initial_store():
    c = init_config(prog("int a[2]; long w; while (w) { skip; } while (w) { skip; }"))
    assert c.state.vals[("a", 1)] == Undef(INT) and c.state.vals[("a", 2)] == Undef(INT)
    assert c.state.loops == {0: 0, 1: 0}
    assert c.state.inputs == ()


def test_run_input_output():
    r = run(prog("long x; input x; output x + 1;"), [41])
    assert r.outcome == TERMINATED
    assert r.trace == (In(41), Out(42))


def test_run_div_by_zero():
    r = run(prog("output 1 / 0;"))
    assert (r.outcome, r.cause, r.trace) == (CRASHED, DIV_BY_ZERO, ())


def test_run_fuel():
    r = run(prog("while (1) { skip; }"), fuel=100)
    assert r.outcome == FUEL_EXHAUSTED and r.steps == 100


@pytest.mark.parametrize("src,inputs,cause", [
    ("long i; long t[2]; input i; t[i] := 1;", [3], INDEX_OOB),
    ("long i; long t[2]; input i; output t[i];", [0], INDEX_OOB),
    ("int x; input x;", [2 ** 31], VALUE_MISMATCH),
    ("enum c {l1} enum c v; input v;", [2], VALUE_MISMATCH),
    ("long x; input x; input x;", [1], EMPTY_INPUT),
    ("long x; output x;", [], UNDEFINED_READ),
])
def test_crash_causes(src, inputs, cause):
    r = run(prog(src), inputs)
    assert (r.outcome, r.cause) == (CRASHED, cause)


def test_undefined_read_flag():
    r = run(prog("long x; output x;"))
    assert r.undefined_read


def test_division_truncates():
    r = run(prog("long a; input a; output a / 2; output a % 3; output 7 % -3;"), [-7])
    assert [e.value for e in r.trace if e.kind == "out"] == [-3, -1, 1]


def test_out_prefix():
    assert out_prefix((In(1), Out(2), In(3))) == (In(1), Out(2))
    assert out_prefix((In(1), In(2))) == ()
    assert out_prefix(()) == ()


def test_trace_text_round_trip():
    t = (In(1), Out(2), Out(20, "o2"))
    assert parse_trace(fmt_trace(t)) == t


def test_run_json():
    d = run(prog("long x; input x; output x;"), [3]).to_json()
    assert d == {"outcome": "Terminated", "steps": 4, "trace": ["in 3", "out 3"], "undefinedRead": False}


def _golden_cases():
    return sorted(glob.glob(os.path.join(GOLDEN, "*.trace")))


@pytest.mark.parametrize("path", _golden_cases(), ids=os.path.basename)
def test_golden_trace(path):
    name = os.path.basename(path)[:-len(".trace")]
    src = corpus.source(f"golden/{name}.w")
    inputs = [int(t) for t in src.splitlines()[0].split(":", 1)[1].split()]
    c = init_config(parse_program(src), inputs)
    got = [snapshot(c)]
    while not c.state.crash and not is_terminal(c):
        c = step(c)
        got.append(snapshot(c))
    with open(path) as f:
        want = f.read().splitlines()
    assert got == want


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 9), st.lists(st.integers(-8, 8), max_size=6))
def test_step_invariants(seed, inputs):
    p = random_program(seed)
    c: Config = init_config(p, inputs)
    for _ in range(300):
        if is_terminal(c):
            break
        n = step(c)
        assert n.state.crash >= c.state.crash
        assert n.state.overflow >= c.state.overflow
        assert len(n.state.io) - len(c.state.io) in (0, 1)
        assert n.state.io[:len(c.state.io)] == c.state.io
        for k, v in n.state.loops.items():
            assert v <= c.state.loops[k] + 1
        if c.state.crash:
            assert n == c
            break
        c = n


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 9), st.lists(st.integers(-8, 8), max_size=6))
def test_determinism_and_input_consumption(seed, inputs):
    p = random_program(seed)
    a, b = run(p, inputs, fuel=500), run(p, inputs, fuel=500)
    assert a == b
    c = init_config(p, inputs)
    for _ in range(200):
        ins = sum(1 for e in c.state.io if e.kind == "in")
        assert ins == len(inputs) - len(c.state.inputs)
        if is_terminal(c) or c.state.crash:
            break
        c = step(c)
