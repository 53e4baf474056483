import random

from hypothesis import given, settings, strategies as st

from helpers import SCALARS, prog, random_program
from wdsu import analysis as A
from wdsu.interp import TERMINATED, run
from wdsu.lang import ID_I, ID_IO, Input, parse_program, typecheck


def entry(src, decls="long x; long y; long z; long i; long a[3];"):
    return parse_program(decls + " " + src).entry


def test_use_def_input():
    s = entry("input x;")
    assert A.use(s) == {ID_I, ID_IO}
    assert A.defs(s) == {ID_I, ID_IO, "x"}


def test_use_def_skip():
    assert A.use(entry("skip;")) == set() and A.defs(entry("skip;")) == set()


def test_use_def_array_assign():
    s = entry("a[i] := y + 1;")
    assert A.use(s) == {"i", "y"} and A.defs(s) == {"a"}


def test_imp_assign():
    assert A.imp(entry("x := y + z;"), {"x"}) == {"y", "z"}


def test_imp_skip():
    assert A.imp(entry("skip;"), {"x"}) == {"x"}


def test_imp_while_matches_unrolling():
    s = entry("while (i) { x := x + i; i := i - 1; }")
    body = s[0].body
    union = frozenset({"x"}) | {"i"}
    for k in range(1, 6):
        union |= A.imp(body * k, {"x", "i"})
    assert A.imp(s, {"x"}) == union == {"x", "i"}


def test_imp_array_weak_update():
    assert A.imp(entry("a[1] := y;"), {"a"}) == {"a", "y"}


def test_cvar_input():
    assert A.cvar(entry("input x;")) == {ID_I}


def test_lvar_no_loop():
    assert A.lvar(entry("output 1;")) == set()


def test_tvar_while():
    assert A.tvar(entry("while (x) { skip; }")) == {"x"}


def test_imp_o():
    assert A.imp_o(entry("x := 1;")) == {ID_IO}
    assert A.imp_o(entry("output a[1] + 2;")) == {ID_IO, "a"}


def test_tvar_o_assign_then_output():
    # x := 1 cannot crash and fixes x, so nothing decides whether the output happens
    assert A.tvar_o(entry("x := 1; output x;")) == set()
    assert A.tvar_o(entry("x := y; output 1 / x;")) == {"y"}


def test_sizes():
    assert A.size(entry("skip;")) == 1
    assert A.size(entry("if (x) { skip; } else { skip; }")) == 3
    assert A.size(entry("while (x) { x := 1; y := 2; }")) == 3


def test_analyze_report_keys():
    p = prog("long a; input a; output a + 2;")
    r = A.analyze(p.entry)
    assert r["ovar"] == sorted({ID_I, ID_IO})
    assert r["size"] == 2


subsets = st.sets(st.sampled_from(SCALARS + ["a", ID_IO]), max_size=3)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 9), st.integers(0, 10 ** 9), subsets)
def test_imp_prefix_law(s1, s2, X):
    S1, S2 = random_program(s1, 3).entry, random_program(s2, 3).entry
    assert A.imp(S1 + S2, X) == A.imp(S1, A.imp(S2, X))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 9), subsets, subsets)
def test_imp_union_law(seed, X, Y):
    S = random_program(seed).entry
    assert A.imp(S, X | Y) == A.imp(S, X) | A.imp(S, Y)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 9), subsets)
def test_imp_keeps_undefined(seed, X):
    S = random_program(seed).entry
    assert X - A.defs(S) <= A.imp(S, X)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 9), subsets)
def test_imp_keeps_untouched_queries(seed, X):
    S = random_program(seed).entry
    if not A.defs(S) & X:
        assert X <= A.imp(S, X)
    assert ID_IO in A.imp_o(S)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_input_law_and_decompositions(seed):
    p = random_program(seed)
    S = p.entry
    env = typecheck(p)
    if any(isinstance(s, Input) for s in walk(S)):
        assert ID_I in A.cvar(S, env) and ID_I in A.defs(S)
    assert A.tvar(S, env) == A.lvar(S) | A.cvar(S, env)
    assert A.ovar(S, env) == A.imp_o(S) | A.tvar_o(S, env)


def walk(ss):
    for s in ss:
        yield s
        for block in ("then", "else_", "body"):
            yield from walk(getattr(s, block, ()))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 9), st.integers(0, 10 ** 9), st.sampled_from(SCALARS + ["a"]))
def test_imp_semantic_soundness(seed, store_seed, x):
    # two stores that agree on Imp(S, {x}) give x the same final value
    p = random_program(seed)
    rng = random.Random(store_seed)
    keep = A.imp(p.entry, {x})
    cells = [v for v in SCALARS] + [("a", k) for k in (1, 2, 3)]
    s1 = {c: rng.randint(-4, 4) for c in cells}
    s2 = {c: s1[c] if (c[0] if isinstance(c, tuple) else c) in keep else rng.randint(-4, 4) for c in cells}
    inputs = [rng.randint(-4, 4) for _ in range(6)]
    r1 = run(p, inputs, fuel=3000, init=s1)
    r2 = run(p, inputs, fuel=3000, init=s2)
    if r1.outcome == r2.outcome == TERMINATED:
        vals1, vals2 = r1.final.state.vals, r2.final.state.vals
        if x == "a":
            assert [vals1[("a", k)] for k in (1, 2, 3)] == [vals2[("a", k)] for k in (1, 2, 3)]
        else:
            assert vals1[x] == vals2[x]
