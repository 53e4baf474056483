import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_program
from wdsu.lang import (
    INT, LONG, SKIP, Assign, Binary, DuplicateIdentifier, EnumEq, If, InputOfPromptType,
    IntLit, LabelLit, Name, Output, ParseError, TypeCheckError, While, fmt_program,
    label_loops, loop_labels, parse_program, type_of, typecheck,
)


def test_parse_simple_program():
    p = parse_program("long a; output a + 2;")
    assert len(p.vars) == 1 and p.vars[0].ty == LONG
    assert p.entry == (Output(Binary("+", Name("a"), IntLit(2))),)


def test_duplicate_enum_name():
    with pytest.raises(DuplicateIdentifier):
        parse_program("enum c {o1}; enum c {o2}; skip;")


def test_duplicate_across_categories():
    with pytest.raises(DuplicateIdentifier):
        parse_program("enum c {x} long x; skip;")


def test_config_figure_new_program():
    p = parse_program("long a; int b; input a; if (b) { output a * 2; } else { output a + 2; }")
    s = p.entry[1]
    assert isinstance(s, If) and len(s.then) == 1 and len(s.else_) == 1
    assert loop_labels(p.entry) == []


def test_if_without_else_gets_skip():
    p = parse_program("long a; if (a) { output 1; }")
    assert p.entry[0].else_ == (SKIP,)


def test_label_and_enum_equality():
    p = parse_program("enum color {o1, o2} enum color a; if (a == o2) { skip; } a := o1;")
    assert p.entry[0].cond == EnumEq("a", "o2")
    assert p.entry[1] == Assign(Name("a"), LabelLit("o1"))


def test_empty_entry_rejected():
    with pytest.raises(ParseError):
        parse_program("long a;")


@pytest.mark.parametrize("src", ["long a output a;", "long a; a = 1;", "long a; output (a;", "long id_IO; skip;"])
def test_parse_errors(src):
    with pytest.raises(ParseError):
        parse_program(src)


def test_comments_ignored():
    p = parse_program("// header\nlong a; // trailing\ninput a;")
    assert len(p.entry) == 1


def test_assign_long_to_int_rejected():
    with pytest.raises(TypeCheckError) as e:
        typecheck(parse_program("int x; long y; x := y;"))
    assert e.value.rule == "Tassign"


def test_array_literal_index_in_bound():
    typecheck(parse_program("int a[3]; a[2] := 1;"))


def test_array_literal_index_out_of_bound():
    with pytest.raises(TypeCheckError) as e:
        typecheck(parse_program("int a[3]; a[5] := 1;"))
    assert e.value.rule == "Tarray2"


def test_input_of_prompt_type():
    with pytest.raises(InputOfPromptType):
        typecheck(parse_program("prompt {hi: 1} pmpt p; input p;"))


def test_int_subsumed_into_long():
    typecheck(parse_program("int x; long y; input x; y := x;"))


def test_literal_types():
    env = typecheck(parse_program("long x; skip;"))
    assert type_of(IntLit(2 ** 31 - 1), env) == INT
    assert type_of(IntLit(2 ** 31), env) == LONG


def test_enum_arithmetic_rejected():
    with pytest.raises(TypeCheckError):
        typecheck(parse_program("enum c {o1} enum c v; long x; x := v + 1;"))


def test_nested_loop_labels():
    p = parse_program("long i; while (i) { while (i) { skip; } } skip;")
    outer = p.entry[0]
    assert outer.label == 0 and outer.body[0].label == 1


def test_no_loops_unchanged():
    p = parse_program("long i; i := 1; output i;")
    assert label_loops(p) == p


def test_relabel_idempotent():
    p = parse_program("long i; while (i) { skip; } while (i) { skip; }")
    q = label_loops(p)
    assert [s.label for s in q.entry] == [s.label for s in p.entry] == [0, 1]


def test_while_label_ignored_in_equality():
    assert While(Name("b"), (SKIP,), label=0) == While(Name("b"), (SKIP,), label=1)


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 9))
def test_print_parse_round_trip(seed):
    p = random_program(seed)
    q = parse_program(fmt_program(p))
    assert q == p
    assert fmt_program(q) == fmt_program(p)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 9))
def test_loop_labels_unique(seed):
    p = label_loops(random_program(seed, depth=5))
    labels = loop_labels(p.entry)
    assert len(labels) == len(set(labels))
