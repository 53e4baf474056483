import pytest

from helpers import prog
from wdsu import corpus
from wdsu.difftest import gen_inputs
from wdsu.dsu import (
    COMPATIBLE, INCOMPATIBLE, INCONCLUSIVE, InvalidUpdatePoint, MappingNotFound, UpdatePoint,
    dsu_sim, empirical_backward_compat, hybrid_execute, map_state, update_point_at, update_points,
)
from wdsu.interp import TERMINATED, In, Out, init_config, run

OLD = "long a; input a; output a; input a; output a + 1; output 7;"
NEW = "long a; long b; input a; b := a; output a; input a; output a + 1; output 7;"


def test_update_points_before_each_output():
    pts = update_points(prog(OLD), [1, 2])
    assert [(u.outputs_emitted, u.inputs_consumed) for u in pts] == [(0, 1), (1, 2), (2, 2)]


def test_update_point_out_of_range():
    with pytest.raises(InvalidUpdatePoint):
        update_point_at(prog(OLD), [1, 2], 3)


def test_map_state_replays_inputs():
    p1, p2 = prog(OLD), prog(NEW)
    up = update_point_at(p1, [1, 2], 1)
    m = map_state(p1, p2, up)
    assert m.new_config.state.io == (In(1), Out(1), In(2))
    assert m.new_config.state.vals["b"] == 1


def test_map_state_rejects_non_output_point():
    p1 = prog(OLD)
    c = init_config(p1, [1])
    with pytest.raises(InvalidUpdatePoint):
        map_state(p1, p1, UpdatePoint.of(c))


def test_map_state_new_program_crashes():
    p1 = prog(OLD)
    p2 = prog("long a; input a; output 1 / (a - a); output 7;")
    with pytest.raises(MappingNotFound):
        map_state(p1, p2, update_point_at(p1, [1, 2], 1))


def test_map_state_input_starvation():
    p1 = prog("long a; input a; output a;")
    p2 = prog("long a; input a; input a; output a;")
    with pytest.raises(MappingNotFound) as e:
        map_state(p1, p2, update_point_at(p1, [1], 0))
    assert "starvation" in e.value.reason


def test_hybrid_matches_pure_new():
    p1, p2 = prog(OLD), prog(NEW)
    for j in range(3):
        up = update_point_at(p1, [4, 5], j)
        h = hybrid_execute(p1, p2, up, [4, 5][up.inputs_consumed:])
        assert h.outcome == TERMINATED
        assert h.combined == run(p2, [4, 5]).trace


def test_compatible():
    assert empirical_backward_compat(prog(OLD), prog(NEW), [1, 2]).status == COMPATIBLE


def test_new_program_may_extend_output():
    p1 = prog("long a; input a; output a;")
    p2 = prog("long a; input a; output a; output 9;")
    assert empirical_backward_compat(p1, p2, [3]).status == COMPATIBLE


def test_incompatible_with_index():
    p1 = prog("long a; input a; output a; output a;")
    p2 = prog("long a; input a; output a; output a + 1;")
    r = empirical_backward_compat(p1, p2, [3])
    assert (r.status, r.index) == (INCOMPATIBLE, 2)
    assert r.to_json()["witness"]["old"] == ["in 3", "out 3", "out 3"]


def test_crashing_old_run_is_inconclusive():
    p1 = prog("long a; input a; output 1 / a; output a;")
    p2 = prog("long a; input a; output 5;")
    r = empirical_backward_compat(p1, p2, [0])
    assert r.status == COMPATIBLE  # old produced no output before crashing
    r = empirical_backward_compat(prog("long a; input a; output a; output 1 / a;"), p2, [0])
    assert (r.status, r.reason) == (INCONCLUSIVE, "invalid-old-run")


def test_dsu_sim_report():
    res = dsu_sim(prog(OLD), prog(NEW), [1, 2], 1)
    assert res["mapped"] and res["hybridEqualsPureNew"]
    assert res["backwardCompatible"] == COMPATIBLE
    assert res["combined"] == ["in 1", "out 1", "in 2", "out 3", "out 7"]


@pytest.mark.parametrize("name", ["config", "init", "exit"])
def test_class_pairs_update_midway(name):
    p1 = corpus.load(f"classes/{name}.old.w")
    p2 = corpus.load(f"classes/{name}.new.w")
    init = {"b": 0} if name == "config" else None
    res = dsu_sim(p1, p2, [3, 4], 0, new_init=init)
    assert res["mapped"] and res["hybridEqualsPureNew"] is not False


def test_mapping_fidelity_over_corpus():
    checked = 0
    for _, p1, p2 in corpus.pairs("equiv"):
        for t in range(10):
            inputs = gen_inputs(t, 8)
            for up in update_points(p1, inputs):
                assert not up.old_config.state.crash
                m = map_state(p1, p2, up)
                old_io, new_io = up.old_config.state.io, m.new_config.state.io
                assert [e for e in new_io if e.kind == "in"] == [e for e in old_io if e.kind == "in"]
                assert sum(e.kind == "out" for e in new_io) == sum(e.kind == "out" for e in old_io)
                checked += 1
    assert checked > 100
