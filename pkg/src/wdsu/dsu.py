"""Backward compatibility checks and simulated dynamic updates.

An update may happen just before the old program executes an output.  The
new program's matching configuration is found by replaying it on the input
consumed so far until it has emitted as many outputs and is about to emit
the next one.  Execution then continues in the new program.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .interp import (
    CRASHED, FUEL_EXHAUSTED, Config, init_config, is_terminal,
    out_prefix, run, run_config, step,
)
from .lang import Input, Output, Program, typecheck

COMPATIBLE = "Compatible"
INCOMPATIBLE = "Incompatible"
INCONCLUSIVE = "Inconclusive"


class MappingNotFound(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class InvalidUpdatePoint(Exception):
    pass


def _outs(trace) -> int:
    return sum(1 for e in trace if e.kind == "out")


def _ins(trace) -> tuple:
    return tuple(e.value for e in trace if e.kind == "in")


def _at_output(c: Config) -> bool:
    return not c.state.crash and isinstance(c.rest[0], Output)


@dataclass(frozen=True)
class UpdatePoint:
    old_config: Config
    outputs_emitted: int
    inputs_consumed: int

    @classmethod
    def of(cls, c: Config) -> "UpdatePoint":
        io = c.state.io
        return cls(c, _outs(io), len(_ins(io)))


@dataclass(frozen=True)
class StateMapping:
    new_config: Config
    replay_steps: int


@dataclass(frozen=True)
class HybridTrace:
    prefix: tuple
    suffix: tuple
    outcome: str  # outcome of the new program's continuation

    @property
    def combined(self) -> tuple:
        return self.prefix + self.suffix


@dataclass(frozen=True)
class CompatResult:
    status: str
    old_trace: tuple
    new_trace: tuple
    index: Optional[int] = None  # first differing event, when Incompatible
    reason: Optional[str] = None

    def to_json(self) -> dict:
        d = {"status": self.status,
             "witness": {"old": [str(e) for e in self.old_trace],
                         "new": [str(e) for e in self.new_trace]}}
        if self.index is not None:
            d["index"] = self.index
        if self.reason:
            d["reason"] = self.reason
        return d


def update_points(p: Program, inputs=(), fuel: int = 100000, init=None, limit: Optional[int] = None) -> list:
    """Configurations of a run of ``p`` at which an update may be applied."""
    c = init_config(p, inputs, init=init)
    pts = []
    steps = 0
    while not c.state.crash and steps <= fuel:
        if _at_output(c) and (not pts or _outs(c.state.io) != pts[-1].outputs_emitted):
            pts.append(UpdatePoint.of(c))
            if limit is not None and len(pts) >= limit:
                break
        if is_terminal(c):
            break
        c = step(c)
        steps += 1
    return pts


def update_point_at(p: Program, inputs, j: int, fuel: int = 100000, init=None) -> UpdatePoint:
    """The update point just before the output numbered ``j`` (0 = first output)."""
    pts = update_points(p, inputs, fuel, init, limit=j + 1)
    if len(pts) <= j:
        raise InvalidUpdatePoint(f"the run emits fewer than {j + 1} outputs")
    return pts[j]


def map_state(P1: Program, P2: Program, up: UpdatePoint, fuel: int = 100000, init=None) -> StateMapping:
    """Replay the new program to the configuration matching ``up``."""
    c1 = up.old_config
    if c1.state.crash:
        raise InvalidUpdatePoint("the old configuration is an error configuration")
    if not isinstance(c1.rest[0], Output):
        raise InvalidUpdatePoint("the next statement of the old configuration is not an output")
    consumed = _ins(c1.state.io)
    k = _outs(c1.state.io)
    c = init_config(P2, consumed, init=init)
    steps = 0
    while True:
        st = c.state
        if st.crash:
            raise MappingNotFound(f"the new program crashed during replay ({st.cause})")
        if _outs(st.io) > k:
            raise MappingNotFound("the new program emitted more outputs than the old one")
        if _outs(st.io) == k and isinstance(c.rest[0], Output):
            if _ins(st.io) != consumed:
                raise MappingNotFound("the new program consumed a different input prefix")
            return StateMapping(c, steps)
        if isinstance(c.rest[0], Input) and not st.inputs:
            raise MappingNotFound("input starvation")
        if is_terminal(c):
            raise MappingNotFound("the new program terminated before the update point")
        if steps >= fuel:
            raise MappingNotFound("fuel exhausted")
        c = step(c)
        steps += 1


def hybrid_execute(P1: Program, P2: Program, up: UpdatePoint, remaining=(), fuel: int = 100000,
                   init=None) -> HybridTrace:
    """Old run up to ``up``, then the mapped new configuration to completion."""
    m = map_state(P1, P2, up, fuel, init)
    c = m.new_config
    c = replace(c, state=replace(c.state, inputs=tuple(remaining)))
    start = len(c.state.io)
    r = run_config(c, fuel)
    return HybridTrace(up.old_config.state.io, r.trace[start:], r.outcome)


def empirical_backward_compat(P1: Program, P2: Program, inputs=(), fuel: int = 100000,
                              init1=None, init2=None) -> CompatResult:
    """Whether the new program reproduces the old I/O sequence up to each output."""
    r1 = run(P1, inputs, fuel, init=init1)
    r2 = run(P2, inputs, fuel, init=init2)
    t1, t2 = r1.trace, r2.trace
    want = out_prefix(t1)
    if t2[:len(want)] == want:
        # the old outputs seen so far are all reproduced, even if a run was cut short
        return CompatResult(COMPATIBLE, t1, t2)
    idx = next((i for i, (a, b) in enumerate(zip(want, t2)) if a != b), min(len(want), len(t2)))
    if r1.outcome == CRASHED or r1.undefined_read:
        return CompatResult(INCONCLUSIVE, t1, t2, reason="invalid-old-run")
    if r2.outcome == FUEL_EXHAUSTED and t2 == want[:len(t2)]:
        return CompatResult(INCONCLUSIVE, t1, t2, reason="fuel")
    return CompatResult(INCOMPATIBLE, t1, t2, index=idx)


def dsu_sim(P1: Program, P2: Program, inputs, j: int, fuel: int = 100000, new_init=None) -> dict:
    """Update before output ``j`` (0-based) and report the simulated outcome.

    ``new_init`` seeds the new program's store, e.g. with configuration values.
    """
    typecheck(P1)
    typecheck(P2)
    up = update_point_at(P1, inputs, j, fuel)
    remaining = tuple(inputs)[up.inputs_consumed:]
    out = {"updatePoint": {"outputsEmitted": up.outputs_emitted, "inputsConsumed": up.inputs_consumed}}
    try:
        h = hybrid_execute(P1, P2, up, remaining, fuel, new_init)
    except MappingNotFound as e:
        out.update(mapped=False, reason=e.reason, combined=[], hybridEqualsPureNew=None)
        h = None
    if h is not None:
        pure = run(P2, inputs, fuel, init=new_init)
        same = None
        if h.outcome != FUEL_EXHAUSTED and pure.outcome != FUEL_EXHAUSTED:
            same = h.combined == pure.trace
        out.update(mapped=True, combined=[str(e) for e in h.combined],
                   outcome=h.outcome, hybridEqualsPureNew=same)
    compat = empirical_backward_compat(P1, P2, inputs, fuel, init2=new_init)
    out["backwardCompatible"] = compat.status
    return out
