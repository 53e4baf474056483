"""Differential testing of program pairs on random inputs.

A campaign runs the old and new programs on the same random input
sequences, applies the runtime monitors derived from a class report's
assumptions and classifies every trial.  ``mutate_pair`` produces new
programs of the shapes the checkers are meant to accept.
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Optional

from . import analysis as A
from .interp import CRASHED, FUEL_EXHAUSTED, Undef, out_prefix, run
from .lang import (
    ID_IO, INT_MAX, INT_MIN, INT, LONG, PMPT, SKIP, Assign, Binary, Elem, If, IntLit,
    LabelLit, Name, Program, While, is_simple, label_loops, typecheck,
)

EQUAL = "Equal"
PREFIX = "PrefixOld⊑New"
DIVERGED = "Diverged"
INCONCLUSIVE = "Inconclusive"

MUTATIONS = ("reorder", "duplicate-skip", "if-motion", "trailing-skip", "prepend-guard", "prepend-init")


class NoApplicableSite(Exception):
    pass


def gen_inputs(seed, length: int, lo: int = -8, hi: int = 8) -> list:
    """``length`` integers drawn uniformly from [lo, hi], fixed by ``seed``."""
    if length < 0:
        raise ValueError("length must be non-negative")
    rng = random.Random(seed)
    return [rng.randint(lo, hi) for _ in range(length)]


# ---------------------------------------------------------------- trials

@dataclass
class TrialReport:
    seed: object
    inputs: list
    old: object  # RunResult
    new: object
    comparison: str
    index: Optional[int] = None
    reason: Optional[str] = None
    violations: list = field(default_factory=list)

    def label(self) -> str:
        if self.comparison == DIVERGED:
            return f"{DIVERGED}({self.index})"
        if self.comparison == INCONCLUSIVE:
            return f"{INCONCLUSIVE}({self.reason})"
        return self.comparison

    def to_json(self) -> dict:
        d = {"seed": self.seed, "inputs": self.inputs, "comparison": self.comparison,
             "old": self.old.to_json(), "new": self.new.to_json(),
             "assumptionViolations": self.violations}
        if self.index is not None:
            d["index"] = self.index
        if self.reason:
            d["reason"] = self.reason
        return d


def events_equiv(a, b, prompt: bool = False) -> bool:
    if not prompt or a.kind != "out" or b.kind != "out":
        return a == b
    if a.origin or b.origin:
        return a.origin == b.origin
    return a.value == b.value


def _first_diff(t1, t2, prompt: bool) -> Optional[int]:
    for i, (a, b) in enumerate(zip(t1, t2)):
        if not events_equiv(a, b, prompt):
            return i
    if len(t1) != len(t2):
        return min(len(t1), len(t2))
    return None


def _is_prefix(t1, t2, prompt: bool) -> bool:
    return len(t1) <= len(t2) and _first_diff(t1, t2[:len(t1)], prompt) is None


def compare_runs(r1, r2, violations=(), mode: str = "compat", prompt: bool = False) -> tuple:
    """(comparison, index, reason) for one pair of runs.

    In ``compat`` mode a crashed old run is not a valid execution and a new
    run may extend the old outputs.  In ``equiv`` mode only an undefined read
    invalidates the old run and the outputs must agree exactly.
    """
    o1, o2 = out_prefix(r1.trace), out_prefix(r2.trace)
    same = _first_diff(o1, o2, prompt) is None
    invalid = r1.undefined_read or (mode == "compat" and r1.outcome == CRASHED)
    if invalid:
        return (EQUAL, None, None) if same else (INCONCLUSIVE, None, "invalid-old-run")
    if violations:
        return INCONCLUSIVE, None, "assumption-violated"
    fuel = FUEL_EXHAUSTED in (r1.outcome, r2.outcome)
    if same and not fuel:
        return EQUAL, None, None
    if fuel:
        if _is_prefix(o1, o2, prompt) or _is_prefix(o2, o1, prompt):
            return INCONCLUSIVE, None, "fuel"
        return DIVERGED, _first_diff(o1, o2, prompt), None
    if mode == "compat" and _is_prefix(o1, o2, prompt):
        return PREFIX, None, None
    return DIVERGED, _first_diff(o1, o2, prompt), None


# ---------------------------------------------------------------- monitors

def _name(a) -> str:
    return a if isinstance(a, str) else a.name


class _Monitor:
    """Collects assumption violations observed while the new program runs."""

    def __init__(self, assumptions, new_env, new_init=None, init_stmts=()):
        self.by_name = {_name(a): a for a in assumptions}
        self.env = new_env
        self.new_init = new_init or {}
        self.init_stmts = tuple(init_stmts)
        self.hits = []
        self._weak = {}
        a = self.by_name.get("overflow-weakened")
        if a is not None and not isinstance(a, str):
            for name, ty, size in a.param("old", ()):
                self._weak[name] = (ty, size)

    def _flag(self, name):
        if name not in self.hits:
            self.hits.append(name)

    def before_run(self):
        a = self.by_name.get("enum-initial-not-in-E")
        if a is not None and not isinstance(a, str):
            E = a.param("E", frozenset())
            if any(isinstance(v, str) and v in E for v in self.new_init.values()):
                self._flag("enum-initial-not-in-E")

    def on_step(self, c, nxt):
        head = c.rest[0]
        if nxt.state.crash and not c.state.crash:
            if "guard-never-fires" in self.by_name and isinstance(head, If) \
                    and head.then == (SKIP,) and head.else_ == (SKIP,):
                self._flag("guard-never-fires")
            if "init-does-not-crash" in self.by_name and not c.state.io \
                    and head in self.init_stmts:
                self._flag("init-does-not-crash")
        if self._weak and nxt.state.vals is not c.state.vals:
            for name, (ty, size) in self._weak.items():
                if size:
                    for i in range(size + 1, self.env.vars[name].size + 1):
                        if not isinstance(nxt.state.vals[(name, i)], Undef):
                            self._flag("overflow-weakened")
                else:
                    v = nxt.state.vals[name]
                    if isinstance(v, int) and ty == str(INT) and not INT_MIN <= v <= INT_MAX:
                        self._flag("overflow-weakened")

    def after_run(self, r):
        a = self.by_name.get("enum-input-in-E")
        if a is not None and not isinstance(a, str):
            E = a.param("E", frozenset())
            if any(e.kind == "in" and e.label in E for e in r.trace):
                self._flag("enum-input-in-E")


def run_trial(P1: Program, P2: Program, inputs, fuel: int = 100000, assumptions=(), seed=None,
              mode: str = "compat", new_init=None, old_init=None) -> TrialReport:
    env2 = typecheck(P2)
    init_stmts = ()
    if "init-does-not-crash" in {_name(a) for a in assumptions}:
        init_stmts = P2.entry[:max(0, len(P2.entry) - len(P1.entry))]
    mon = _Monitor(assumptions, env2, new_init, init_stmts)
    mon.before_run()
    r1 = run(P1, inputs, fuel, init=old_init)
    r2 = run(P2, inputs, fuel, env=env2, init=new_init, on_step=mon.on_step)
    mon.after_run(r2)
    prompt = "prompt-modulo" in {_name(a) for a in assumptions}
    comp, idx, reason = compare_runs(r1, r2, mon.hits, mode, prompt)
    return TrialReport(seed, list(inputs), r1, r2, comp, idx, reason, list(mon.hits))


@dataclass
class CampaignResult:
    trials: list
    counts: Counter

    @property
    def diverged(self) -> int:
        return self.counts.get(DIVERGED, 0)

    def to_json(self, verbose: bool = False) -> dict:
        d = {"trials": len(self.trials), "counts": dict(self.counts),
             "inconclusive": dict(Counter(t.reason for t in self.trials if t.comparison == INCONCLUSIVE))}
        div = [t for t in self.trials if t.comparison == DIVERGED]
        if div:
            d["firstDiverged"] = div[0].to_json()
        if verbose:
            d["reports"] = [t.to_json() for t in self.trials]
        return d


def run_campaign(P1: Program, P2: Program, trials: int = 100, fuel: int = 100000, assumptions=(),
                 seed: int = 0, mode: str = "compat", new_init=None, old_init=None,
                 length: int = 8, lo: int = -8, hi: int = 8) -> CampaignResult:
    """Run ``trials`` paired executions; reproducible from (seed, trials, fuel)."""
    if trials < 1:
        raise ValueError("trials must be positive")
    reports = []
    for t in range(trials):
        s = seed * 1_000_003 + t
        inputs = gen_inputs(s, length, lo, hi)
        reports.append(run_trial(P1, P2, inputs, fuel, assumptions, s, mode, new_init, old_init))
    return CampaignResult(reports, Counter(r.comparison for r in reports))


# ---------------------------------------------------------------- mutations

def _blocks(ss, path=()):
    """Every statement block with the path leading to it."""
    yield path, ss
    for i, s in enumerate(ss):
        if isinstance(s, If):
            yield from _blocks(s.then, path + ((i, "then"),))
            yield from _blocks(s.else_, path + ((i, "else_"),))
        elif isinstance(s, While):
            yield from _blocks(s.body, path + ((i, "body"),))


def _put(ss, path, block):
    if not path:
        return tuple(block)
    (i, fld), rest = path[0], path[1:]
    s = ss[i]
    s = replace(s, **{fld: _put(getattr(s, fld), rest, block)})
    return ss[:i] + (s,) + ss[i + 1:]


def _independent(a, b) -> bool:
    da, db = A.defs((a,)), A.defs((b,))
    return not (da & A.use((b,)) or db & A.use((a,)) or da & db)


def _scalar_numeric(env, name) -> bool:
    d = env.vars.get(name)
    return d is not None and d.size is None and d.ty in (INT, LONG)


def _with_entry(p: Program, entry) -> Program:
    q = label_loops(replace(p, entry=tuple(entry)))
    typecheck(q)
    return q


def mutate_pair(p: Program, kind: str, seed=0) -> Program:
    """A mutant of ``p`` with the named shape."""
    env = typecheck(p)
    rng = random.Random(seed)
    S = p.entry
    if kind == "trailing-skip":
        return _with_entry(p, S + (SKIP,))
    if kind == "prepend-init":
        imported = A.imp(S, {ID_IO})
        cands = []
        for d in p.vars:
            if d.name not in imported or d.ty == PMPT:
                continue
            lv = Name(d.name) if d.size is None else Elem(d.name, rng.randint(1, d.size))
            if d.ty in (INT, LONG):
                cands.append(Assign(lv, IntLit(rng.randint(-8, 8))))
            else:
                cands.append(Assign(lv, LabelLit(env.enums[d.ty.name][0])))
        if not cands:
            raise NoApplicableSite("no imported variable to initialise")
        return _with_entry(p, (rng.choice(cands),) + S)
    if kind == "prepend-guard":
        # a guard before statement i may read any scalar already defined at i
        sites = [(0, IntLit(1))]
        for i in range(1, len(S) + 1):
            for v in sorted(A.defs(S[:i])):
                if _scalar_numeric(env, v):
                    k = rng.randint(-8, 8)
                    sites.append((i, Name(v)))
                    sites.append((i, Binary("/", IntLit(1), Binary("-", Name(v), IntLit(k)))))
        i, e = rng.choice(sites[1:] or sites)
        return _with_entry(p, S[:i] + (If(e, (SKIP,), (SKIP,)),) + S[i:])

    sites = []
    for path, ss in _blocks(S):
        for i, s in enumerate(ss):
            if kind == "reorder" and i + 1 < len(ss):
                t = ss[i + 1]
                if is_simple(s) and is_simple(t) and s != t and _independent(s, t):
                    sites.append((path, ss[:i] + (t, s) + ss[i + 2:]))
            elif kind == "duplicate-skip":
                if isinstance(s, Assign) and not (A.defs((s,)) & A.use((s,))):
                    sites.append((path, ss[:i + 1] + (s,) + ss[i + 1:]))
            elif kind == "if-motion" and i + 1 < len(ss):
                t = ss[i + 1]
                if is_simple(s) and isinstance(t, If) and not (A.defs((s,)) & A.use_expr(t.cond)):
                    moved = If(t.cond, (s,) + t.then, (s,) + t.else_)
                    sites.append((path, ss[:i] + (moved,) + ss[i + 2:]))
    if kind not in MUTATIONS:
        raise ValueError(f"unknown mutation {kind!r}")
    if not sites:
        raise NoApplicableSite(f"no site for {kind}")
    path, block = rng.choice(sites)
    return _with_entry(p, _put(S, path, block))


def mutants(p: Program, seed=0, kinds=MUTATIONS):
    """(kind, mutant) for every kind that has a site in ``p``."""
    for k in kinds:
        try:
            yield k, mutate_pair(p, k, seed)
        except NoApplicableSite:
            continue

