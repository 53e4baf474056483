"""Checkers for the six backward compatible update classes.

Each checker returns an ``UpdateClassReport``: a verdict plus the runtime
assumptions under which the class guarantees the same output sequence.  The
difftest module turns those assumptions into monitors.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from . import analysis as A
from .equiv import Checker, Deriv, Verdict, _norm, _same_cond, replay as replay_equiv
from .lang import (
    ID_IO, INT, LONG, SKIP, Assign, EnumEq, If, IntLit, LabelLit, Name,
    Program, While, typecheck,
)

NEW_CONFIG_VARS = "NewConfigVars"
ENUM_EXTENSION = "EnumExtension"
TYPE_WEAKENING = "TypeWeakening"
EXIT_ON_ERROR = "ExitOnError"
IMPROVED_PROMPTS = "ImprovedPrompts"
MISSING_INIT = "MissingInit"
BEHAVIORAL_EQUIV = "BehavioralEquiv"
UNCLASSIFIED = "Unclassified"


class IncomparableEnums(Exception):
    pass


@dataclass(frozen=True)
class Assumption:
    name: str
    text: str
    params: tuple = ()  # sorted (key, value) pairs

    def param(self, key, default=None):
        return dict(self.params).get(key, default)

    def to_json(self) -> dict:
        return {"name": self.name, "text": self.text,
                "params": {k: _jsonable(v) for k, v in self.params}}


def _jsonable(v):
    if isinstance(v, (frozenset, set)):
        return sorted(v)
    if isinstance(v, tuple):
        return [list(x) if isinstance(x, tuple) else x for x in v]
    return v


def assumption(name: str, text: str, **params) -> Assumption:
    return Assumption(name, text, tuple(sorted(params.items())))


NO_UNDEF_READ = assumption("undefined-read", "the old program never reads an undefined value")


@dataclass
class UpdateClassReport:
    cls: str
    verdict: Verdict
    assumptions: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return self.verdict.accepted

    def to_json(self) -> dict:
        d = {"class": self.cls}
        d.update(self.verdict.to_json())
        d["assumptions"] = [a.to_json() for a in self.assumptions]
        if self.info:
            d["info"] = {k: _jsonable(v) for k, v in self.info.items()}
        return d


def _envs(P1: Program, P2: Program):
    return typecheck(P1), typecheck(P2)


# ---------------------------------------------------------------- recursive class relations

class ClassProver:
    """Decides S2 ≈ S1 for the three recursive classes (rho, enum, exit).

    The sequence case splits S2 into a prefix and its last one or two
    statements and S1 into a prefix and its last statement, or pads S1 with
    a trailing skip when S2 is longer; this lets a guard or an extra
    statement appear in the middle of a sequence.
    """

    def __init__(self, kind: str, ck: Checker, rho=None, E=frozenset(), assigned=frozenset()):
        self.kind = kind
        self.ck = ck
        self.rho = dict(rho or {})
        self.E = frozenset(E)
        self.assigned = frozenset(assigned)
        self.memo = {}
        self.busy = set()
        # the rho relation tries plain equivalence before congruence
        if kind == "rho":
            fns = [self._guard, self._beh, self._if, self._while, self._seq]
        else:
            fns = [self._guard, self._if, self._while, self._beh, self._seq]
        self.cases = [(str(i), fn) for i, fn in enumerate(fns, 1)]

    def rel(self, S2: tuple, S1: tuple) -> Optional[Deriv]:
        key = (S2, S1)
        if key in self.memo:
            return self.memo[key]
        if key in self.busy:
            return None
        self.busy.add(key)
        found = None
        try:
            for case, fn in self.cases:
                r = fn(S2, S1)
                if r is not None:
                    found = Deriv(self.kind, case, S1, S2, None, r)
                    break
        finally:
            self.busy.discard(key)
        self.memo[key] = found
        return found

    def case_fn(self, case):
        return dict(self.cases)[case]

    # case 1 of each class: the class-specific new code
    def _guard(self, S2, S1):
        if self.kind == "exit":
            g = S2[0]
            if not (isinstance(g, If) and g.then == (SKIP,) and g.else_ == (SKIP,)):
                return None
            if S2[1:] == S1 or (len(S2) == 1 and S1 == (SKIP,)):
                return ()
            return None
        if len(S2) != 1 or not isinstance(S2[0], If):
            return None
        s = S2[0]
        if self.kind == "rho":
            if not isinstance(s.cond, Name) or s.cond.id not in self.rho:
                return None
            branch = s.else_ if self.rho[s.cond.id] == 0 else s.then
            d = self.rel(branch, S1)
            return (d,) if d else None
        if not isinstance(s.cond, EnumEq) or s.cond.label not in self.E:
            return None
        if s.cond.id in self.assigned:
            return None
        d = self.rel(s.else_, S1)
        return (d,) if d else None

    def _beh(self, S2, S1):
        d = self.ck.beh(S1, S2)
        return (d,) if d else None

    def _if(self, S2, S1):
        if len(S1) != 1 or len(S2) != 1 or not _same_cond(S1[0], S2[0], If):
            return None
        t = self.rel(S2[0].then, S1[0].then)
        f = self.rel(S2[0].else_, S1[0].else_) if t else None
        return (t, f) if f else None

    def _while(self, S2, S1):
        if len(S1) != 1 or len(S2) != 1 or not _same_cond(S1[0], S2[0], While):
            return None
        d = self.rel(S2[0].body, S1[0].body)
        return (d,) if d else None

    def _seq(self, S2, S1):
        if len(S1) == 1 and len(S2) == 1:
            return None
        splits1 = [(S1[:-1], S1[-1])]
        if len(S2) > len(S1):
            splits1.append((S1, SKIP))
        for t in (1, 2):
            if len(S2) < t:
                continue
            P2, T2 = S2[:-t], S2[-t:]
            for P1, s1 in splits1:
                if (T2, (s1,)) == (S2, S1) or (_norm(P2), _norm(P1)) == (S2, S1):
                    continue
                r = self._seq_obligations(_norm(P2), T2, _norm(P1), s1)
                if r is not None:
                    return r
        return None

    def _seq_obligations(self, P2, T2, P1, s1):
        last = self.rel(T2, (s1,))
        if last is None:
            return None
        term = self.ck.term(P1, P2)
        if term is None:
            return None
        X = A.imp((s1,), {ID_IO}) | A.imp(T2, {ID_IO})
        comps = self.ck.comp_all(P1, P2, X)
        if comps is None:
            return None
        pre = self.rel(P2, P1)
        if pre is None:
            return None
        return (pre, term) + comps + (last,)

    def replay(self, d: Deriv) -> bool:
        if d.rule != self.kind:
            return replay_equiv(d, ck=self.ck)
        if self.case_fn(d.case)(d.right, d.left) is None:
            return False
        return all(self.replay(c) for c in d.children)


def uses_class_case(d: Optional[Deriv], kind: str) -> bool:
    """True when some node of the derivation applies the class's own case 1."""
    return d is not None and any(n.rule == kind and n.case == "1" for n in d.nodes())


def _prover_verdict(prover: ClassProver, S2, S1, what: str) -> Verdict:
    d = prover.rel(S2, S1)
    if d is None:
        return Verdict(False, None, f"no case of the {what} rule derives the new entry from the old one")
    return Verdict(True, d)


# ---------------------------------------------------------------- new configuration variables

def check_new_config_vars(P1: Program, P2: Program, rho: dict) -> UpdateClassReport:
    env1, env2 = _envs(P1, P2)
    rho = {k: int(v) for k, v in rho.items()}
    assumptions = [assumption("config-values", "new configuration variables start with their rho values",
                              rho=tuple(sorted(rho.items()))),
                   NO_UNDEF_READ]
    info = {"rho": tuple(sorted(rho.items()))}
    bad = [k for k in rho if k not in env2.vars or env2.vars[k].size is not None]
    if bad:
        return UpdateClassReport(NEW_CONFIG_VARS, Verdict(False, None, f"rho names undeclared scalars {bad}"),
                                 assumptions, info)
    if any(v not in (0, 1) for v in rho.values()):
        return UpdateClassReport(NEW_CONFIG_VARS, Verdict(False, None, "rho values must be 0 or 1"),
                                 assumptions, info)
    redefined = set(rho) & A.defs(P2.entry)
    if redefined:
        v = Verdict(False, None, f"configuration variables {sorted(redefined)} are redefined by the new program")
        return UpdateClassReport(NEW_CONFIG_VARS, v, assumptions, info)
    prover = ClassProver("rho", Checker(env1, env2), rho=rho)
    v = _prover_verdict(prover, P2.entry, P1.entry, "configuration specialization")
    return UpdateClassReport(NEW_CONFIG_VARS, v, assumptions, info)


def guard_variables(P1: Program, P2: Program) -> list:
    """Scalars of the new program used directly as if-predicates and never assigned."""
    out = []

    def walk(ss):
        for s in ss:
            if isinstance(s, If):
                if isinstance(s.cond, Name) and s.cond.id not in out:
                    out.append(s.cond.id)
                walk(s.then)
                walk(s.else_)
            elif isinstance(s, While):
                walk(s.body)

    walk(P2.entry)
    d2 = A.defs(P2.entry)
    return [v for v in out if v not in d2]


def search_rho(P1: Program, P2: Program, limit: int = 10) -> Optional[dict]:
    """First valuation in {0,1}^k (k ≤ limit) under which the class check accepts."""
    cands = guard_variables(P1, P2)[:limit]
    if not cands:
        return None
    for bits in itertools.product((0, 1), repeat=len(cands)):
        rho = dict(zip(cands, bits))
        if check_new_config_vars(P1, P2, rho).accepted:
            return rho
    return None


# ---------------------------------------------------------------- enumeration extension

def enum_extension_labels(P1: Program, P2: Program) -> frozenset:
    """New labels E when EN1 ⊂ EN2; raises IncomparableEnums otherwise."""
    en1, en2 = P1.enums, P2.enums
    if len(en1) != len(en2):
        raise IncomparableEnums("the programs declare different numbers of enumerations")
    E = []
    for a, b in zip(en1, en2):
        if a.name != b.name:
            raise IncomparableEnums(f"enumeration {a.name} is matched against {b.name}")
        if b.labels[:len(a.labels)] != a.labels:
            raise IncomparableEnums(f"labels of {b.name} do not extend those of {a.name}")
        E.extend(b.labels[len(a.labels):])
    return frozenset(E)


def assigned_ids(S) -> frozenset:
    out = set()

    def walk(ss):
        for s in ss:
            if isinstance(s, Assign) and isinstance(s.lval, Name):
                out.add(s.lval.id)
            elif isinstance(s, If):
                walk(s.then)
                walk(s.else_)
            elif isinstance(s, While):
                walk(s.body)

    walk(S)
    return frozenset(out)


def check_enum_extension(P1: Program, P2: Program) -> UpdateClassReport:
    env1, env2 = _envs(P1, P2)
    E = enum_extension_labels(P1, P2)
    assumptions = [assumption("enum-initial-not-in-E", "no variable starts with a label of E", E=E),
                   assumption("enum-input-in-E", "no input converts to a label of E", E=E),
                   NO_UNDEF_READ]
    info = {"E": E}
    if not E:
        v = Verdict(False, None, "the enumeration declarations are identical, not a strict extension")
        return UpdateClassReport(ENUM_EXTENSION, v, assumptions, info)
    prover = ClassProver("enum", Checker(env1, env2), E=E, assigned=assigned_ids(P2.entry))
    v = _prover_verdict(prover, P2.entry, P1.entry, "enumeration extension")
    return UpdateClassReport(ENUM_EXTENSION, v, assumptions, info)


# ---------------------------------------------------------------- type weakening

def _weakens(d1, d2) -> Optional[str]:
    """Case of the weakening relation relating two declarations, if any."""
    if d1.name != d2.name:
        return None
    if d1.size is None and d2.size is None and d1.ty == INT and d2.ty == LONG:
        return "1"
    if d1.size is not None and d2.size is not None and d1.ty == d2.ty and d2.size > d1.size:
        return "2"
    return None


def check_type_weakening(P1: Program, P2: Program) -> UpdateClassReport:
    _envs(P1, P2)
    weakened = []
    reason = None
    if P1.prompt != P2.prompt or P1.enums != P2.enums:
        reason = "prompt or enumeration declarations differ"
    elif P1.entry != P2.entry:
        reason = "entry statements differ"
    elif len(P1.vars) != len(P2.vars):
        reason = "variable declaration lists differ in length"
    else:
        for d1, d2 in zip(P1.vars, P2.vars):
            if d1 == d2:
                continue
            case = _weakens(d1, d2)
            if case is None:
                reason = f"declaration of {d1.name} is neither kept nor weakened"
                break
            weakened.append((d1.name, case))
        if reason is None and not weakened:
            reason = "no declaration is weakened"
    names = frozenset(n for n, _ in weakened)
    old_types = {d.name: (str(d.ty), d.size) for d in P1.vars if d.name in names}
    assumptions = [assumption("overflow-weakened",
                              "no value outside the old type and no index beyond the old size "
                              "reaches a weakened variable", vars=names,
                              old=tuple(sorted((k, v[0], v[1] or 0) for k, v in old_types.items()))),
                   NO_UNDEF_READ]
    info = {"weakened": names}
    if reason:
        return UpdateClassReport(TYPE_WEAKENING, Verdict(False, None, reason), assumptions, info)
    d = Deriv("weaken", ",".join(c for _, c in weakened), P1.entry, P2.entry)
    return UpdateClassReport(TYPE_WEAKENING, Verdict(True, d), assumptions, info)


# ---------------------------------------------------------------- exit on error

def is_guard(s) -> bool:
    return isinstance(s, If) and s.then == (SKIP,) and s.else_ == (SKIP,)


def check_exit_on_error(P1: Program, P2: Program) -> UpdateClassReport:
    env1, env2 = _envs(P1, P2)
    assumptions = [assumption("guard-never-fires", "an inserted error guard never crashes on a valid run"),
                   NO_UNDEF_READ]
    prover = ClassProver("exit", Checker(env1, env2))
    v = _prover_verdict(prover, P2.entry, P1.entry, "exit-on-error")
    return UpdateClassReport(EXIT_ON_ERROR, v, assumptions)


# ---------------------------------------------------------------- improved prompts

def check_prompt_change(P1: Program, P2: Program) -> UpdateClassReport:
    _envs(P1, P2)
    assumptions = [assumption("prompt-modulo", "outputs of the same prompt label are equivalent")]
    if P1.enums != P2.enums or P1.vars != P2.vars:
        reason = "enumeration or variable declarations differ"
    elif P1.entry != P2.entry:
        reason = "entry statements differ"
    elif dict(P1.prompt or ()) == dict(P2.prompt or ()):
        reason = "the prompt declarations are identical"
    else:
        reason = None
    if reason:
        return UpdateClassReport(IMPROVED_PROMPTS, Verdict(False, None, reason), assumptions)
    d = Deriv("prompt", "def", P1.entry, P2.entry)
    return UpdateClassReport(IMPROVED_PROMPTS, Verdict(True, d), assumptions)


# ---------------------------------------------------------------- missing initialization

def _literal_init(s) -> bool:
    if not isinstance(s, Assign) or not isinstance(s.expr, (IntLit, LabelLit)):
        return False
    return isinstance(s.lval, Name) or isinstance(s.lval.index, int)


def check_missing_init(P1: Program, P2: Program) -> UpdateClassReport:
    _envs(P1, P2)
    S1, S2 = P1.entry, P2.entry
    k = len(S2) - len(S1)
    init = S2[:k] if k > 0 else ()
    assumptions = [NO_UNDEF_READ,
                   assumption("init-does-not-crash", "the added initializations do not crash",
                              count=len(init))]
    info = {"init": frozenset(A.defs(init))}
    if k <= 0 or S2[k:] != S1:
        reason = "the new entry is not the old entry with statements prepended"
    elif not all(_literal_init(s) for s in init):
        reason = "a prepended statement is not an assignment of a literal"
    else:
        imported = A.imp(S1, {ID_IO})
        extra = A.defs(init) - imported
        reason = (f"{sorted(extra)} not imported by the old program's I/O sequence" if extra else None)
    if reason:
        return UpdateClassReport(MISSING_INIT, Verdict(False, None, reason), assumptions, info)
    d = Deriv("init", "def", S1, S2)
    return UpdateClassReport(MISSING_INIT, Verdict(True, d), assumptions, info)


# ---------------------------------------------------------------- aggregation

def classify_update(P1: Program, P2: Program, rho: Optional[dict] = None) -> list:
    """Every class (including plain behavioral equivalence) the update falls into."""
    from .equiv import check_behavioral

    env1, env2 = _envs(P1, P2)
    reports = []
    beh = check_behavioral(P1.entry, P2.entry, env1, env2)
    if beh.accepted:
        reports.append(UpdateClassReport(BEHAVIORAL_EQUIV, beh))

    r = rho if rho is not None else search_rho(P1, P2)
    if r:
        rep = check_new_config_vars(P1, P2, r)
        if rep.accepted and uses_class_case(rep.verdict.derivation, "rho"):
            reports.append(rep)
    try:
        rep = check_enum_extension(P1, P2)
        if rep.accepted and uses_class_case(rep.verdict.derivation, "enum"):
            reports.append(rep)
    except IncomparableEnums:
        pass
    for fn in (check_type_weakening, check_exit_on_error, check_prompt_change, check_missing_init):
        rep = fn(P1, P2)
        if rep.accepted and (rep.cls != EXIT_ON_ERROR or uses_class_case(rep.verdict.derivation, "exit")):
            reports.append(rep)
    return reports


CHECKERS = {
    "config": check_new_config_vars,
    "enum": check_enum_extension,
    "weaken": check_type_weakening,
    "exit": check_exit_on_error,
    "prompt": check_prompt_change,
    "init": check_missing_init,
}


def replay_report(P1: Program, P2: Program, rep: UpdateClassReport) -> bool:
    """Re-check an accepting report's derivation node by node."""
    d = rep.verdict.derivation
    if d is None:
        return False
    env1, env2 = _envs(P1, P2)
    ck = Checker(env1, env2)
    if rep.cls == BEHAVIORAL_EQUIV:
        return replay_equiv(d, ck=ck)
    if rep.cls == NEW_CONFIG_VARS:
        return ClassProver("rho", ck, rho=dict(rep.info["rho"])).replay(d)
    if rep.cls == ENUM_EXTENSION:
        return ClassProver("enum", ck, E=rep.info["E"], assigned=assigned_ids(P2.entry)).replay(d)
    if rep.cls == EXIT_ON_ERROR:
        return ClassProver("exit", ck).replay(d)
    return CHECKERS[{TYPE_WEAKENING: "weaken", IMPROVED_PROMPTS: "prompt",
                     MISSING_INIT: "init"}[rep.cls]](P1, P2).accepted
