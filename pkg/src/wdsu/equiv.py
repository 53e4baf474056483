"""Decision procedures for the three syntactic equivalence rules.

``comp``  equivalent computation of one variable for terminating runs,
``term``  termination in the same way,
``beh``   same output sequence (behavioral equivalence).

Each rule is a disjunction of numbered cases; the checker tries the cases in
order, memoizes per query and records the first accepting case in a
derivation tree that ``replay`` can re-check node by node.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import analysis as A
from .lang import (
    INT, PMPT, SKIP, Assign, Binary, If, Input, Name, Output, Program, Skip, TypeEnv, Unary, While,
    fmt_seq, is_simple, type_of, typecheck,
)


@dataclass(frozen=True)
class Deriv:
    rule: str
    case: str
    left: tuple
    right: tuple
    var: Optional[str] = None
    children: tuple = ()

    def to_json(self) -> dict:
        d = {"rule": self.rule, "case": self.case,
             "left": fmt_seq(self.left, False), "right": fmt_seq(self.right, False)}
        if self.var is not None:
            d["var"] = self.var
        if self.children:
            d["children"] = [c.to_json() for c in self.children]
        return d

    def nodes(self):
        yield self
        for c in self.children:
            yield from c.nodes()


@dataclass
class Verdict:
    accepted: bool
    derivation: Optional[Deriv] = None
    failure_reason: Optional[str] = None

    def to_json(self) -> dict:
        return {"accepted": self.accepted,
                "derivation": self.derivation.to_json() if self.derivation else None,
                "failureReason": self.failure_reason}


def _norm(prefix: tuple) -> tuple:
    # an empty prefix behaves like a lone skip
    return prefix if prefix else (SKIP,)


def _skip_only(S: tuple) -> bool:
    return len(S) == 1 and isinstance(S[0], Skip)


def _all_skips(S: tuple) -> bool:
    return all(isinstance(s, Skip) for s in S)


def _same_cond(s1, s2, kind) -> bool:
    return isinstance(s1, kind) and isinstance(s2, kind) and s1.cond == s2.cond


class Checker:
    """Memoizing prover for one pair of type environments (old, new)."""

    def __init__(self, env1: Optional[TypeEnv] = None, env2: Optional[TypeEnv] = None):
        self.env1 = env1
        self.env2 = env2 if env2 is not None else env1
        self.memo = {}
        self.busy = set()
        self.reasons = {}

    # -------------------------------------------------------------- driver

    def _query(self, rule, S1, S2, var=None):
        key = (rule, S1, S2, var)
        if key in self.memo:
            return self.memo[key]
        if key in self.busy:
            return None
        self.busy.add(key)
        found = None
        first_fail = None
        try:
            for case, fn in CASES[rule]:
                r = fn(self, S1, S2, var)
                if isinstance(r, tuple):
                    found = Deriv(rule, case, S1, S2, var, r)
                    break
                if isinstance(r, str) and first_fail is None:
                    first_fail = f"case {case}: {r}"
        finally:
            self.busy.discard(key)
        self.memo[key] = found
        if found is None:
            self.reasons[key] = first_fail or "no case applies to this statement shape"
        return found

    def comp(self, S1, S2, x):
        return self._query("comp", S1, S2, x)

    def term(self, S1, S2):
        return self._query("term", S1, S2)

    def beh(self, S1, S2):
        return self._query("beh", S1, S2)

    def comp_all(self, S1, S2, X):
        """Proofs of ``comp`` for every variable of X, or None."""
        out = []
        for y in sorted(X):
            d = self.comp(S1, S2, y)
            if d is None:
                return None
            out.append(d)
        return tuple(out)

    def reason(self, rule, S1, S2, var=None) -> str:
        return self.reasons.get((rule, S1, S2, var), "")

    def tvar1(self, S):
        return A.tvar(S, self.env1)

    def tvar2(self, S):
        return A.tvar(S, self.env2)

    def ovar1(self, S):
        return A.ovar(S, self.env1)

    def ovar2(self, S):
        return A.ovar(S, self.env2)


# ---------------------------------------------------------------- equivalent computation

def _comp_base(s1, s2, x) -> Optional[str]:
    if s1 == s2:
        return "1"
    if isinstance(s1, Input) and isinstance(s2, Input) and x not in (s1.id, s2.id):
        return "2a"
    if x not in A.defs(s1) | A.defs(s2):
        return "2b"
    return None


def comp_1a(ck, S1, S2, x):
    if len(S1) != 1 or len(S2) != 1 or not (is_simple(S1[0]) and is_simple(S2[0])):
        return None
    b = _comp_base(S1[0], S2[0], x)
    if b is None:
        return f"simple statements differ and both may define {x}"
    return ()


def comp_1b(ck, S1, S2, x):
    if len(S1) != 1 or len(S2) != 1 or not _same_cond(S1[0], S2[0], If):
        return None
    s1, s2 = S1[0], S2[0]
    if x not in A.defs(s1) & A.defs(s2):
        return f"{x} is not defined by both if statements"
    t = ck.comp(s1.then, s2.then, x)
    if t is None:
        return "then branches do not compute x equivalently"
    f = ck.comp(s1.else_, s2.else_, x)
    if f is None:
        return "else branches do not compute x equivalently"
    return (t, f)


def comp_1c(ck, S1, S2, x):
    if len(S1) != 1 or len(S2) != 1 or not _same_cond(S1[0], S2[0], While):
        return None
    if x not in A.defs(S1) & A.defs(S2):
        return f"{x} is not defined by both loops"
    Y = A.imp(S1, {x}) | A.imp(S2, {x})
    ds = ck.comp_all(S1[0].body, S2[0].body, Y)
    if ds is None:
        return "loop bodies differ on an imported variable"
    return ds


def comp_1d(ck, S1, S2, x):
    if len(S1) != 1 or len(S2) != 1:
        return None
    if x in A.defs(S1) | A.defs(S2):
        return f"{x} is defined"
    return ()


def comp_2a(ck, S1, S2, x):
    if len(S1) == 1 and len(S2) == 1:
        return None
    s1, s2 = S1[-1], S2[-1]
    if x not in A.defs(s1) & A.defs(s2):
        return None
    last = ck.comp((s1,), (s2,), x)
    if last is None:
        return "last statements do not compute x equivalently"
    Y = A.imp(s1, {x}) | A.imp(s2, {x})
    pre = ck.comp_all(_norm(S1[:-1]), _norm(S2[:-1]), Y)
    if pre is None:
        return "prefixes differ on a variable imported by the last statements"
    return pre + (last,)


def comp_2b(ck, S1, S2, x):
    if len(S1) == 1 and len(S2) == 1:
        return None
    if x not in A.defs(S2[-1]) and not _skip_only(S2):
        d = ck.comp(S1, _norm(S2[:-1]), x)
        if d is not None:
            return (d,)
    if x not in A.defs(S1[-1]) and not _skip_only(S1):
        d = ck.comp(_norm(S1[:-1]), S2, x)
        if d is not None:
            return (d,)
    return None


def comp_2c(ck, S1, S2, x):
    if len(S1) == 1 and len(S2) == 1:
        return None
    s1, s2 = S1[-1], S2[-1]
    if not _same_cond(s1, s2, If):
        return None
    # restricted to ifs that both define x (otherwise the Imp sets differ)
    if x not in A.defs(s1) & A.defs(s2):
        return None
    P1, P2 = S1[:-1], S2[:-1]
    pre = ck.comp_all(_norm(P1), _norm(P2), A.use_expr(s1.cond))
    if pre is None:
        return "prefixes differ on the predicate variables"
    t = ck.comp(P1 + s1.then, P2 + s2.then, x)
    if t is None:
        return "prefix moved into then branch does not compute x equivalently"
    f = ck.comp(P1 + s1.else_, P2 + s2.else_, x)
    if f is None:
        return "prefix moved into else branch does not compute x equivalently"
    return pre + (t, f)


# ---------------------------------------------------------------- termination in the same way

def _no_mismatch(s, env) -> bool:
    if isinstance(s, Output):
        return True
    if env is None:
        return False
    target = env.var_type(s.lval.id)
    try:
        et = type_of(s.expr, env)
    except Exception:
        return False
    if target != INT:
        return True
    # arithmetic runs in 64 bits, so an Int-typed sum or product can still leave the Int range
    return et == INT and not isinstance(s.expr, (Unary, Binary))


def _same_decls(ck, s) -> bool:
    # an identical statement only behaves identically over identical declarations
    if ck.env1 is None or ck.env2 is None:
        return True
    for v in A.use((s,)) | A.defs((s,)):
        if v in ck.env1.vars or v in ck.env2.vars:
            if ck.env1.vars.get(v) != ck.env2.vars.get(v):
                return False
    return True


def _term_base(ck, s1, s2) -> Optional[str]:
    if s1 == s2 and _same_decls(ck, s1):
        return "1"
    if isinstance(s1, Input) and isinstance(s2, Input):
        if ck.env1 is not None and ck.env2 is not None:
            t1, t2 = ck.env1.var_type(s1.id), ck.env2.var_type(s2.id)
            if t1 is not None and t1 == t2:
                return "2"
        return None

    def expr_of(s):
        if isinstance(s, Output):
            return s.expr
        if isinstance(s, Assign) and isinstance(s.lval, Name):
            return s.expr
        return None

    e1, e2 = expr_of(s1), expr_of(s2)
    if e1 is not None and e1 == e2 and _no_mismatch(s1, ck.env1) and _no_mismatch(s2, ck.env2):
        return "3"
    return None


def term_1a(ck, S1, S2, _):
    if len(S1) != 1 or len(S2) != 1 or not (is_simple(S1[0]) and is_simple(S2[0])):
        return None
    if _term_base(ck, S1[0], S2[0]) is None:
        return "simple statements may terminate differently"
    return ()


def term_1b(ck, S1, S2, _):
    if len(S1) != 1 or len(S2) != 1 or not _same_cond(S1[0], S2[0], If):
        return None
    s1, s2 = S1[0], S2[0]
    if all(_all_skips(b) for b in (s1.then, s1.else_, s2.then, s2.else_)):
        return ()
    t = ck.term(s1.then, s2.then)
    if t is None:
        return "then branches may terminate differently"
    f = ck.term(s1.else_, s2.else_)
    if f is None:
        return "else branches may terminate differently"
    return (t, f)


def term_1c(ck, S1, S2, _):
    if len(S1) != 1 or len(S2) != 1 or not _same_cond(S1[0], S2[0], While):
        return None
    b1, b2 = S1[0].body, S2[0].body
    body = ck.term(b1, b2)
    if body is None:
        return "loop bodies may terminate differently"
    ds = ck.comp_all(b1, b2, ck.tvar1(S1) | ck.tvar2(S2))
    if ds is None:
        return "loop bodies differ on a termination deciding variable"
    return (body,) + ds


def term_2a(ck, S1, S2, _):
    if len(S1) == 1 and len(S2) == 1:
        return None
    s1, s2 = S1[-1], S2[-1]
    if isinstance(s1, Skip) or isinstance(s2, Skip):
        return None
    last = ck.term((s1,), (s2,))
    if last is None:
        return "last statements may terminate differently"
    P1, P2 = _norm(S1[:-1]), _norm(S2[:-1])
    pre = ck.term(P1, P2)
    if pre is None:
        return "prefixes may terminate differently"
    ds = ck.comp_all(P1, P2, ck.tvar1(s1) | ck.tvar2(s2))
    if ds is None:
        return "prefixes differ on a termination deciding variable of the last statements"
    return (pre,) + ds + (last,)


def term_2b(ck, S1, S2, _):
    if len(S1) == 1 and len(S2) == 1:
        return None
    if len(S1) > 1 and isinstance(S1[-1], Skip):
        d = ck.term(S1[:-1], S2)
        if d is not None:
            return (d,)
    if len(S2) > 1 and isinstance(S2[-1], Skip):
        d = ck.term(S1, S2[:-1])
        if d is not None:
            return (d,)
    return None


def _dup_site(ck, S, tv_fn):
    # an earlier statement s' that the last one duplicates, with nothing in
    # between (s' included) redefining the last one's termination variables
    s = S[-1]
    if isinstance(s, Skip) or len(S) < 2:
        return None
    tv = tv_fn((s,))
    for j in range(len(S) - 2, -1, -1):
        if A.defs(S[j:-1]) & tv:
            continue
        d = ck.term((S[j],), (s,))
        if d is not None:
            return d
    return None


def term_2c(ck, S1, S2, _):
    if len(S1) == 1 and len(S2) == 1:
        return None
    dup = _dup_site(ck, S1, ck.tvar1)
    if dup is not None:
        d = ck.term(S1[:-1], S2)
        if d is not None:
            return (d, dup)
    dup = _dup_site(ck, S2, ck.tvar2)
    if dup is not None:
        d = ck.term(S1, S2[:-1])
        if d is not None:
            return (d, dup)
    return None


def term_2d(ck, S1, S2, _):
    if len(S1) < 2 or len(S2) < 2:
        return None
    a1, b1 = S1[-2], S1[-1]
    a2, b2 = S2[-2], S2[-1]
    if A.defs(a1) & ck.tvar1((b1,)) or A.defs(a2) & ck.tvar2((b2,)):
        return None
    x = ck.term((a1,), (b2,))
    y = ck.term((b1,), (a2,))
    if x is None or y is None:
        return None
    P1, P2 = _norm(S1[:-2]), _norm(S2[:-2])
    pre = ck.term(P1, P2)
    if pre is None:
        return "prefixes before the reordered pair may terminate differently"
    ds = ck.comp_all(P1, P2, ck.tvar1((a1, b1)) | ck.tvar2((a2, b2)))
    if ds is None:
        return "prefixes differ on a termination deciding variable"
    return (pre,) + ds + (x, y)


# ---------------------------------------------------------------- behavioral equivalence

def beh_1a(ck, S1, S2, _):
    if len(S1) != 1 or len(S2) != 1 or not (is_simple(S1[0]) and is_simple(S2[0])):
        return None
    s1, s2 = S1[0], S2[0]
    if not isinstance(s1, Output) and not isinstance(s2, Output):
        return ()
    if isinstance(s1, Output) and s1 == s2:
        if _prompt_output(ck, s1) and ck.env1.prompt != ck.env2.prompt:
            return "prompt tables differ"
        return ()
    return "output statements are not identical"


def _prompt_output(ck, s) -> bool:
    if ck.env1 is None or ck.env2 is None:
        return False
    try:
        return type_of(s.expr, ck.env1) == PMPT
    except Exception:
        return True


def beh_1b(ck, S1, S2, _):
    if len(S1) != 1 or len(S2) != 1 or not _same_cond(S1[0], S2[0], If):
        return None
    if not (A.contains_output(S1) and A.contains_output(S2)):
        return None
    s1, s2 = S1[0], S2[0]
    t = ck.beh(s1.then, s2.then)
    if t is None:
        return "then branches produce different outputs"
    f = ck.beh(s1.else_, s2.else_)
    if f is None:
        return "else branches produce different outputs"
    return (t, f)


def beh_1c(ck, S1, S2, _):
    if len(S1) != 1 or len(S2) != 1 or not _same_cond(S1[0], S2[0], While):
        return None
    if not (A.contains_output(S1) and A.contains_output(S2)):
        return None
    b1, b2 = S1[0].body, S2[0].body
    body = ck.beh(b1, b2)
    if body is None:
        return "loop bodies produce different outputs"
    ds = ck.comp_all(b1, b2, ck.ovar1(S1) | ck.ovar2(S2))
    if ds is None:
        return "loop bodies differ on an output deciding variable"
    t = ck.term(b1, b2)
    if t is None:
        return "loop bodies may terminate differently"
    return (body,) + ds + (t,)


def beh_1d(ck, S1, S2, _):
    if len(S1) != 1 or len(S2) != 1:
        return None
    if A.contains_output(S1) or A.contains_output(S2):
        return "statements contain output"
    return ()


def beh_2a(ck, S1, S2, _):
    if len(S1) == 1 and len(S2) == 1:
        return None
    s1, s2 = S1[-1], S2[-1]
    if not (A.contains_output(s1) and A.contains_output(s2)):
        return None
    last = ck.beh((s1,), (s2,))
    if last is None:
        return "last statements produce different outputs"
    P1, P2 = _norm(S1[:-1]), _norm(S2[:-1])
    pre = ck.beh(P1, P2)
    if pre is None:
        return "prefixes produce different outputs"
    t = ck.term(P1, P2)
    if t is None:
        return "prefixes may terminate differently"
    ds = ck.comp_all(P1, P2, ck.ovar1(s1) | ck.ovar2(s2))
    if ds is None:
        return "prefixes differ on an output deciding variable of the last statements"
    return (pre, t) + ds + (last,)


def beh_2b(ck, S1, S2, _):
    if len(S1) == 1 and len(S2) == 1:
        return None
    if not A.contains_output(S1[-1]) and not _skip_only(S1):
        d = ck.beh(_norm(S1[:-1]), S2)
        if d is not None:
            return (d,)
    if not A.contains_output(S2[-1]) and not _skip_only(S2):
        d = ck.beh(S1, _norm(S2[:-1]))
        if d is not None:
            return (d,)
    return None


CASES = {
    "comp": [("1a", comp_1a), ("1b", comp_1b), ("1c", comp_1c), ("1d", comp_1d),
             ("2a", comp_2a), ("2b", comp_2b), ("2c", comp_2c)],
    "term": [("1a", term_1a), ("1b", term_1b), ("1c", term_1c),
             ("2a", term_2a), ("2b", term_2b), ("2c", term_2c), ("2d", term_2d)],
    "beh": [("1a", beh_1a), ("1b", beh_1b), ("1c", beh_1c), ("1d", beh_1d),
            ("2a", beh_2a), ("2b", beh_2b)],
}

RULE_NAMES = {"comp": "equivalent computation", "term": "termination in the same way",
              "beh": "behavioral equivalence"}


def _operands(S1, S2, env1, env2):
    if isinstance(S1, Program):
        env1 = env1 or typecheck(S1)
        S1 = S1.entry
    if isinstance(S2, Program):
        env2 = env2 or typecheck(S2)
        S2 = S2.entry
    return tuple(S1), tuple(S2), env1, env2


def _verdict(ck, rule, S1, S2, var=None) -> Verdict:
    d = ck._query(rule, S1, S2, var)
    if d is not None:
        return Verdict(True, d)
    why = ck.reason(rule, S1, S2, var)
    return Verdict(False, None, f"not provable by the {RULE_NAMES[rule]} rule ({why})")


def check_equiv_comp(S1, S2, x: str, env1=None, env2=None) -> Verdict:
    S1, S2, env1, env2 = _operands(S1, S2, env1, env2)
    return _verdict(Checker(env1, env2), "comp", S1, S2, x)


def check_term_same(S1, S2, env1=None, env2=None) -> Verdict:
    S1, S2, env1, env2 = _operands(S1, S2, env1, env2)
    return _verdict(Checker(env1, env2), "term", S1, S2)


def check_behavioral(S1, S2, env1=None, env2=None) -> Verdict:
    S1, S2, env1, env2 = _operands(S1, S2, env1, env2)
    return _verdict(Checker(env1, env2), "beh", S1, S2)


def replay(d: Deriv, env1=None, env2=None, ck: Optional[Checker] = None) -> bool:
    """Re-check every node of a derivation with its recorded case."""
    ck = ck or Checker(env1, env2)
    fn = dict(CASES[d.rule])[d.case]
    if not isinstance(fn(ck, d.left, d.right, d.var), tuple):
        return False
    return all(replay(c, ck=ck) for c in d.children)
