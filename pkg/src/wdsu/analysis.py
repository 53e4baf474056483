"""Syntax-directed variable analyses over statement sequences.

Every function accepts a tuple of statements (a single statement is wrapped).
Sets are frozensets of variable names, possibly including ``id_I``/``id_IO``.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Optional

from .lang import (
    ID_I, ID_IO, INT, Assign, Binary, Elem, EnumEq, If, Input, IntLit, LabelLit,
    Name, Output, Program, Skip, TypeEnv, Unary, While,
)

EMPTY = frozenset()


def _seq(S) -> tuple:
    if isinstance(S, Program):
        return S.entry
    if isinstance(S, tuple):
        return S
    if isinstance(S, list):
        return tuple(S)
    return (S,)


# ---------------------------------------------------------------- Use / Def

def idx(lv) -> frozenset:
    if isinstance(lv, Elem) and isinstance(lv.index, str):
        return frozenset({lv.index})
    return EMPTY


def base(lv) -> frozenset:
    return frozenset({lv.id})


@lru_cache(maxsize=None)
def use_expr(e) -> frozenset:
    if isinstance(e, (IntLit, LabelLit)):
        return EMPTY
    if isinstance(e, (Name, Elem)):
        return base(e) | idx(e)
    if isinstance(e, EnumEq):
        return frozenset({e.id})
    if isinstance(e, Unary):
        return use_expr(e.arg)
    if isinstance(e, Binary):
        return use_expr(e.left) | use_expr(e.right)
    raise TypeError(f"not an expression: {e!r}")


def err_vars(e) -> frozenset:
    # Any variable read can fail (undefined value, bad index) and division
    # needs its operands, so the crash-deciding set of an expression is its
    # use set; constant expressions cannot crash and yield the empty set.
    return use_expr(e)


@lru_cache(maxsize=None)
def _use_stmt(s) -> frozenset:
    if isinstance(s, Skip):
        return EMPTY
    if isinstance(s, Assign):
        return use_expr(s.expr) | idx(s.lval)
    if isinstance(s, Output):
        return use_expr(s.expr) | {ID_IO}
    if isinstance(s, Input):
        return frozenset({ID_I, ID_IO})
    if isinstance(s, If):
        return use_expr(s.cond) | use(s.then) | use(s.else_)
    if isinstance(s, While):
        return use_expr(s.cond) | use(s.body)
    raise TypeError(f"not a statement: {s!r}")


@lru_cache(maxsize=None)
def _def_stmt(s) -> frozenset:
    if isinstance(s, Skip):
        return EMPTY
    if isinstance(s, Assign):
        return base(s.lval)
    if isinstance(s, Input):
        return frozenset({ID_I, ID_IO, s.id})
    if isinstance(s, Output):
        return frozenset({ID_IO})
    if isinstance(s, If):
        return defs(s.then) | defs(s.else_)
    if isinstance(s, While):
        return defs(s.body)
    raise TypeError(f"not a statement: {s!r}")


def use(S) -> frozenset:
    out = EMPTY
    for s in _seq(S):
        out = out | _use_stmt(s)
    return out


def defs(S) -> frozenset:
    out = EMPTY
    for s in _seq(S):
        out = out | _def_stmt(s)
    return out


def syntactic_sets(S) -> dict:
    return {"use": use(S), "def": defs(S)}


def contains_output(S) -> bool:
    for s in _seq(S):
        if isinstance(s, Output):
            return True
        if isinstance(s, If) and (contains_output(s.then) or contains_output(s.else_)):
            return True
        if isinstance(s, While) and contains_output(s.body):
            return True
    return False


def contains_while(S) -> bool:
    for s in _seq(S):
        if isinstance(s, While):
            return True
        if isinstance(s, If) and (contains_while(s.then) or contains_while(s.else_)):
            return True
    return False


def size(S) -> int:
    n = 0
    for s in _seq(S):
        if isinstance(s, If):
            n += 1 + size(s.then) + size(s.else_)
        elif isinstance(s, While):
            n += 1 + size(s.body)
        else:
            n += 1
    return n


program_size = size


# ---------------------------------------------------------------- Imp

@lru_cache(maxsize=None)
def _imp_stmt(s, X: frozenset) -> frozenset:
    d = _def_stmt(s)
    if not (d & X):
        return X
    if isinstance(s, Assign) and isinstance(s.lval, Elem):
        # writing one cell leaves the rest of the array live: weak update
        return _use_stmt(s) | X
    if isinstance(s, (Assign, Input, Output)):
        return _use_stmt(s) | (X - d)
    if isinstance(s, If):
        out = use_expr(s.cond)
        for y in X:
            out = out | imported_vars(s.then, frozenset({y})) | imported_vars(s.else_, frozenset({y}))
        return out
    if isinstance(s, While):
        return _while_fix(s.body, use_expr(s.cond) | X)
    raise TypeError(f"not a statement: {s!r}")


def _while_fix(body: tuple, Z: frozenset) -> frozenset:
    # least Y with Z ⊆ Y and Imp(body, Y) ⊆ Y: the union over all unrollings
    Y = Z
    while True:
        nxt = Y | imported_vars(body, Y)
        if nxt == Y:
            return Y
        Y = nxt


def imported_vars(S, X) -> frozenset:
    """Variables whose initial values decide the final values of ``X``."""
    X = frozenset(X)
    for s in reversed(_seq(S)):
        X = _imp_stmt(s, X)
    return X


imp = imported_vars


# ---------------------------------------------------------------- LVar / CVar / TVar

def lvar(S) -> frozenset:
    S = _seq(S)
    if not contains_while(S):
        return EMPTY
    if len(S) > 1:
        return lvar(S[:-1]) | imp(S[:-1], lvar(S[-1:]))
    s = S[0]
    if isinstance(s, If):
        return use_expr(s.cond) | lvar(s.then) | lvar(s.else_)
    # while statement
    return imp(S, use_expr(s.cond) | lvar(s.body))


def _assign_int_target(s, env: Optional[TypeEnv]) -> bool:
    # Long-typed expressions include Int ones by subsumption, so any
    # numeric assignment into an Int cell may mismatch at run time.
    if env is None:
        return False
    return env.lval_type(s.lval) == INT


def cvar(S, env: Optional[TypeEnv] = None) -> frozenset:
    S = _seq(S)
    if len(S) > 1:
        return cvar(S[:-1], env) | imp(S[:-1], cvar(S[-1:], env))
    s = S[0]
    if isinstance(s, Skip):
        return EMPTY
    if isinstance(s, Assign):
        if _assign_int_target(s, env):
            return idx(s.lval) | use_expr(s.expr)
        return idx(s.lval) | err_vars(s.expr)
    if isinstance(s, Input):
        return frozenset({ID_I})
    if isinstance(s, Output):
        return err_vars(s.expr)
    if isinstance(s, If):
        inner = cvar(s.then, env) | cvar(s.else_, env)
        if not inner:
            return err_vars(s.cond)
        return use_expr(s.cond) | inner
    if isinstance(s, While):
        return imp(S, use_expr(s.cond) | cvar(s.body, env))
    raise TypeError(f"not a statement: {s!r}")


def tvar(S, env: Optional[TypeEnv] = None) -> frozenset:
    return lvar(S) | cvar(S, env)


def termination_vars(S, env: Optional[TypeEnv] = None) -> dict:
    lv, cv = lvar(S), cvar(S, env)
    return {"lvar": lv, "cvar": cv, "tvar": lv | cv}


# ---------------------------------------------------------------- output relative

def imp_o(S) -> frozenset:
    S = _seq(S)
    if not contains_output(S):
        return frozenset({ID_IO})
    if len(S) > 1:
        if contains_output(S[-1:]):
            return imp(S[:-1], imp_o(S[-1:]))
        return imp_o(S[:-1])
    s = S[0]
    if isinstance(s, Output):
        return frozenset({ID_IO}) | use_expr(s.expr)
    if isinstance(s, If):
        return use_expr(s.cond) | imp_o(s.then) | imp_o(s.else_)
    return imp(S, {ID_IO})


def tvar_o(S, env: Optional[TypeEnv] = None) -> frozenset:
    S = _seq(S)
    if not contains_output(S):
        return EMPTY
    if len(S) > 1:
        if contains_output(S[-1:]):
            return tvar(S[:-1], env) | imp(S[:-1], tvar_o(S[-1:], env))
        return tvar_o(S[:-1], env)
    s = S[0]
    if isinstance(s, Output):
        return err_vars(s.expr)
    if isinstance(s, If):
        return use_expr(s.cond) | tvar_o(s.then, env) | tvar_o(s.else_, env)
    return tvar(S, env)


def ovar(S, env: Optional[TypeEnv] = None) -> frozenset:
    return imp_o(S) | tvar_o(S, env)


def output_vars(S, env: Optional[TypeEnv] = None) -> dict:
    io, to = imp_o(S), tvar_o(S, env)
    return {"impO": io, "tvarO": to, "ovar": io | to}


def analyze(S, env: Optional[TypeEnv] = None) -> dict:
    """All analyses of a sequence, as sorted lists (the ``analyze`` report)."""
    sets = syntactic_sets(S)
    sets.update(termination_vars(S, env))
    sets.update(output_vars(S, env))
    report = {k: sorted(sets[k]) for k in
              ("use", "def", "lvar", "cvar", "tvar", "impO", "tvarO", "ovar")}
    report["size"] = size(S)
    return report
