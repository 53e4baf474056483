"""Small-step interpreter for W programs.

One call to ``step`` applies exactly one rule to the leftmost redex.  A whole
expression is evaluated in a single step; only the index variable of an array
l-value is looked up in a step of its own.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .lang import (
    INT, INT_MAX, INT_MIN, LONG_MAX, LONG_MIN, SKIP, Assign, Binary, Elem, EnumEq,
    If, Input, IntLit, LabelLit, Name, Output, Program, Skip, Ty, TypeEnv, Unary,
    While, fmt_stmt, loop_labels, typecheck,
)

DIV_BY_ZERO = "DivByZero"
INDEX_OOB = "IndexOOB"
VALUE_MISMATCH = "ValueMismatch"
EMPTY_INPUT = "EmptyInput"
UNDEFINED_READ = "UndefinedRead"

TERMINATED = "Terminated"
CRASHED = "Crashed"
FUEL_EXHAUSTED = "FuelExhausted"


@dataclass(frozen=True)
class Undef:
    ty: Ty


@dataclass(frozen=True)
class Event:
    kind: str  # "in" | "out"
    value: int
    origin: Optional[str] = None  # prompt label behind an Out event
    # enum label an input was converted to; informational only
    label: Optional[str] = field(default=None, compare=False)

    def __str__(self):
        tag = f" #pmpt:{self.origin}" if self.origin else ""
        return f"{self.kind} {self.value}{tag}"


def In(v: int, label: Optional[str] = None) -> Event:
    return Event("in", v, None, label)


def Out(v: int, origin: Optional[str] = None) -> Event:
    return Event("out", v, origin)


@dataclass(frozen=True)
class ExecState:
    crash: int
    overflow: int
    tenv: TypeEnv = field(compare=False)
    loops: dict
    vals: dict  # scalar name or (array name, index) -> value
    inputs: tuple  # remaining input sequence
    io: tuple  # I/O sequence so far
    cause: Optional[str] = None
    undef_read: bool = False


@dataclass(frozen=True)
class Config:
    rest: tuple
    state: ExecState


@dataclass
class RunResult:
    outcome: str
    steps: int
    final: Config
    cause: Optional[str] = None

    @property
    def trace(self) -> tuple:
        return self.final.state.io

    @property
    def undefined_read(self) -> bool:
        return self.final.state.undef_read

    def to_json(self) -> dict:
        d = {"outcome": self.outcome}
        if self.cause:
            d["cause"] = self.cause
        d["steps"] = self.steps
        d["trace"] = [str(e) for e in self.trace]
        d["undefinedRead"] = self.undefined_read
        return d


class EvalError(Exception):
    def __init__(self, cause: str):
        super().__init__(cause)
        self.cause = cause


def wrap64(v: int) -> tuple:
    w = (v - LONG_MIN) % 2 ** 64 + LONG_MIN
    return w, int(w != v)


def _div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def eval_expr(e, st: ExecState) -> tuple:
    """Evaluate ``e``; returns (value, overflow bit) or (EvalError, 0)."""
    of = [0]

    def arith(v):
        w, bit = wrap64(v)
        of[0] |= bit
        return w

    def read(key):
        v = st.vals[key]
        if isinstance(v, Undef):
            raise EvalError(UNDEFINED_READ)
        return v

    def ev(e):
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, LabelLit):
            return e
        if isinstance(e, Name):
            return read(e.id)
        if isinstance(e, Elem):
            idx = e.index if isinstance(e.index, int) else read(e.index)
            n = st.tenv.vars[e.id].size
            if not isinstance(idx, int) or not 1 <= idx <= n:
                raise EvalError(INDEX_OOB)
            return read((e.id, idx))
        if isinstance(e, EnumEq):
            return int(read(e.id) == LabelLit(e.label))
        if isinstance(e, Unary):
            a = ev(e.arg)
            return arith(-a) if e.op == "-" else int(a == 0)
        if isinstance(e, Binary):
            a, b = ev(e.left), ev(e.right)
            op = e.op
            if op == "==":
                return int(a == b)
            if op == "!=":
                return int(a != b)
            if op == "+":
                return arith(a + b)
            if op == "-":
                return arith(a - b)
            if op == "*":
                return arith(a * b)
            if op in ("/", "%"):
                if b == 0:
                    raise EvalError(DIV_BY_ZERO)
                q = _div(a, b)
                return arith(q) if op == "/" else arith(a - b * q)
            if op == "<":
                return int(a < b)
            if op == "<=":
                return int(a <= b)
            if op == ">":
                return int(a > b)
            if op == ">=":
                return int(a >= b)
            # logical operators evaluate both operands
            if op == "&&":
                return int(a != 0 and b != 0)
            if op == "||":
                return int(a != 0 or b != 0)
        raise ValueError(f"cannot evaluate {e!r}")

    try:
        return ev(e), of[0]
    except EvalError as err:
        return err, 0


def _lit(v):
    return v if isinstance(v, LabelLit) else IntLit(v)


def _crash(c: Config, cause: str) -> Config:
    st = replace(c.state, crash=1, cause=cause,
                 undef_read=c.state.undef_read or cause == UNDEFINED_READ)
    return Config(c.rest, st)


def _eval_into(c: Config, e, rebuild) -> Config:
    v, bit = eval_expr(e, c.state)
    if isinstance(v, EvalError):
        return _crash(c, v.cause)
    st = c.state if not bit else replace(c.state, overflow=1)
    return Config((rebuild(_lit(v)),) + c.rest[1:], st)


def _write(st: ExecState, key, v) -> ExecState:
    vals = dict(st.vals)
    vals[key] = v
    return replace(st, vals=vals)


def _value(lit):
    return lit.value if isinstance(lit, IntLit) else lit


def step(c: Config) -> Config:
    """Apply one rule to the configuration."""
    st = c.state
    if st.crash:
        return c
    s, tail = c.rest[0], c.rest[1:]
    env = st.tenv

    if isinstance(s, Skip):
        return Config(tail, st) if tail else c

    if isinstance(s, Assign):
        lv = s.lval
        if isinstance(lv, Elem) and isinstance(lv.index, str):
            v = st.vals[lv.index]
            if isinstance(v, Undef):
                return _crash(c, UNDEFINED_READ)
            return Config((Assign(Elem(lv.id, v), s.expr),) + tail, st)
        if not isinstance(s.expr, (IntLit, LabelLit)):
            return _eval_into(c, s.expr, lambda lit: Assign(lv, lit))
        v = _value(s.expr)
        decl = env.vars[lv.id]
        if isinstance(lv, Elem):
            if not 1 <= lv.index <= decl.size:
                return _crash(c, INDEX_OOB)
            key = (lv.id, lv.index)
        else:
            key = lv.id
        if decl.ty == INT and isinstance(v, int) and not INT_MIN <= v <= INT_MAX:
            return _crash(c, VALUE_MISMATCH)
        return Config((SKIP,) + tail, _write(st, key, v))

    if isinstance(s, Input):
        if not st.inputs:
            return _crash(c, EMPTY_INPUT)
        v = st.inputs[0]
        ty = env.vars[s.id].ty
        label = None
        if ty.kind == "int":
            if not INT_MIN <= v <= INT_MAX:
                return _crash(c, VALUE_MISMATCH)
            stored = v
        elif ty.kind == "enum":
            labels = env.enums[ty.name]
            if not 1 <= v <= len(labels):
                return _crash(c, VALUE_MISMATCH)
            label = labels[v - 1]
            stored = LabelLit(label)
        else:
            stored = v
        st = _write(st, s.id, stored)
        st = replace(st, inputs=st.inputs[1:], io=st.io + (In(v, label),))
        return Config((SKIP,) + tail, st)

    if isinstance(s, Output):
        e = s.expr
        if isinstance(e, IntLit):
            st = replace(st, io=st.io + (Out(e.value, s.origin),))
            return Config((SKIP,) + tail, st)
        if isinstance(e, LabelLit):
            owner = env.label_owner[e.name]
            if owner == "pmpt":
                return Config((Output(IntLit(env.prompt[e.name]), e.name),) + tail, st)
            idx = env.enums[owner].index(e.name) + 1
            st = replace(st, io=st.io + (Out(idx),))
            return Config((SKIP,) + tail, st)
        return _eval_into(c, e, lambda lit: Output(lit))

    if isinstance(s, If):
        if not isinstance(s.cond, IntLit):
            return _eval_into(c, s.cond, lambda lit: If(lit, s.then, s.else_))
        branch = s.then if s.cond.value != 0 else s.else_
        return Config(branch + tail, st)

    if isinstance(s, While):
        if s.value is None and not isinstance(s.cond, IntLit):
            return _eval_into(c, s.cond, lambda lit: replace(s, value=_value(lit)))
        v = s.value if s.value is not None else s.cond.value
        loops = dict(st.loops)
        if v != 0:
            loops[s.label] = loops.get(s.label, 0) + 1
            return Config(s.body + (replace(s, value=None),) + tail, replace(st, loops=loops))
        loops[s.label] = 0
        return Config((SKIP,) + tail, replace(st, loops=loops))

    raise ValueError(f"cannot step {s!r}")


def is_terminal(c: Config) -> bool:
    return len(c.rest) == 1 and isinstance(c.rest[0], Skip) and not c.state.crash


def _coerce_init(v, env: TypeEnv):
    if isinstance(v, str):
        return LabelLit(v)
    return v


def init_config(p: Program, inputs=(), env: Optional[TypeEnv] = None,
                init: Optional[dict] = None) -> Config:
    """Initial configuration: flags clear, counters zero, every cell undefined.

    ``init`` optionally gives starting values for scalars (by name) or array
    cells (by ``(name, index)``); labels are given by name.
    """
    env = env or typecheck(p)
    vals = {}
    for d in p.vars:
        if d.size is None:
            vals[d.name] = Undef(d.ty)
        else:
            for i in range(1, d.size + 1):
                vals[(d.name, i)] = Undef(d.ty)
    for k, v in (init or {}).items():
        if k not in vals:
            raise KeyError(f"no variable or cell {k!r} to initialise")
        vals[k] = _coerce_init(v, env)
    for v in inputs:
        if not LONG_MIN <= v <= LONG_MAX:
            raise ValueError(f"input {v} outside the 64-bit range")
    loops = {n: 0 for n in loop_labels(p.entry)}
    st = ExecState(0, 0, env, loops, vals, tuple(inputs), ())
    return Config(p.entry, st)


def run_config(c: Config, fuel: int, on_step: Optional[Callable] = None) -> RunResult:
    steps = 0
    while True:
        if c.state.crash:
            return RunResult(CRASHED, steps, c, c.state.cause)
        if is_terminal(c):
            return RunResult(TERMINATED, steps, c)
        if steps >= fuel:
            return RunResult(FUEL_EXHAUSTED, steps, c)
        nxt = step(c)
        steps += 1
        if on_step:
            on_step(c, nxt)
        c = nxt


def run(p: Program, inputs=(), fuel: int = 100000, env: Optional[TypeEnv] = None,
        init: Optional[dict] = None, on_step: Optional[Callable] = None) -> RunResult:
    """Run ``p`` on ``inputs`` for at most ``fuel`` steps."""
    if fuel < 1:
        raise ValueError("fuel must be positive")
    return run_config(init_config(p, inputs, env, init), fuel, on_step)


def out_prefix(trace) -> tuple:
    """The I/O sequence up to and including its last output event."""
    trace = tuple(trace)
    for i in range(len(trace) - 1, -1, -1):
        if trace[i].kind == "out":
            return trace[:i + 1]
    return ()


def fmt_trace(trace) -> str:
    return "\n".join(str(e) for e in trace)


def parse_trace(text: str) -> tuple:
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        origin = parts[2][len("#pmpt:"):] if len(parts) > 2 else None
        out.append(Event(parts[0], int(parts[1]), origin))
    return tuple(out)


def fmt_value(v) -> str:
    if isinstance(v, Undef):
        return "udf"
    if isinstance(v, LabelLit):
        return v.name
    return str(v)


def snapshot(c: Config) -> str:
    """Single-line rendering of a configuration, used by the golden traces."""
    st = c.state
    rest = " ".join(fmt_stmt(s, 0, False) for s in c.rest)
    loops = ",".join(f"{k}:{v}" for k, v in sorted(st.loops.items()))

    def key(k):
        return (k[0], k[1]) if isinstance(k, tuple) else (k, 0)

    cells = []
    for k in sorted(st.vals, key=key):
        name = f"{k[0]}[{k[1]}]" if isinstance(k, tuple) else k
        cells.append(f"{name}={fmt_value(st.vals[k])}")
    ins = ",".join(str(v) for v in st.inputs)
    io = ",".join(str(e) for e in st.io)
    return (f"{rest} | f={st.crash} of={st.overflow} | loops={{{loops}}}"
            f" | {{{', '.join(cells)}}} | in=[{ins}] | io=[{io}]")
