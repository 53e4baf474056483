"""Syntax of the W language: AST, parser, printer, loop labels and type checker."""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Union

INT_MIN, INT_MAX = -(2 ** 31), 2 ** 31 - 1
LONG_MIN, LONG_MAX = -(2 ** 63), 2 ** 63 - 1

# distinguished variables for the input sequence and the I/O sequence
ID_I = "id_I"
ID_IO = "id_IO"

KEYWORDS = {"prompt", "enum", "int", "long", "pmpt", "if", "else", "while",
            "input", "output", "skip"}


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class DuplicateIdentifier(Exception):
    pass


class TypeCheckError(Exception):
    def __init__(self, rule: str, msg: str):
        super().__init__(f"[{rule}] {msg}")
        self.rule = rule


class InputOfPromptType(TypeCheckError):
    def __init__(self, name: str):
        super().__init__("Tinput", f"cannot input into prompt-typed variable {name}")


# ---------------------------------------------------------------- AST

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class LabelLit:
    name: str


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class Elem:
    id: str
    index: Union[int, str]  # literal index or index variable


@dataclass(frozen=True)
class EnumEq:
    id: str
    label: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[IntLit, LabelLit, Name, Elem, EnumEq, Unary, Binary]
Lval = Union[Name, Elem]


@dataclass(frozen=True)
class Assign:
    lval: Lval
    expr: Expr


@dataclass(frozen=True)
class Input:
    id: str


@dataclass(frozen=True)
class Output:
    expr: Expr
    # set only at run time, once Out-3 has rewritten a prompt label
    origin: Optional[str] = None


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple
    else_: tuple


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple
    # labels do not take part in structural matching
    label: int = field(default=-1, compare=False)
    # evaluated predicate, only present inside a running configuration
    value: Optional[object] = None


Stmt = Union[Assign, Input, Output, Skip, If, While]
SKIP = Skip()


@dataclass(frozen=True)
class Ty:
    kind: str  # int | long | pmpt | enum
    name: Optional[str] = None

    def __str__(self):
        return f"enum {self.name}" if self.kind == "enum" else self.kind


INT, LONG, PMPT = Ty("int"), Ty("long"), Ty("pmpt")


@dataclass(frozen=True)
class VarDecl:
    name: str
    ty: Ty
    size: Optional[int] = None


@dataclass(frozen=True)
class EnumDecl:
    name: str
    labels: tuple


@dataclass(frozen=True)
class Program:
    prompt: Optional[tuple]  # ((label, value), ...) or None
    enums: tuple
    vars: tuple
    entry: tuple


def is_simple(s) -> bool:
    return not isinstance(s, (If, While))


def is_value(e) -> bool:
    return isinstance(e, (IntLit, LabelLit))


# ---------------------------------------------------------------- lexer

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>//[^\n]*)
  | (?P<int>\d+) | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|==|!=|<=|>=|&&|\|\||[-+*/%<>!(){}\[\];,:])
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> list:
    toks = []
    pos, line, lstart = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - lstart + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            lstart = m.end()
        elif kind not in ("ws", "comment"):
            text = m.group()
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            toks.append(Tok(kind, text, line, m.start() - lstart + 1))
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - lstart + 1))
    return toks


# ---------------------------------------------------------------- parser

_PREC = [("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="), ("+", "-"), ("*", "/", "%")]


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0
        self.labels = set()

    def peek(self, k=0) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text, k=0) -> bool:
        t = self.peek(k)
        return t.kind in ("op", "kw") and t.text == text

    def next(self) -> Tok:
        t = self.peek()
        self.i += 1
        return t

    def fail(self, msg, t=None):
        t = t or self.peek()
        raise ParseError(msg, t.line, t.col)

    def expect(self, text) -> Tok:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.peek().text or 'end of input'!r}")
        return self.next()

    def ident(self) -> str:
        t = self.peek()
        if t.kind != "ident":
            self.fail(f"expected identifier, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def integer(self) -> int:
        neg = False
        if self.at("-"):
            self.next()
            neg = True
        t = self.peek()
        if t.kind != "int":
            self.fail("expected integer literal")
        self.i += 1
        v = -int(t.text) if neg else int(t.text)
        if not LONG_MIN <= v <= LONG_MAX:
            self.fail("integer literal out of 64-bit range", t)
        return v

    def program(self) -> Program:
        names = []
        prompt = None
        if self.at("prompt"):
            self.next()
            self.expect("{")
            items = []
            while True:
                lab = self.ident()
                self.expect(":")
                items.append((lab, self.integer()))
                names.append(lab)
                if not self.at(","):
                    break
                self.next()
            self.expect("}")
            if self.at(";"):
                self.next()
            prompt = tuple(items)
        enums = []
        while self.at("enum") and self.peek(2).text == "{":
            self.next()
            name = self.ident()
            self.expect("{")
            labs = [self.ident()]
            while self.at(","):
                self.next()
                labs.append(self.ident())
            self.expect("}")
            if self.at(";"):
                self.next()
            enums.append(EnumDecl(name, tuple(labs)))
            names.append(name)
            names.extend(labs)
        decls = []
        while self.at("int") or self.at("long") or self.at("pmpt") or self.at("enum"):
            kw = self.next().text
            ty = Ty("enum", self.ident()) if kw == "enum" else Ty(kw)
            t = self.peek()
            name = self.ident()
            if name in (ID_I, ID_IO):
                self.fail(f"{name} is reserved", t)
            size = None
            if self.at("["):
                self.next()
                size = self.integer()
                self.expect("]")
            self.expect(";")
            decls.append(VarDecl(name, ty, size))
            names.append(name)
        seen = set()
        for n in names:
            if n in seen:
                raise DuplicateIdentifier(f"identifier {n!r} declared more than once")
            seen.add(n)
        for lab, _ in prompt or ():
            self.labels.add(lab)
        for en in enums:
            self.labels.update(en.labels)
        entry = self.stmts(lambda: self.peek().kind == "eof")
        return label_loops(Program(prompt, tuple(enums), tuple(decls), entry))

    def stmts(self, done) -> tuple:
        out = []
        while not done():
            out.append(self.stmt())
        if not out:
            self.fail("expected at least one statement")
        return tuple(out)

    def block(self) -> tuple:
        self.expect("{")
        body = self.stmts(lambda: self.at("}") or self.peek().kind == "eof")
        self.expect("}")
        return body

    def stmt(self):
        if self.at("skip"):
            self.next()
            self.expect(";")
            return SKIP
        if self.at("input"):
            self.next()
            name = self.ident()
            self.expect(";")
            return Input(name)
        if self.at("output"):
            self.next()
            e = self.expr()
            self.expect(";")
            return Output(e)
        if self.at("if"):
            self.next()
            self.expect("(")
            c = self.expr()
            self.expect(")")
            then = self.block()
            else_ = (SKIP,)
            if self.at("else"):
                self.next()
                else_ = self.block()
            return If(c, then, else_)
        if self.at("while"):
            self.next()
            self.expect("(")
            c = self.expr()
            self.expect(")")
            return While(c, self.block())
        if self.peek().kind == "ident":
            lv = self.lval()
            self.expect(":=")
            e = self.expr()
            self.expect(";")
            return Assign(lv, e)
        self.fail(f"unexpected {self.peek().text or 'end of input'!r}")

    def lval(self):
        name = self.ident()
        if self.at("["):
            self.next()
            t = self.peek()
            if t.kind == "ident":
                idx = self.ident()
            elif t.kind == "int":
                idx = self.integer()
            else:
                self.fail("array index must be an identifier or an integer literal")
            self.expect("]")
            return Elem(name, idx)
        return Name(name)

    def expr(self, level=0):
        if level == len(_PREC):
            return self.unary()
        left = self.expr(level + 1)
        while self.peek().kind == "op" and self.peek().text in _PREC[level]:
            op = self.next().text
            right = self.expr(level + 1)
            if op == "==" and isinstance(left, Name) and isinstance(right, LabelLit):
                left = EnumEq(left.id, right.name)
            else:
                left = Binary(op, left, right)
        return left

    def unary(self):
        if self.at("-") or self.at("!"):
            op = self.next().text
            if op == "-" and self.peek().kind == "int":
                self.i -= 1
                return IntLit(self.integer())
            return Unary(op, self.unary())
        return self.primary()

    def primary(self):
        t = self.peek()
        if t.kind == "int":
            return IntLit(self.integer())
        if self.at("("):
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            if t.text in self.labels:
                self.next()
                return LabelLit(t.text)
            return self.lval()
        self.fail(f"unexpected {t.text or 'end of input'!r} in expression")


def parse_program(source: str) -> Program:
    """Parse concrete syntax into a loop-labelled Program."""
    return _Parser(source).program()


def label_loops(p: Program) -> Program:
    """Number every while statement in pre-order source order starting at 0."""
    counter = [0]

    def seq(ss):
        return tuple(stmt(s) for s in ss)

    def stmt(s):
        if isinstance(s, If):
            return If(s.cond, seq(s.then), seq(s.else_))
        if isinstance(s, While):
            n = counter[0]
            counter[0] += 1
            return replace(s, body=seq(s.body), label=n)
        return s

    return replace(p, entry=seq(p.entry))


def loop_labels(ss) -> list:
    out = []
    for s in ss:
        if isinstance(s, If):
            out += loop_labels(s.then) + loop_labels(s.else_)
        elif isinstance(s, While):
            out.append(s.label)
            out += loop_labels(s.body)
    return out


# ---------------------------------------------------------------- printer

def fmt_expr(e) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, LabelLit):
        return e.name
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Elem):
        return f"{e.id}[{e.index}]"
    if isinstance(e, EnumEq):
        return f"{e.id} == {e.label}"
    if isinstance(e, Unary):
        return e.op + _wrap(e.arg)
    if isinstance(e, Binary):
        return f"{_wrap(e.left)} {e.op} {_wrap(e.right)}"
    return repr(e)


def _wrap(e) -> str:
    s = fmt_expr(e)
    if isinstance(e, (Binary, EnumEq, Unary)) or (isinstance(e, IntLit) and e.value < 0):
        return f"({s})"
    return s


def fmt_stmt(s, indent: int = 0, multiline: bool = True) -> str:
    pad = "  " * indent if multiline else ""
    if isinstance(s, Skip):
        return pad + "skip;"
    if isinstance(s, Assign):
        return f"{pad}{fmt_expr(s.lval)} := {fmt_expr(s.expr)};"
    if isinstance(s, Input):
        return f"{pad}input {s.id};"
    if isinstance(s, Output):
        tag = f" #pmpt:{s.origin}" if s.origin else ""
        return f"{pad}output {fmt_expr(s.expr)};{tag}"
    if isinstance(s, If):
        c = fmt_expr(s.cond)
        return (f"{pad}if ({c}) {_block(s.then, indent, multiline)}"
                f" else {_block(s.else_, indent, multiline)}")
    if isinstance(s, While):
        lab = f"<{s.label}>" if not multiline else ""
        val = f"[{fmt_value(s.value)}]" if s.value is not None else ""
        return f"{pad}while{lab}{val} ({fmt_expr(s.cond)}) {_block(s.body, indent, multiline)}"
    return pad + repr(s)


def fmt_value(v) -> str:
    from . import interp
    return interp.fmt_value(v)


def _block(ss, indent, multiline) -> str:
    if not multiline:
        return "{ " + " ".join(fmt_stmt(s, 0, False) for s in ss) + " }"
    inner = "\n".join(fmt_stmt(s, indent + 1) for s in ss)
    return "{\n" + inner + "\n" + "  " * indent + "}"


def fmt_seq(ss, multiline: bool = True) -> str:
    sep = "\n" if multiline else " "
    return sep.join(fmt_stmt(s, 0, multiline) for s in ss)


def fmt_program(p: Program) -> str:
    lines = []
    if p.prompt is not None:
        lines.append("prompt {" + ", ".join(f"{l}: {v}" for l, v in p.prompt) + "}")
    for en in p.enums:
        lines.append(f"enum {en.name} {{{', '.join(en.labels)}}};")
    for d in p.vars:
        arr = f"[{d.size}]" if d.size is not None else ""
        lines.append(f"{d.ty} {d.name}{arr};")
    lines.append(fmt_seq(p.entry))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- types

@dataclass
class TypeEnv:
    vars: dict  # name -> VarDecl
    enums: dict  # enum name -> tuple of labels
    prompt: dict  # prompt label -> int
    label_owner: dict  # label -> enum name, or "pmpt"

    def var_type(self, name: str) -> Optional[Ty]:
        d = self.vars.get(name)
        return d.ty if d else None

    def is_array(self, name: str) -> bool:
        d = self.vars.get(name)
        return d is not None and d.size is not None

    def lval_type(self, lv) -> Optional[Ty]:
        return self.var_type(lv.id)


def _numeric(t: Ty) -> bool:
    return t.kind in ("int", "long")


def literal_type(v: int) -> Ty:
    return INT if INT_MIN <= v <= INT_MAX else LONG


def type_of(e, env: TypeEnv) -> Ty:
    """Type of an expression, raising TypeCheckError on misuse."""
    if isinstance(e, IntLit):
        return literal_type(e.value)
    if isinstance(e, LabelLit):
        owner = env.label_owner.get(e.name)
        if owner is None:
            raise TypeCheckError("Topnd", f"unknown label {e.name}")
        return PMPT if owner == "pmpt" else Ty("enum", owner)
    if isinstance(e, Name):
        d = env.vars.get(e.id)
        if d is None:
            raise TypeCheckError("Topnd", f"undeclared variable {e.id}")
        if d.size is not None:
            raise TypeCheckError("Topnd", f"array {e.id} used without an index")
        return d.ty
    if isinstance(e, Elem):
        d = env.vars.get(e.id)
        if d is None or d.size is None:
            raise TypeCheckError("Tarray1", f"{e.id} is not an array")
        if isinstance(e.index, int):
            if not 1 <= e.index <= d.size:
                raise TypeCheckError("Tarray2", f"index {e.index} outside 1..{d.size} of {e.id}")
        else:
            it = type_of(Name(e.index), env)
            if not _numeric(it):
                raise TypeCheckError("Tarray1", f"index {e.index} of {e.id} is not numeric")
        return d.ty
    if isinstance(e, EnumEq):
        t = type_of(Name(e.id), env)
        owner = env.label_owner.get(e.label)
        ok = (t.kind == "enum" and owner == t.name) or (t == PMPT and owner == "pmpt")
        if not ok:
            raise TypeCheckError("Tequiv", f"{e.id} == {e.label} compares across types")
        return LONG
    if isinstance(e, Unary):
        t = type_of(e.arg, env)
        if not _numeric(t):
            raise TypeCheckError("Tother", f"operator {e.op} applied to {t}")
        return INT if e.op == "!" else t
    if isinstance(e, Binary):
        lt, rt = type_of(e.left, env), type_of(e.right, env)
        if e.op in ("==", "!=") and lt == rt and lt.kind in ("enum", "pmpt"):
            return INT
        if not (_numeric(lt) and _numeric(rt)):
            raise TypeCheckError("Tother", f"operator {e.op} applied to {lt} and {rt}")
        if e.op in ("+", "-", "*", "/", "%"):
            return INT if lt == INT and rt == INT else LONG
        return INT
    raise TypeCheckError("Tother", f"unknown expression {e!r}")


def assignable(target: Ty, source: Ty) -> bool:
    return target == source or (target == LONG and source == INT)


def build_env(p: Program) -> TypeEnv:
    owner = {}
    for lab, _ in p.prompt or ():
        owner[lab] = "pmpt"
    enums = {}
    for en in p.enums:
        if not en.labels:
            raise TypeCheckError("Tlabels", f"enum {en.name} has no labels")
        enums[en.name] = en.labels
        for lab in en.labels:
            owner[lab] = en.name
    vars_ = {}
    for d in p.vars:
        if d.ty.kind == "enum" and d.ty.name not in enums:
            raise TypeCheckError("Tenum", f"unknown enum type {d.ty.name}")
        if d.ty.kind == "pmpt" and p.prompt is None:
            raise TypeCheckError("Tprompt", f"{d.name} has prompt type but no prompt is declared")
        if d.size is not None and d.size <= 0:
            raise TypeCheckError("Tvar2", f"array {d.name} needs a positive size")
        vars_[d.name] = d
    return TypeEnv(vars_, enums, dict(p.prompt or ()), owner)


def check_stmt(s, env: TypeEnv):
    if isinstance(s, Skip):
        return
    if isinstance(s, Assign):
        lt = type_of(s.lval, env)
        et = type_of(s.expr, env)
        if not assignable(lt, et):
            raise TypeCheckError("Tassign", f"cannot assign {et} to {fmt_expr(s.lval)} of type {lt}")
        return
    if isinstance(s, Input):
        d = env.vars.get(s.id)
        if d is None:
            raise TypeCheckError("Topnd", f"undeclared variable {s.id}")
        if d.size is not None:
            raise TypeCheckError("Tinput", f"cannot input into array {s.id}")
        if d.ty == PMPT:
            raise InputOfPromptType(s.id)
        return
    if isinstance(s, Output):
        type_of(s.expr, env)
        return
    if isinstance(s, (If, While)):
        rule = "Tif" if isinstance(s, If) else "Twhile"
        t = type_of(s.cond, env)
        if not _numeric(t):
            raise TypeCheckError(rule, f"predicate has type {t}")
        for b in ((s.then, s.else_) if isinstance(s, If) else (s.body,)):
            for x in b:
                check_stmt(x, env)
        return
    raise TypeCheckError("Tseq", f"unknown statement {s!r}")


def typecheck(p: Program) -> TypeEnv:
    """Build the type environment and check every statement of the entry."""
    env = build_env(p)
    for s in p.entry:
        check_stmt(s, env)
    return env


def load_program(source: str) -> tuple:
    p = parse_program(source)
    return p, typecheck(p)
