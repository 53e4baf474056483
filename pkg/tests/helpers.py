"""Random program generation shared by the property and acceptance tests."""
import random

from wdsu import corpus
from wdsu.difftest import NoApplicableSite, MUTATIONS, mutate_pair
from wdsu.lang import (
    SKIP, Assign, Binary, Elem, If, Input, IntLit, Name, Output, Program, While,
    label_loops, parse_program, typecheck,
)

DECLS = "long x; long y; long z; long i; int n; long a[3];"
SCALARS = ["x", "y", "z", "i", "n"]


def prog(src: str) -> Program:
    p = parse_program(src)
    typecheck(p)
    return p


def _expr(rng, depth):
    r = rng.random()
    if depth <= 0 or r < 0.35:
        return IntLit(rng.randint(-3, 5)) if rng.random() < 0.4 else Name(rng.choice(SCALARS))
    if r < 0.45:
        return Elem("a", rng.choice([1, 2, 3, "i"]))
    op = rng.choice(["+", "-", "*", "/", "<", "==", "&&"])
    return Binary(op, _expr(rng, depth - 1), _expr(rng, depth - 1))


def _lval(rng):
    if rng.random() < 0.2:
        return Elem("a", rng.choice([1, 2, 3, "i"]))
    return Name(rng.choice([v for v in SCALARS if v != "n"] + ["n"]))


def _stmt(rng, depth):
    r = rng.random()
    if depth <= 1 or r < 0.55:
        k = rng.random()
        if k < 0.5:
            return Assign(_lval(rng), _expr(rng, 2))
        if k < 0.7:
            return Input(rng.choice(SCALARS))
        if k < 0.9:
            return Output(_expr(rng, 2))
        return SKIP
    if r < 0.8:
        return If(_expr(rng, 1), _stmts(rng, depth - 1), _stmts(rng, depth - 1))
    return While(_expr(rng, 1), _stmts(rng, depth - 1))


def _stmts(rng, depth, lo=1, hi=3):
    return tuple(_stmt(rng, depth) for _ in range(rng.randint(lo, hi)))


def random_program(seed, depth=4, length=(1, 4)) -> Program:
    """A well-typed program over DECLS whose statements nest at most ``depth`` deep."""
    rng = random.Random(seed)
    base = parse_program(DECLS + " skip;")
    while True:
        entry = _stmts(rng, depth, *length)
        p = label_loops(Program(base.prompt, base.enums, base.vars, entry))
        try:
            typecheck(p)
            return p
        except Exception:
            continue


def depth(ss) -> int:
    best = 0
    for s in ss:
        if isinstance(s, If):
            best = max(best, 1 + max(depth(s.then), depth(s.else_)))
        elif isinstance(s, While):
            best = max(best, 1 + depth(s.body))
        else:
            best = max(best, 1)
    return best


def mutated_pairs(n, seed=0, sources=None):
    """``n`` (old, new) pairs made by applying one mutation to a corpus or random program."""
    rng = random.Random(seed)
    sources = sources or [p for _, p, _ in corpus.pairs("equiv")] + [q for _, _, q in corpus.pairs("equiv")]
    out = []
    attempts = 0
    while len(out) < n and attempts < n * 20:
        attempts += 1
        p = rng.choice(sources) if rng.random() < 0.5 else random_program(rng.randrange(10**9))
        kind = rng.choice(MUTATIONS)
        try:
            out.append((p, mutate_pair(p, kind, rng.randrange(10**9))))
        except NoApplicableSite:
            continue
    return out
