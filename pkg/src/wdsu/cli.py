"""Command line entry point.

Machine-readable JSON goes to stdout and diagnostics to stderr.  Exit codes:
0 accepted/compatible/success, 1 rejected/incompatible, 2 inconclusive,
3 usage, parse or type error.  For ``run`` the code reflects the outcome
(0 terminated, 1 crashed, 2 out of fuel).
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys

from . import analysis, dsu, equiv, update_classes as uc
from .difftest import INCONCLUSIVE, run_campaign
from .interp import CRASHED, FUEL_EXHAUSTED, TERMINATED, fmt_trace, run
from .lang import (
    DuplicateIdentifier, ParseError, TypeCheckError, fmt_program, parse_program, typecheck,
)

OK, REJECTED, INCONCLUSIVE_EXIT, ERROR = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ERROR, f"{self.prog}: error: {message}\n")


def default_fuel() -> int:
    v = os.environ.get("DSU_CHECK_FUEL")
    try:
        return int(v) if v else 100000
    except ValueError:
        return 100000


def _load(path: str):
    with open(path) as f:
        p = parse_program(f.read())
    typecheck(p)
    return p


def _ints(spec) -> list:
    """Inputs from a file of integers, or an inline comma/space separated list."""
    if spec is None:
        return []
    text = spec
    if os.path.exists(spec):
        with open(spec) as f:
            text = f.read()
    toks = [t for t in re.split(r"[\s,\[\]]+", text) if t]
    try:
        return [int(t) for t in toks]
    except ValueError:
        raise UsageError(f"inputs must be integers: {spec!r}")


def _json_arg(spec) -> dict:
    if spec is None:
        return None
    if os.path.exists(spec):
        with open(spec) as f:
            spec = f.read()
    try:
        return json.loads(spec)
    except json.JSONDecodeError as e:
        raise UsageError(f"bad JSON argument: {e}")


def _init_map(obj) -> dict:
    # "a[2]" keys address array cells
    out = {}
    for k, v in (obj or {}).items():
        m = re.fullmatch(r"(\w+)\[(\d+)\]", k)
        out[(m.group(1), int(m.group(2))) if m else k] = v
    return out


def _emit(obj, pretty: bool = False):
    print(json.dumps(obj, indent=2 if pretty else None, ensure_ascii=False))


# ---------------------------------------------------------------- commands

def cmd_parse(a) -> int:
    p = _load_untyped(a.file)
    if a.pretty:
        print(fmt_program(p))
    else:
        _emit({"ok": True, "program": fmt_program(p)})
    return OK


def _load_untyped(path):
    with open(path) as f:
        return parse_program(f.read())


def cmd_typecheck(a) -> int:
    p = _load_untyped(a.file)
    env = typecheck(p)
    _emit({"ok": True,
           "vars": {n: str(d.ty) + (f"[{d.size}]" if d.size else "") for n, d in env.vars.items()},
           "enums": {n: list(ls) for n, ls in env.enums.items()}}, a.pretty)
    return OK


def cmd_run(a) -> int:
    p = _load(a.file)
    r = run(p, _ints(a.inputs), a.fuel, init=_init_map(_json_arg(a.init)))
    if a.pretty:
        if r.trace:
            print(fmt_trace(r.trace))
        tail = f" ({r.cause})" if r.cause else ""
        print(f"-- {r.outcome}{tail} after {r.steps} steps")
    else:
        _emit(r.to_json())
    return {TERMINATED: OK, CRASHED: REJECTED, FUEL_EXHAUSTED: INCONCLUSIVE_EXIT}[r.outcome]


def cmd_analyze(a) -> int:
    p = _load(a.file)
    _emit(analysis.analyze(p.entry, typecheck(p)), a.pretty)
    return OK


def cmd_check_equiv(a) -> int:
    p1, p2 = _load(a.old), _load(a.new)
    if a.rule == "comp":
        if not a.var:
            raise UsageError("--rule comp needs --var")
        v = equiv.check_equiv_comp(p1, p2, a.var)
    elif a.rule == "term":
        v = equiv.check_term_same(p1, p2)
    else:
        v = equiv.check_behavioral(p1, p2)
    _emit(v.to_json(), a.pretty)
    return OK if v.accepted else REJECTED


def cmd_check_update(a) -> int:
    p1, p2 = _load(a.old), _load(a.new)
    rho = _json_arg(a.rho)
    if a.cls == "auto":
        reports = uc.classify_update(p1, p2, rho)
    elif a.cls == "config":
        rho = rho if rho is not None else uc.search_rho(p1, p2)
        if rho is None:
            raise UsageError("--class config needs --rho (no valuation was found by search)")
        reports = [uc.check_new_config_vars(p1, p2, rho)]
    elif a.cls == "enum":
        try:
            reports = [uc.check_enum_extension(p1, p2)]
        except uc.IncomparableEnums as e:
            reports = [uc.UpdateClassReport(uc.ENUM_EXTENSION, equiv.Verdict(False, None, str(e)))]
    else:
        reports = [uc.CHECKERS[a.cls](p1, p2)]
    _emit([r.to_json() for r in reports], a.pretty)
    return OK if any(r.accepted for r in reports) else REJECTED


def cmd_dsu_sim(a) -> int:
    p1, p2 = _load(a.old), _load(a.new)
    try:
        res = dsu.dsu_sim(p1, p2, _ints(a.inputs), a.at_output, a.fuel,
                          _init_map(_json_arg(a.init)) or None)
    except dsu.InvalidUpdatePoint as e:
        raise UsageError(str(e))
    if a.pretty:
        print("\n".join(res["combined"]))
    _emit(res, a.pretty)
    if res["backwardCompatible"] == dsu.INCOMPATIBLE or res.get("hybridEqualsPureNew") is False:
        return REJECTED
    if not res["mapped"] or res["hybridEqualsPureNew"] is None \
            or res["backwardCompatible"] == dsu.INCONCLUSIVE:
        return INCONCLUSIVE_EXIT
    return OK


ASSUME_CLASSES = {"config", "enum", "weaken", "exit", "prompt", "init", "auto"}


def _assumptions(names, p1, p2, rho):
    out = []
    for n in names:
        if n not in ASSUME_CLASSES:
            out.append(n)  # a bare monitor name
            continue
        if n == "auto":
            reports = uc.classify_update(p1, p2, rho)
        elif n == "config":
            reports = [uc.check_new_config_vars(p1, p2, rho or {})]
        elif n == "enum":
            try:
                reports = [uc.check_enum_extension(p1, p2)]
            except uc.IncomparableEnums as e:
                raise UsageError(str(e))
        else:
            reports = [uc.CHECKERS[n](p1, p2)]
        for r in reports:
            out.extend(x for x in r.assumptions if x not in out)
    return out


def cmd_difftest(a) -> int:
    p1, p2 = _load(a.old), _load(a.new)
    rho = _json_arg(a.rho)
    names = [n for n in (a.assume or "").split(",") if n]
    assumptions = _assumptions(names, p1, p2, rho)
    res = run_campaign(p1, p2, a.trials, a.fuel, assumptions, a.seed, a.mode,
                       new_init=_init_map(rho) if rho else None, length=a.length)
    out = res.to_json(a.verbose)
    if res.diverged:
        verdict, code = "fail", REJECTED
    elif res.counts.get(INCONCLUSIVE, 0) == len(res.trials):
        verdict, code = "inconclusive", INCONCLUSIVE_EXIT
    else:
        verdict, code = "pass", OK
    out["verdict"] = verdict
    out["assumptions"] = [x if isinstance(x, str) else x.name for x in assumptions]
    _emit(out, a.pretty)
    return code


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wdsu", description="Interpreter, equivalence checker and update classifier "
                                          "for a small imperative language.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fuel = default_fuel()

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--pretty", action="store_true", help="human readable output")
        p.set_defaults(fn=fn)
        return p

    p = add("parse", cmd_parse, "parse a program and print it back")
    p.add_argument("file")
    p = add("typecheck", cmd_typecheck, "type check a program")
    p.add_argument("file")
    p = add("run", cmd_run, "run a program")
    p.add_argument("file")
    p.add_argument("--inputs", help="file of integers, or an inline list such as 1,2,3")
    p.add_argument("--fuel", type=int, default=fuel)
    p.add_argument("--init", help="JSON object (or file) of initial values")
    p = add("analyze", cmd_analyze, "print the variable analyses of a program")
    p.add_argument("file")
    p = add("check-equiv", cmd_check_equiv, "check two programs with a proof rule")
    p.add_argument("old")
    p.add_argument("new")
    p.add_argument("--rule", choices=["comp", "term", "out"], default="out")
    p.add_argument("--var")
    p = add("check-update", cmd_check_update, "classify an update")
    p.add_argument("old")
    p.add_argument("new")
    p.add_argument("--class", dest="cls", default="auto",
                   choices=["auto", "config", "enum", "weaken", "exit", "prompt", "init"])
    p.add_argument("--rho", help="JSON object (or file) with configuration values")
    p = add("dsu-sim", cmd_dsu_sim, "simulate a dynamic update before an output")
    p.add_argument("--old", required=True)
    p.add_argument("--new", required=True)
    p.add_argument("--inputs")
    p.add_argument("--at-output", type=int, default=0,
                   help="number of outputs emitted before the update (0 = before the first)")
    p.add_argument("--init", help="JSON initial values for the new program, e.g. configuration values")
    p.add_argument("--fuel", type=int, default=fuel)
    p = add("difftest", cmd_difftest, "differential testing on random inputs")
    p.add_argument("--old", required=True)
    p.add_argument("--new", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--fuel", type=int, default=fuel)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--assume", help="comma separated update classes or monitor names")
    p.add_argument("--rho", help="JSON configuration values, used as the new program's initial store")
    p.add_argument("--mode", choices=["compat", "equiv"], default="compat")
    p.add_argument("--length", type=int, default=8, help="inputs per trial")
    p.add_argument("--verbose", action="store_true", help="include every trial report")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    if getattr(a, "fuel", 1) < 1 or getattr(a, "trials", 1) < 1:
        ap.error("fuel and trials must be positive")
    try:
        return a.fn(a)
    except (ParseError, DuplicateIdentifier, TypeCheckError, UsageError, OSError) as e:
        kind = type(e).__name__
        print(f"wdsu: {kind}: {e}", file=sys.stderr)
        _emit({"error": kind, "message": str(e)})
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
