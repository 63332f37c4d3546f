"""Command-line front door: ``drl <subcommand> ...``.

Exit codes: 0 success, 1 logical failure (clash, invalid, falsified, failed
check), 2 usage or I/O error. With ``--json`` every report is a single line
of JSON carrying ``"schema": SCHEMA``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import axioms as A
from . import decider as D
from . import fuzz as F
from . import kernel as K
from . import statics as ST
from . import syntax as S
from .usubst import ClashError, SubstError, apply_formula, apply_program, parse_subst

SCHEMA = "drl/1"

OK, FAIL, USAGE = 0, 1, 2


@dataclass
class Config:
    """Run settings. Defaults below; environment variables, then flags, override."""
    seed: int = 0
    samples: int = 1000
    states: int = 20
    branch_budget: int = D.DEFAULT_BRANCH_BUDGET
    atom_budget: int = K.MAX_ATOMS
    work_limit: int = F.WORK_LIMIT
    paths: list = field(default_factory=list)


ENV = {"DRL_SEED": "seed", "DRL_BUDGET": "branch_budget"}


class UsageError(Exception):
    pass


def load_config(args: argparse.Namespace, environ=None) -> Config:
    environ = os.environ if environ is None else environ
    cfg = Config()
    for var, attr in ENV.items():
        if environ.get(var, "") != "":
            try:
                setattr(cfg, attr, int(environ[var]))
            except ValueError:
                raise UsageError(f"{var} must be an integer, got {environ[var]!r}")
    for f in dataclasses.fields(cfg):
        val = getattr(args, f.name, None)
        if val is not None:
            setattr(cfg, f.name, val)
    return cfg


# ------------------------------------------------------------ helpers

def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps({"schema": SCHEMA, **payload}, sort_keys=True, default=str))
    else:
        print(text)


def _read(args) -> str:
    if getattr(args, "file", None):
        try:
            return Path(args.file).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read {args.file}: {exc.strerror}")
    if args.text is None:
        raise UsageError("expected an expression or --file")
    return args.text


def _parse_any(text: str, kind: str):
    """Parse as the requested kind; ``auto`` tries formula, program, term."""
    if kind != "auto":
        return kind, {"formula": S.parse_formula, "program": S.parse_program,
                      "term": S.parse_term}[kind](text)
    first = None
    for k, fn in (("formula", S.parse_formula), ("program", S.parse_program),
                  ("term", S.parse_term)):
        try:
            return k, fn(text)
        except SyntaxError as exc:
            first = first or exc
    raise first


def ast_json(e):
    """Tagged tree: ``{"node": ClassName, field: ...}``."""
    if isinstance(e, Fraction):
        return str(e)
    if isinstance(e, S.Variable):
        return str(e)
    if isinstance(e, tuple):
        return [ast_json(x) for x in e]
    if dataclasses.is_dataclass(e):
        out = {"node": type(e).__name__}
        for f in dataclasses.fields(e):
            out[f.name] = ast_json(getattr(e, f.name))
        return out
    return e


# ------------------------------------------------------------ subcommands

def cmd_parse(args, cfg) -> int:
    kind, e = _parse_any(_read(args), args.kind)
    tree = ast_json(e)
    _emit(args, {"command": "parse", "kind": kind, "ast": tree},
          json.dumps(tree, indent=2))
    return OK


def cmd_print(args, cfg) -> int:
    kind, e = _parse_any(_read(args), args.kind)
    if args.desugar:
        e = S.desugar(e)
    text = S.pretty(e)
    _emit(args, {"command": "print", "kind": kind, "text": text}, text)
    return OK


def cmd_statics(args, cfg) -> int:
    kind, e = _parse_any(_read(args), args.kind)
    if kind == "program":
        fv, bv, mbv = ST.fv(e), ST.bv(e), ST.mbv(e)
    elif kind == "formula":
        fv, bv, mbv = ST.fv(e), ST.bv_formula(e), None
    else:
        fv, bv, mbv = ST.fv(e), ST.EMPTY, None
    text = f"FV={fv} BV={bv}"
    payload = {"command": "statics", "kind": kind, "fv": fv.to_json(), "bv": bv.to_json()}
    if mbv is not None:
        text += f" MBV={mbv}"
        payload["mbv"] = mbv.to_json()
    _emit(args, payload, text)
    return OK


def _rules_text(args) -> str:
    if args.rules_file:
        try:
            return Path(args.rules_file).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read {args.rules_file}: {exc.strerror}")
    if args.rules is None:
        raise UsageError("expected --rules or --rules-file")
    return "\n".join(args.rules)


def cmd_subst(args, cfg) -> int:
    kind, e = _parse_any(_read(args), args.kind)
    if kind == "term":
        raise UsageError("substitution applies to formulas and programs")
    try:
        sigma = parse_subst(_rules_text(args), e)
    except SubstError as exc:
        raise UsageError(str(exc))
    taboo = ST.EMPTY
    for name in args.taboo or []:
        taboo = taboo | ST.VarSet.of(S.Variable(name.rstrip("'"), name.endswith("'")))
    try:
        if kind == "formula":
            out, v = apply_formula(sigma, taboo, e), None
        else:
            out, v = apply_program(sigma, taboo, e)
    except ClashError as exc:
        _emit(args, {"command": "subst", "ok": False, "clash": str(exc)}, f"clash: {exc}")
        return FAIL
    text = S.pretty(out)
    payload = {"command": "subst", "ok": True, "result": text}
    if v is not None:
        payload["taboo_out"] = v.to_json()
        text += f"\ntaboo out: {v}"
    _emit(args, payload, text)
    return OK


def cmd_axioms(args, cfg) -> int:
    if args.key:
        try:
            entries = [A.lookup(args.key)]
        except A.UnknownAxiom as exc:
            raise UsageError(f"unknown axiom {exc.args[0]!r}")
    else:
        entries = A.all_axioms() + (A.support_axioms() if args.all else [])
    for a in entries:
        if args.json:
            print(json.dumps({"schema": SCHEMA, "key": a.key, "formula": a.text,
                              "group": a.group}, sort_keys=True))
        else:
            print(f"{a.key}: {a.text}")
    return OK


def _script_paths(paths) -> list:
    out = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            out.extend(sorted(path.glob("*.proof.json")))
        elif path.exists():
            out.append(path)
        else:
            raise UsageError(f"no such file: {p}")
    if not out:
        raise UsageError("no proof scripts given")
    return out


def cmd_check(args, cfg) -> int:
    K.MAX_ATOMS = cfg.atom_budget
    failed = 0
    for path in _script_paths(cfg.paths):
        try:
            rep = K.check_file(path)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot load {path}: {exc}")
        failed += not rep.ok
        if args.json:
            body = rep.to_json() if args.verbose else {"name": rep.name, "ok": rep.ok,
                                                        "error": rep.error}
            if rep.ok:
                body["theorem"] = S.pretty(rep.theorem.conclusion)
            print(json.dumps({"schema": SCHEMA, "command": "check", "path": str(path), **body},
                             sort_keys=True))
        elif rep.ok:
            print(f"ok   {path}: {S.pretty(rep.theorem.conclusion)}")
        else:
            print(f"FAIL {path}: {rep.error}")
    return FAIL if failed else OK


def cmd_decide(args, cfg) -> int:
    budget = cfg.branch_budget
    if args.file:
        try:
            text = Path(args.file).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read {args.file}: {exc.strerror}")
        try:
            model = D.parse_model(text)
        except ValueError as exc:
            raise UsageError(f"{args.file}: {exc}")
        verdict = D.decide_loop(model, budget)
    elif args.idempotent:
        verdict = D.is_idempotent(args.idempotent, budget)
    elif args.left and args.right:
        verdict = D.decide_discrete(args.left, args.right, budget)
    else:
        raise UsageError("expected --file, --idempotent, or LEFT RIGHT programs")
    body = verdict.to_json()
    # verdict JSON is the native output of this subcommand
    print(json.dumps({"schema": SCHEMA, **body}, sort_keys=True))
    return FAIL if verdict.status == "invalid" else OK


def cmd_fuzz(args, cfg) -> int:
    keys = args.axiom or None
    if keys:
        for k in keys:
            if k != F.MUTANT_KEY:
                try:
                    A.lookup(k)
                except A.UnknownAxiom:
                    raise UsageError(f"unknown axiom {k!r}")
    reports = F.fuzz_axioms(keys, cfg.samples, cfg.states, cfg.seed, work=cfg.work_limit)
    for r in reports:
        if args.json:
            print(json.dumps({"schema": SCHEMA, "command": "fuzz-axioms", **r.to_json()},
                             sort_keys=True))
        else:
            status = "pass" if r.ok else "FAIL"
            print(f"{status} {r.key}: {r.instances} instances, {r.evaluations} evaluations, "
                  f"{r.falsified} falsified, {r.inconclusive} inconclusive, "
                  f"{r.seconds:.1f}s")
            if r.example:
                print(f"     counterexample: {r.example['instance']} at {r.example['state']}")
    return OK if all(r.ok for r in reports) else FAIL


# ------------------------------------------------------------ argument parsing

def _expr_args(p, kinds=("auto", "formula", "program", "term")):
    p.add_argument("text", nargs="?", help="expression text")
    p.add_argument("--file", help="read the expression from a file")
    p.add_argument("--kind", choices=kinds, default="auto")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="drl", description="Differential refinement logic tools")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="single-line JSON output")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("parse", parents=[common], help="print the syntax tree")
    _expr_args(p)
    p.set_defaults(run=cmd_parse)

    p = sub.add_parser("print", parents=[common], help="pretty-print an expression")
    _expr_args(p)
    p.add_argument("--desugar", action="store_true", help="expand diamonds and equivalences")
    p.set_defaults(run=cmd_print)

    p = sub.add_parser("statics", parents=[common], help="free, bound and must-bound variables")
    _expr_args(p)
    p.set_defaults(run=cmd_statics)

    p = sub.add_parser("subst", parents=[common], help="apply a uniform substitution")
    _expr_args(p, ("auto", "formula", "program"))
    p.add_argument("--rules", action="append", help="rule 'lhs ~> rhs' (repeatable)")
    p.add_argument("--rules-file", help="file with one rule per line")
    p.add_argument("--taboo", action="append", help="initial taboo variable (repeatable)")
    p.set_defaults(run=cmd_subst)

    p = sub.add_parser("axioms", parents=[common], help="list axioms")
    p.add_argument("--key", help="show only this axiom")
    p.add_argument("--all", action="store_true", help="include first-order support axioms")
    p.set_defaults(run=cmd_axioms)

    p = sub.add_parser("check", parents=[common], help="check proof scripts")
    p.add_argument("paths", nargs="+", help="script files or directories")
    p.add_argument("--atom-budget", dest="atom_budget", type=int,
                   help=f"propositional atom cap (default {K.MAX_ATOMS})")
    p.add_argument("--verbose", action="store_true", help="per-step JSON")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("decide", parents=[common], help="decide a refinement")
    p.add_argument("left", nargs="?", help="left loop-free program")
    p.add_argument("right", nargs="?", help="right loop-free program")
    p.add_argument("--file", help="loop model file")
    p.add_argument("--idempotent", metavar="PROGRAM", help="decide c;c equiv c")
    p.add_argument("--branch-budget", dest="branch_budget", type=int,
                   help=f"maximum normal-form branches (default {D.DEFAULT_BRANCH_BUDGET})")
    p.set_defaults(run=cmd_decide)

    p = sub.add_parser("fuzz-axioms", parents=[common], help="falsification-test axioms")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, help="instances per axiom (default 1000)")
    p.add_argument("--states", type=int, help="states per instance (default 20)")
    p.add_argument("--axiom", action="append", help="axiom key (repeatable)")
    p.add_argument("--work-limit", dest="work_limit", type=int,
                   help=f"oracle steps per evaluation (default {F.WORK_LIMIT})")
    p.set_defaults(run=cmd_fuzz)
    return ap


def main(argv: Optional[list] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code in (0, None) else USAGE
    saved_atoms = K.MAX_ATOMS
    try:
        cfg = load_config(args)
        return args.run(args, cfg)
    except UsageError as exc:
        print(f"drl {args.command}: {exc}", file=sys.stderr)
        return USAGE
    except SyntaxError as exc:
        print(f"drl {args.command}: parse error: {exc}", file=sys.stderr)
        return USAGE
    except (S.IllFormed, S.ArityError) as exc:
        print(f"drl {args.command}: {exc}", file=sys.stderr)
        return USAGE
    finally:
        K.MAX_ATOMS = saved_atoms


if __name__ == "__main__":
    sys.exit(main())
