"""Command-line interface.

Exit status is 0 when every validation and assertion passes, 1 when a
check or assertion fails, and 2 on usage, parse or I/O errors.  Reports are
written without timing information so identical inputs give identical
bytes; wall time goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import config, experiments as X, nets
from .config import ResourceError
from .evaluator import EvalError, EvalOptions, eval_with_witness, evaluate
from .formula import ast as A
from .formula.parser import ParseError, parse_classical, parse_formula_file
from .formula.rewrite import classical_to_continuous
from .pl import DomainError
from .signature import Signature, validate_signature
from .structures import (FiniteStructure, QuotientError, StructureError, compliance_report,
                         quotient_discretize, validate_structure)

FAIL, USAGE = 1, 2


class CliError(Exception):
    def __init__(self, message, code=USAGE):
        super().__init__(message)
        self.code = code


def _fmt(v: float) -> str:
    return "%.12g" % v


def _emit(args, text: str):
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _signature(path) -> Signature:
    try:
        return Signature.from_json(json.loads(_read(path)))
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"{path}: bad signature file: {exc}") from None


def _structure(path) -> FiniteStructure:
    try:
        return FiniteStructure.load(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"{path}: bad structure file: {exc}") from None


def _lets(items):
    out = {}
    for item in items or []:
        name, sep, val = item.partition("=")
        if not sep:
            raise CliError(f"--let expects var=point, got {item!r}")
        out[name.strip()] = val.strip()
    return out


# -- commands ---------------------------------------------------------------------

def cmd_check(args) -> int:
    sig = _signature(args.sig)
    problems = validate_signature(sig)
    for p in problems:
        print(f"{args.sig}: {p}", file=sys.stderr)
    text = _read(args.formula)
    try:
        if args.classical:
            phi = parse_classical(text, sig)
            shown = A.show_classical(phi)
        else:
            phi, _ = parse_formula_file(text, sig)
            shown = A.show(phi)
    except (A.FormulaError, DomainError) as exc:
        print(f"{args.formula}: {exc}", file=sys.stderr)
        return FAIL
    free = A.free_vars(phi)
    _emit(args, _dump({"formula": shown, "free_vars": free,
                       "quantifier_depth": A.quantifier_depth(phi) if not args.classical else None,
                       "signature_problems": problems, "ok": not problems}))
    return FAIL if problems else 0


def _validated(S: FiniteStructure, path):
    problems = validate_structure(S)
    rep = compliance_report(S) if not problems else None
    if rep is not None and rep.classification == "invalid":
        problems = [f"symbol {s.name!r}: {s.status}" for s in rep.symbols if s.status == "violation"]
    for p in problems:
        print(f"{path}: {p}", file=sys.stderr)
    return not problems


def cmd_eval(args) -> int:
    S = _structure(args.structure)
    if not args.no_validate and not _validated(S, args.structure):
        return FAIL
    try:
        phi, _ = parse_formula_file(_read(args.formula), S.signature)
    except (A.FormulaError, DomainError) as exc:
        print(f"{args.formula}: {exc}", file=sys.stderr)
        return USAGE
    asg = _lets(args.let)
    opts = EvalOptions(pruning=not args.no_pruning, parallel=args.parallel, engine=args.engine,
                       cap_atoms=args.cap_atoms)
    t0 = time.perf_counter()
    if args.witness:
        res = eval_with_witness(S, phi, asg)
    else:
        res = evaluate(S, phi, asg, opts)
    print(f"atoms: {res.atoms}  wall: {time.perf_counter() - t0:.3f}s", file=sys.stderr)
    if args.format == "json" or args.witness:
        out = {"value": res.value, "text": _fmt(res.value)}
        if args.witness:
            out["witness"] = res.witness
        _emit(args, _dump(out))
    else:
        _emit(args, _fmt(res.value))
    return 0


def _space(args):
    try:
        return nets.parse_space(args.space)
    except (ValueError, IndexError) as exc:
        raise CliError(str(exc)) from None


def cmd_net(args, discretize=False) -> int:
    spec = _space(args)
    net = nets.generate_net(spec, args.m, args.cap_points)
    S = nets.discretize_symbols(net) if discretize else net.structure
    prov = dict(net.provenance())
    if discretize:
        prov["snap_errors"] = S.meta.get("snap_errors", {})
        prov["max_snap_error"] = S.meta.get("max_snap_error", 0.0)
        prov["compliance"] = compliance_report(S).classification if S.size <= 400 else "not checked"
    _emit(args, json.dumps(S.to_json()))
    if args.out:
        Path(str(args.out) + ".provenance.json").write_text(_dump(prov) + "\n")
    else:
        print(_dump({k: v for k, v in prov.items() if k != "snap_errors"}), file=sys.stderr)
    return 0


def cmd_quotient(args) -> int:
    S = _structure(args.input)
    if not _validated(S, args.input):
        return FAIL
    try:
        q = quotient_discretize(S, args.e, args.t, args.symbols.split(",") if args.symbols else None)
    except QuotientError as exc:
        print(f"{args.input}: {exc}", file=sys.stderr)
        return FAIL
    _emit(args, _dump(q.to_json(S)))
    return 0


def cmd_transform(args) -> int:
    sig = _signature(args.sig) if args.sig else None
    try:
        phi = parse_classical(_read(args.input), sig)
    except A.FormulaError as exc:
        print(f"{args.input}: {exc}", file=sys.stderr)
        return USAGE
    psi = classical_to_continuous(phi)
    if args.format == "json":
        _emit(args, _dump({"classical": A.show_classical(phi), "continuous": A.show(psi),
                           "tree": A.to_json(psi)}))
    else:
        _emit(args, A.show(psi))
    return 0


def cmd_experiment(args) -> int:
    name = args.name
    t0 = time.perf_counter()
    if name == "apaa":
        rep = X.run_apaa(args.m or 7, args.n or 2)
    elif name == "atomless":
        rep = X.run_atomless(args.m or 4)
    elif name == "circle":
        rep = X.run_circle(args.m or 8)
    elif name == "interval":
        rep = X.run_interval(args.m or 8)
    elif name == "unitary":
        n = args.n or 0
        rep = X.run_unitary_eigen(n, args.m)
    elif name == "categoricity":
        rep = X.run_categoricity(args.m or 4)
    else:
        spec = nets.parse_space(args.space or "interval")
        ms = [int(x) for x in args.ms.split(",")] if args.ms else None
        rep = X.run_convergence(spec, ms=ms, m_ref=args.mref or 1024)
    if args.seed is not None:
        rep.params["seed"] = args.seed
    print(f"{name}: atoms {rep.atoms}, wall {time.perf_counter() - t0:.3f}s, "
          f"{'pass' if rep.passed else 'FAIL'}", file=sys.stderr)
    if args.format == "csv" and name == "convergence":
        _emit(args, X.convergence_csv(rep))
    elif args.format == "text":
        lines = [f"{name} {json.dumps(rep.params)}"]
        lines += [f"{k} = {v if isinstance(v, dict) else _fmt(v)}" for k, v in rep.values.items()]
        lines += [f"{'PASS' if a['pass'] else 'FAIL'} {a['name']}: "
                  f"{_fmt(a['lhs'])} {a['op']} {_fmt(a['rhs'])}" for a in rep.assertions]
        _emit(args, "\n".join(lines))
    else:
        _emit(args, _dump(rep.to_json()))
    return 0 if rep.passed else FAIL


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None)
    common.add_argument("--cap-points", type=int, default=None)
    common.add_argument("--cap-atoms", type=float, default=None)
    common.add_argument("--tol", type=float, default=None, help="override the numeric tolerance")
    common.add_argument("--seed", type=int, default=None)

    p = argparse.ArgumentParser(prog="clw", description="Continuous-logic workbench.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[common], help="parse and check a formula file")
    s.add_argument("formula")
    s.add_argument("--sig", required=True)
    s.add_argument("--classical", action="store_true")

    s = sub.add_parser("eval", parents=[common], help="evaluate a formula on a structure")
    s.add_argument("structure")
    s.add_argument("formula")
    s.add_argument("--let", action="append", metavar="VAR=POINT")
    s.add_argument("--witness", action="store_true")
    s.add_argument("--engine", choices=("pointwise", "dense"), default="pointwise")
    s.add_argument("--no-pruning", action="store_true")
    s.add_argument("--parallel", action="store_true")
    s.add_argument("--no-validate", action="store_true")

    for name in ("net", "discretize"):
        s = sub.add_parser(name, parents=[common], help=f"{name} a built-in space")
        s.add_argument("space", help="interval | circle | ball(n[,half|proj]) | prob_algebra(m)")
        s.add_argument("--m", type=int, required=True)

    s = sub.add_parser("quotient", parents=[common], help="quotient by closeness")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--e", type=float, default=0.25)
    s.add_argument("--t", type=float, default=0.5)
    s.add_argument("--symbols", default=None)

    s = sub.add_parser("transform", parents=[common], help="classical to continuous")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--sig", default=None)

    s = sub.add_parser("experiment", parents=[common], help="run an experiment")
    s.add_argument("name", choices=X.EXPERIMENTS)
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--mref", type=int, default=None)
    s.add_argument("--space", default=None)
    s.add_argument("--ms", default=None, help="comma-separated resolutions")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cap_atoms is not None and args.cap_atoms <= 0:
        print("--cap-atoms must be positive", file=sys.stderr)
        return USAGE
    if args.cap_points is not None and args.cap_points <= 0:
        print("--cap-points must be positive", file=sys.stderr)
        return USAGE
    # overrides last for this invocation only
    saved_tol, saved_cap = config.TOL, os.environ.get("CLW_CAP_ATOMS")
    if args.tol is not None:
        config.set_tol(args.tol)
    if args.cap_atoms is not None:
        os.environ["CLW_CAP_ATOMS"] = str(int(args.cap_atoms))
    try:
        return _dispatch(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ResourceError, EvalError, StructureError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAIL
    finally:
        config.set_tol(saved_tol)
        if saved_cap is None:
            os.environ.pop("CLW_CAP_ATOMS", None)
        else:
            os.environ["CLW_CAP_ATOMS"] = saved_cap


def _dispatch(args) -> int:
    if args.command == "check":
        return cmd_check(args)
    if args.command == "eval":
        return cmd_eval(args)
    if args.command in ("net", "discretize"):
        return cmd_net(args, discretize=args.command == "discretize")
    if args.command == "quotient":
        return cmd_quotient(args)
    if args.command == "transform":
        return cmd_transform(args)
    return cmd_experiment(args)

if __name__ == "__main__":
    sys.exit(main())
