"""Syntax trees for continuous-logic terms and formulas, and classical formulas.

Nodes are frozen dataclasses, so trees are hashable and compare structurally.
``show`` prints a tree in the concrete syntax accepted by
:func:`clw.formula.parser.parse_formula`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

from ..pl import PLFunc


class FormulaError(ValueError):
    pass


# -- terms ------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class App:
    func: str
    args: tuple


Term = Union[Var, Const, App]


# -- continuous formulas ----------------------------------------------------

@dataclass(frozen=True)
class Dist:
    left: Term
    right: Term


@dataclass(frozen=True)
class Pred:
    name: str
    args: tuple


@dataclass(frozen=True)
class Val:
    value: float


@dataclass(frozen=True)
class Neg:
    arg: "Formula"


@dataclass(frozen=True)
class DotMinus:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class TruncAdd:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class AbsDiff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Max:
    args: tuple


@dataclass(frozen=True)
class Min:
    args: tuple


@dataclass(frozen=True)
class Scale:
    q: float
    arg: "Formula"


@dataclass(frozen=True)
class Apply:
    name: str
    func: PLFunc
    arg: "Formula"


@dataclass(frozen=True)
class Sup:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Inf:
    var: str
    body: "Formula"


Formula = Union[Dist, Pred, Val, Neg, DotMinus, TruncAdd, AbsDiff, Max, Min,
                Scale, Apply, Sup, Inf]
BINARY = (DotMinus, TruncAdd, AbsDiff)
QUANT = (Sup, Inf)
ATOMS = (Dist, Pred)


# -- classical formulas -----------------------------------------------------

@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple


@dataclass(frozen=True)
class Not:
    arg: "ClassicalFormula"


@dataclass(frozen=True)
class And:
    left: "ClassicalFormula"
    right: "ClassicalFormula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "ClassicalFormula"


ClassicalFormula = Union[Eq, Rel, Not, And, Exists]


def Or(a, b):
    return Not(And(Not(a), Not(b)))


def Forall(v, body):
    return Not(Exists(v, Not(body)))


def Implies(a, b):
    return Not(And(a, Not(b)))


# -- convenience constructors -----------------------------------------------

def sup(vars_, body):
    for v in reversed(_names(vars_)):
        body = Sup(v, body)
    return body


def inf(vars_, body):
    for v in reversed(_names(vars_)):
        body = Inf(v, body)
    return body


def _names(vars_):
    return [vars_] if isinstance(vars_, str) else list(vars_)


def dotminus(a, b):
    return DotMinus(_f(a), _f(b))


def _f(x):
    return Val(float(x)) if isinstance(x, (int, float)) else x


# -- traversal --------------------------------------------------------------

def children(node) -> tuple:
    if isinstance(node, (Neg, Scale, Apply, Not)):
        return (node.arg,)
    if isinstance(node, (DotMinus, TruncAdd, AbsDiff, And)):
        return (node.left, node.right)
    if isinstance(node, (Max, Min)):
        return node.args
    if isinstance(node, (Sup, Inf, Exists)):
        return (node.body,)
    return ()


def term_vars(t: Term, out: dict) -> None:
    if isinstance(t, Var):
        out.setdefault(t.name, None)
    elif isinstance(t, App):
        for a in t.args:
            term_vars(a, out)


def atom_terms(node) -> tuple:
    if isinstance(node, (Dist, Eq)):
        return (node.left, node.right)
    if isinstance(node, (Pred, Rel)):
        return node.args
    return ()


def free_vars(phi) -> list[str]:
    """Free variables in first-occurrence (left-to-right) order."""
    out: dict = {}

    def go(node, bound):
        if isinstance(node, (Sup, Inf, Exists)):
            go(node.body, bound | {node.var})
            return
        found: dict = {}
        for t in atom_terms(node):
            term_vars(t, found)
        for v in found:
            if v not in bound:
                out.setdefault(v, None)
        for c in children(node):
            go(c, bound)

    go(phi, frozenset())
    return list(out)


def all_vars(phi) -> set[str]:
    out: dict = {}

    def go(node):
        if isinstance(node, (Sup, Inf, Exists)):
            out.setdefault(node.var, None)
        for t in atom_terms(node):
            term_vars(t, out)
        for c in children(node):
            go(c)

    go(phi)
    return set(out)


def walk(phi):
    yield phi
    for c in children(phi):
        yield from walk(c)


def quantifier_depth(phi) -> int:
    d = max((quantifier_depth(c) for c in children(phi)), default=0)
    return d + 1 if isinstance(phi, (Sup, Inf, Exists)) else d


def depth(phi) -> int:
    return 1 + max((depth(c) for c in children(phi)), default=0)


def term_constants(t, out):
    if isinstance(t, Const):
        out.add(t.name)
    elif isinstance(t, App):
        for a in t.args:
            term_constants(a, out)


def fresh_name(base: str, taken) -> str:
    if base not in taken:
        return base
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in taken:
            return cand


# -- structural rebuild -----------------------------------------------------

def rebuild(node, kids):
    """Return ``node`` with its formula children replaced by ``kids``."""
    if isinstance(node, Neg):
        return Neg(kids[0])
    if isinstance(node, Not):
        return Not(kids[0])
    if isinstance(node, Scale):
        return Scale(node.q, kids[0])
    if isinstance(node, Apply):
        return Apply(node.name, node.func, kids[0])
    if isinstance(node, (DotMinus, TruncAdd, AbsDiff, And)):
        return type(node)(kids[0], kids[1])
    if isinstance(node, (Max, Min)):
        return type(node)(tuple(kids))
    if isinstance(node, (Sup, Inf, Exists)):
        return type(node)(node.var, kids[0])
    return node


def subst_term(t: Term, mapping: dict) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, App):
        return App(t.func, tuple(subst_term(a, mapping) for a in t.args))
    return t


def map_atoms(node, fn):
    """Apply ``fn`` to each atomic node bottom-up; quantifiers pass through."""
    if isinstance(node, (Dist, Pred, Eq, Rel)):
        return fn(node)
    return rebuild(node, [map_atoms(c, fn) for c in children(node)])


def substitute(phi, mapping: dict):
    """Capture-avoiding simultaneous substitution of terms for free variables."""
    def term_fv(t):
        found: dict = {}
        term_vars(t, found)
        return set(found)

    def go(node, mapping):
        if not mapping:
            return node
        if isinstance(node, (Dist, Eq)):
            return type(node)(subst_term(node.left, mapping), subst_term(node.right, mapping))
        if isinstance(node, (Pred, Rel)):
            return type(node)(node.name, tuple(subst_term(a, mapping) for a in node.args))
        if isinstance(node, (Sup, Inf, Exists)):
            inner = {k: v for k, v in mapping.items() if k != node.var}
            live = {k: v for k, v in inner.items() if k in free_vars(node.body)}
            incoming = set().union(*(term_fv(t) for t in live.values())) if live else set()
            var = node.var
            if var in incoming:
                taken = all_vars(node.body) | incoming | set(live)
                new = fresh_name(var, taken)
                live = dict(live)
                live[var] = Var(new)
                var = new
            return type(node)(var, go(node.body, live))
        return rebuild(node, [go(c, mapping) for c in children(node)])

    return go(phi, dict(mapping))


def rename(phi, mapping: dict):
    return substitute(phi, {k: Var(v) for k, v in mapping.items()})


# -- pretty printing --------------------------------------------------------

def show_term(t: Term) -> str:
    if isinstance(t, (Var, Const)):
        return t.name
    return f"{t.func}({', '.join(show_term(a) for a in t.args)})"


def _num(x: float) -> str:
    return repr(float(x))


def show(phi, top: bool = True) -> str:
    """Concrete syntax for a continuous formula; re-parses to an equal tree."""
    if isinstance(phi, Dist):
        return f"d({show_term(phi.left)}, {show_term(phi.right)})"
    if isinstance(phi, Pred):
        return f"{phi.name}({', '.join(show_term(a) for a in phi.args)})"
    if isinstance(phi, Val):
        return _num(phi.value)
    if isinstance(phi, Neg):
        return f"neg({show(phi.arg)})"
    if isinstance(phi, DotMinus):
        return f"({_operand(phi.left)} -. {_operand(phi.right)})"
    if isinstance(phi, TruncAdd):
        return f"({_operand(phi.left)} +. {_operand(phi.right)})"
    if isinstance(phi, AbsDiff):
        return f"|{_operand(phi.left)} - {_operand(phi.right)}|"
    if isinstance(phi, (Max, Min)):
        name = "max" if isinstance(phi, Max) else "min"
        return f"{name}({', '.join(show(a) for a in phi.args)})"
    if isinstance(phi, Scale):
        return f"scale({_num(phi.q)}, {show(phi.arg)})"
    if isinstance(phi, Apply):
        return f"{phi.name}({show(phi.arg)})"
    if isinstance(phi, (Sup, Inf)):
        q = "sup" if isinstance(phi, Sup) else "inf"
        return f"{q} {phi.var} . {show(phi.body)}"
    raise TypeError(f"not a continuous formula: {phi!r}")


def _operand(phi) -> str:
    s = show(phi)
    return f"({s})" if isinstance(phi, QUANT) else s


def show_classical(phi) -> str:
    if isinstance(phi, Eq):
        return f"{show_term(phi.left)} = {show_term(phi.right)}"
    if isinstance(phi, Rel):
        return f"{phi.name}({', '.join(show_term(a) for a in phi.args)})"
    if isinstance(phi, Not):
        return f"~({show_classical(phi.arg)})"
    if isinstance(phi, And):
        return f"({show_classical(phi.left)} & {show_classical(phi.right)})"
    if isinstance(phi, Exists):
        return f"(exists {phi.var} . {show_classical(phi.body)})"
    raise TypeError(f"not a classical formula: {phi!r}")


# -- JSON trees (diagnostics, CLI output) -----------------------------------

def term_to_json(t: Term):
    if isinstance(t, Var):
        return {"var": t.name}
    if isinstance(t, Const):
        return {"const": t.name}
    return {"apply": t.func, "args": [term_to_json(a) for a in t.args]}


def to_json(phi):
    if isinstance(phi, (Dist, Eq)):
        tag = "dist" if isinstance(phi, Dist) else "eq"
        return {"op": tag, "args": [term_to_json(phi.left), term_to_json(phi.right)]}
    if isinstance(phi, (Pred, Rel)):
        return {"op": "pred", "name": phi.name, "args": [term_to_json(a) for a in phi.args]}
    if isinstance(phi, Val):
        return {"op": "const", "value": phi.value}
    if isinstance(phi, Scale):
        return {"op": "scale", "q": phi.q, "args": [to_json(phi.arg)]}
    if isinstance(phi, Apply):
        return {"op": "apply", "name": phi.name, "func": phi.func.to_json(),
                "args": [to_json(phi.arg)]}
    if isinstance(phi, (Sup, Inf, Exists)):
        return {"op": type(phi).__name__.lower(), "var": phi.var, "args": [to_json(phi.body)]}
    return {"op": type(phi).__name__.lower(), "args": [to_json(c) for c in children(phi)]}


# -- well-formedness --------------------------------------------------------

def check_term(t: Term, sig, bound=None) -> None:
    if isinstance(t, Var):
        if sig.kind(t.name) is not None:
            raise FormulaError(f"variable {t.name!r} clashes with a signature symbol")
    elif isinstance(t, Const):
        if sig.kind(t.name) != "constant":
            raise FormulaError(f"unknown constant {t.name!r}")
    elif isinstance(t, App):
        if sig.kind(t.func) != "function":
            raise FormulaError(f"unknown function symbol {t.func!r}")
        arity = sig.function(t.func).arity
        if arity != len(t.args):
            raise FormulaError(f"arity mismatch: {t.func!r} takes {arity} arguments, got {len(t.args)}")
        for a in t.args:
            check_term(a, sig)
    else:
        raise FormulaError(f"not a term: {t!r}")


def check_formula(phi, sig) -> None:
    """Raise :class:`FormulaError` unless ``phi`` is well formed over ``sig``.

    Besides symbol and arity checks this enforces the capture discipline: a
    quantifier never rebinds a variable bound further out, and no variable is
    both free and bound in the same formula.
    """
    free = set(free_vars(phi))

    def go(node, bound):
        if isinstance(node, (Dist, Eq)):
            check_term(node.left, sig)
            check_term(node.right, sig)
        elif isinstance(node, (Pred, Rel)):
            if sig.kind(node.name) != "predicate":
                raise FormulaError(f"unknown predicate {node.name!r}")
            arity = sig.predicate(node.name).arity
            if arity != len(node.args):
                raise FormulaError(
                    f"arity mismatch: {node.name!r} takes {arity} arguments, got {len(node.args)}")
            for a in node.args:
                check_term(a, sig)
        elif isinstance(node, Val):
            if not 0.0 <= node.value <= 1.0:
                raise FormulaError(f"constant {node.value} outside [0,1]")
        elif isinstance(node, Scale):
            if not 0.0 < node.q <= 1.0:
                raise FormulaError(f"scale factor {node.q} outside (0,1]")
        elif isinstance(node, (Max, Min)):
            if not node.args:
                raise FormulaError("empty max/min")
        elif isinstance(node, (Sup, Inf, Exists)):
            if node.var in bound:
                raise FormulaError(f"variable {node.var!r} rebound inside its own scope")
            if node.var in free:
                raise FormulaError(f"variable {node.var!r} is both free and bound")
            if sig.kind(node.var) is not None:
                raise FormulaError(f"bound variable {node.var!r} clashes with a signature symbol")
            go(node.body, bound | {node.var})
            return
        elif not isinstance(node, (Neg, DotMinus, TruncAdd, AbsDiff, Apply, Not, And)):
            raise FormulaError(f"unknown node {node!r}")
        for c in children(node):
            go(c, bound)

    go(phi, frozenset())
