"""Structural rewrites: constant abstraction, predicate substitution, the
classical-to-continuous transform, and value sets over classical structures."""

from __future__ import annotations

import itertools

from ..pl import pl_eval
from ..signature import Signature
from . import ast as A


def abstract_constants(sigma, constants, sig: Signature | None = None):
    """Replace each listed constant by a fresh variable and ``sup`` it out.

    The first constant in ``constants`` gets the outermost quantifier.
    """
    constants = list(constants)
    if not constants:
        return sigma
    if sig is not None:
        for c in constants:
            if sig.kind(c) != "constant":
                raise A.FormulaError(f"unknown constant symbol {c!r}")
    taken = A.all_vars(sigma) | (sig.symbol_names if sig is not None else set())
    fresh = {}
    for c in constants:
        name = A.fresh_name(f"x_{c}", taken)
        taken.add(name)
        fresh[c] = A.Var(name)

    def swap(t):
        if isinstance(t, A.Const) and t.name in fresh:
            return fresh[t.name]
        if isinstance(t, A.App):
            return A.App(t.func, tuple(swap(a) for a in t.args))
        return t

    def atom(node):
        if isinstance(node, A.Dist):
            return A.Dist(swap(node.left), swap(node.right))
        return A.Pred(node.name, tuple(swap(a) for a in node.args))

    body = A.map_atoms(sigma, atom)
    return A.sup([fresh[c].name for c in constants], body)


def rename_bound(phi, taken):
    """Rename every bound variable of ``phi`` to a name outside ``taken``."""
    taken = set(taken) | A.all_vars(phi)

    def go(node):
        if isinstance(node, (A.Sup, A.Inf, A.Exists)):
            new = A.fresh_name(node.var, taken)
            taken.add(new)
            body = A.rename(node.body, {node.var: new}) if new != node.var else node.body
            return type(node)(new, go(body))
        return A.rebuild(node, [go(c) for c in A.children(node)])

    return go(phi)


def substitute_predicate(phi, pred: str, params, psi, arity: int | None = None):
    """Replace every ``pred(t1..tk)`` in ``phi`` by ``psi[params := t]``.

    ``params`` names the variables of ``psi`` standing for the predicate's
    arguments; other free variables of ``psi`` are parameters and stay free.
    """
    params = list(params)
    if arity is not None and arity != len(params):
        raise A.FormulaError(f"arity mismatch: {pred!r} has arity {arity}, replacement takes {len(params)}")
    extra = [v for v in A.free_vars(psi) if v not in params]
    # keep psi's parameters from being captured by binders of phi
    phi = _rename_binders(phi, set(extra), A.all_vars(psi) | set(params))
    psi = rename_bound(psi, A.all_vars(phi) | set(params))

    def atom(node):
        if isinstance(node, A.Pred) and node.name == pred:
            if len(node.args) != len(params):
                raise A.FormulaError(
                    f"arity mismatch: {pred!r} applied to {len(node.args)} arguments, "
                    f"replacement takes {len(params)}")
            return A.substitute(psi, dict(zip(params, node.args)))
        return node

    return A.map_atoms(phi, atom)


def _rename_binders(phi, clash, taken):
    taken = set(taken) | A.all_vars(phi)

    def go(node):
        if isinstance(node, (A.Sup, A.Inf, A.Exists)) and node.var in clash:
            new = A.fresh_name(node.var, taken)
            taken.add(new)
            return type(node)(new, go(A.rename(node.body, {node.var: new})))
        return A.rebuild(node, [go(c) for c in A.children(node)])

    return go(phi)


def classical_to_continuous(phi):
    """The continuous transform: ``=`` to ``d``, ``not`` to ``neg`` (1 minus),
    ``and`` to ``max``, ``exists`` to ``inf``."""
    if isinstance(phi, A.Eq):
        return A.Dist(phi.left, phi.right)
    if isinstance(phi, A.Rel):
        return A.Pred(phi.name, phi.args)
    if isinstance(phi, A.Not):
        return A.Neg(classical_to_continuous(phi.arg))
    if isinstance(phi, A.And):
        return A.Max((classical_to_continuous(phi.left), classical_to_continuous(phi.right)))
    if isinstance(phi, A.Exists):
        return A.Inf(phi.var, classical_to_continuous(phi.body))
    raise TypeError(f"not a classical formula: {phi!r}")


# -- value sets ---------------------------------------------------------------

def _dedupe(values):
    out = []
    for v in sorted(values):
        if not out or v - out[-1] > 1e-12:
            out.append(v)
    return frozenset(out)


def _lift2(op, xs, ys):
    return _dedupe(op(a, b) for a, b in itertools.product(xs, ys))


def value_set(phi, sig: Signature) -> frozenset:
    """A finite set containing every value ``phi`` takes on classical structures.

    Atoms contribute {0, 1}; connectives act on the product of their
    children's sets; quantifiers keep the set of their body (a finite sup or
    inf is attained, so it is one of the body's values).
    """
    if not sig.classical:
        raise ValueError(f"signature {sig.name!r} is not flagged classical")
    return _vs(phi)


def _vs(phi) -> frozenset:
    if isinstance(phi, (A.Dist, A.Pred)):
        return frozenset((0.0, 1.0))
    if isinstance(phi, A.Val):
        return frozenset((phi.value,))
    if isinstance(phi, A.Neg):
        return _dedupe(1.0 - v for v in _vs(phi.arg))
    if isinstance(phi, A.DotMinus):
        return _lift2(lambda a, b: max(a - b, 0.0), _vs(phi.left), _vs(phi.right))
    if isinstance(phi, A.TruncAdd):
        return _lift2(lambda a, b: min(a + b, 1.0), _vs(phi.left), _vs(phi.right))
    if isinstance(phi, A.AbsDiff):
        return _lift2(lambda a, b: abs(a - b), _vs(phi.left), _vs(phi.right))
    if isinstance(phi, (A.Max, A.Min)):
        op = max if isinstance(phi, A.Max) else min
        acc = _vs(phi.args[0])
        for a in phi.args[1:]:
            acc = _lift2(op, acc, _vs(a))
        return acc
    if isinstance(phi, A.Scale):
        return _dedupe(phi.q * v for v in _vs(phi.arg))
    if isinstance(phi, A.Apply):
        return _dedupe(pl_eval(phi.func, v) for v in _vs(phi.arg))
    if isinstance(phi, (A.Sup, A.Inf)):
        return _vs(phi.body)
    raise TypeError(f"not a continuous formula: {phi!r}")
