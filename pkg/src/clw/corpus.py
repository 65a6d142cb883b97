"""Seeded random corpora: classical structures and sentences, small
continuous structures and formulas, and clustered structures for the
quotient experiments.

Continuous corpora use dyadic data (multiples of 1/64 and moduli with
power-of-two slopes) so that every connective is computed without rounding.
"""

from __future__ import annotations

import numpy as np

from .formula import ast as A
from .pl import PLFunc
from .signature import Signature, Symbol, classical_signature
from .structures import ClassicalStructure, FiniteStructure

PL_POOL = {
    "dbl": PLFunc.linear(2.0),
    "half": PLFunc.linear(0.5),
    "quad": PLFunc.linear(4.0),
    "bump": PLFunc(((0, 0), (0.5, 1), (1, 0.5)), increasing=False),
}


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# -- classical -------------------------------------------------------------------

def random_classical_structure(seed, max_points=4) -> ClassicalStructure:
    rng = _rng(seed)
    n = int(rng.integers(1, max_points + 1))
    rel_specs = [(f"R{i}", int(rng.integers(1, 3))) for i in range(int(rng.integers(0, 3)))]
    funcs = [("f", 1)] if rng.random() < 0.5 else []
    consts = ["c"] if rng.random() < 0.5 else []
    sig = classical_signature("rand", rel_specs, funcs, consts)
    rels = {r: rng.random((n,) * k) < 0.5 for r, k in rel_specs}
    fns = {f: rng.integers(0, n, size=(n,) * k) for f, k in funcs}
    cs = {c: int(rng.integers(0, n)) for c in consts}
    return ClassicalStructure(sig, tuple(f"b{i}" for i in range(n)), rels, fns, cs)


def random_term(rng, sig: Signature, scope, depth=1):
    # variables weighted over constants so quantifiers bind something
    options = [A.Var(v) for v in scope] * 3 + [A.Const(c) for c in sig.constants]
    if sig.functions and depth > 0 and rng.random() < 0.3:
        f = sig.functions[int(rng.integers(len(sig.functions)))]
        return A.App(f.name, tuple(random_term(rng, sig, scope, depth - 1) for _ in range(f.arity)))
    return options[int(rng.integers(len(options)))]


def random_classical_sentence(seed, sig: Signature, depth=3, scope=()):
    """A classical formula of connective depth <= ``depth`` with free variables
    among ``scope``; closed when ``scope`` is empty."""
    rng = _rng(seed)
    names = ["x", "y", "z", "u", "v", "w"]

    def atom(scope):
        if sig.predicates and rng.random() < 0.6:
            r = sig.predicates[int(rng.integers(len(sig.predicates)))]
            return A.Rel(r.name, tuple(random_term(rng, sig, scope) for _ in range(r.arity)))
        return A.Eq(random_term(rng, sig, scope), random_term(rng, sig, scope))

    def go(d, scope):
        can_atom = bool(scope) or bool(sig.constants)
        if d == 0 or (can_atom and rng.random() < 0.2):
            if not can_atom:
                v = names[len(scope)]
                return A.Exists(v, atom(scope + (v,)))
            return atom(scope)
        k = rng.random()
        if (k < 0.35 or not can_atom) and len(scope) < len(names):
            v = names[len(scope)]
            body = go(d - 1, scope + (v,))
            return A.Exists(v, body) if rng.random() < 0.5 else A.Forall(v, body)
        if k < 0.5:
            return A.Not(go(d - 1, scope))
        if k < 0.75:
            return A.And(go(d - 1, scope), go(d - 1, scope))
        if k < 0.9:
            return A.Or(go(d - 1, scope), go(d - 1, scope))
        return A.Implies(go(d - 1, scope), go(d - 1, scope))

    return go(depth, tuple(scope))


# -- continuous --------------------------------------------------------------------

def random_structure(seed, max_points=6, functions=True) -> FiniteStructure:
    """Points on a 1/16 grid in the unit square with the max metric.

    Unary ``P`` is a coordinate and binary ``R`` an average of coordinates,
    so both obey the identity modulus; ``f`` is an arbitrary map (an almost
    structure at worst).
    """
    rng = _rng(seed)
    n = int(rng.integers(1, max_points + 1))
    cells = rng.choice(17 * 17, size=n, replace=False)
    xy = np.stack([cells // 17, cells % 17], axis=1) / 16
    d = np.abs(xy[:, None, :] - xy[None, :, :]).max(axis=2)
    ident = PLFunc.identity()
    funcs = (Symbol("f", 1, ident),) if functions else ()
    sig = Signature("rand", (Symbol("P", 1, ident), Symbol("R", 2, ident)), funcs, ("c",))
    P = xy[:, 0].copy()
    R = (xy[:, 0][:, None] + xy[:, 1][None, :]) / 2
    fns = {"f": rng.integers(0, n, size=n)} if functions else {}
    return FiniteStructure(sig, [f"a{i}" for i in range(n)], d, {"P": P, "R": R}, fns,
                           {"c": int(rng.integers(0, n))})


def random_formula(seed, sig: Signature, depth=4, scope=(), max_quant=3):
    """Random continuous formula over ``sig`` with free variables in ``scope``."""
    rng = _rng(seed)
    names = ["x", "y", "z", "u", "v", "w"]
    dyadic = [0.0, 0.25, 0.5, 0.75, 1.0, 0.125, 0.375]

    def atom(scope):
        if not scope and not sig.constants:
            return A.Val(dyadic[int(rng.integers(len(dyadic)))])
        if rng.random() < 0.4:
            return A.Dist(random_term(rng, sig, scope), random_term(rng, sig, scope))
        p = sig.predicates[int(rng.integers(len(sig.predicates)))]
        return A.Pred(p.name, tuple(random_term(rng, sig, scope) for _ in range(p.arity)))

    def go(d, scope, q):
        if d == 0 or rng.random() < 0.15:
            return atom(scope)
        k = rng.random()
        if k < 0.3 and q < max_quant and len(scope) < len(names):
            v = names[len(scope)]
            cls = A.Sup if rng.random() < 0.5 else A.Inf
            return cls(v, go(d - 1, scope + (v,), q + 1))
        if k < 0.4:
            return A.Neg(go(d - 1, scope, q))
        if k < 0.55:
            cls = (A.DotMinus, A.TruncAdd, A.AbsDiff)[int(rng.integers(3))]
            return cls(go(d - 1, scope, q), go(d - 1, scope, q))
        if k < 0.75:
            cls = A.Max if rng.random() < 0.5 else A.Min
            return cls(tuple(go(d - 1, scope, q) for _ in range(int(rng.integers(1, 4)))))
        if k < 0.82:
            return A.Scale([0.5, 0.25, 1.0][int(rng.integers(3))], go(d - 1, scope, q))
        if k < 0.9:
            name = list(PL_POOL)[int(rng.integers(len(PL_POOL)))]
            return A.Apply(name, PL_POOL[name], go(d - 1, scope, q))
        if k < 0.95:
            return A.Val(dyadic[int(rng.integers(len(dyadic)))])
        return atom(scope)

    return go(depth, tuple(scope), 0)


# -- clustered structures ------------------------------------------------------------

def clustered_structure(seed, max_clusters=4, max_per_cluster=3) -> FiniteStructure:
    """Tight clusters (diameter <= 0.1) at mutual distance D in [0.9, 1].

    Predicates are near 0 or near 1 on each cluster and vary by at most half
    the offset within it; ``f`` sends each cluster to a fixed representative
    of another cluster.  These satisfy both threshold preconditions of the
    quotient construction with room to spare.
    """
    rng = _rng(seed)
    k = int(rng.integers(1, max_clusters + 1))
    sizes = rng.integers(1, max_per_cluster + 1, size=k)
    cl = np.repeat(np.arange(k), sizes)
    n = len(cl)
    D = 0.9 + rng.integers(0, 11) / 100
    # offsets in [0, 0.1], distinct inside each cluster
    u = np.zeros(n)
    for c in range(k):
        idx = np.flatnonzero(cl == c)
        u[idx] = np.sort(rng.choice(11, size=len(idx), replace=False)) / 100
    same = cl[:, None] == cl[None, :]
    d = np.where(same, np.abs(u[:, None] - u[None, :]), D)
    np.fill_diagonal(d, 0.0)

    def base(shape):
        truth = rng.random(shape) < 0.5
        return np.where(truth, rng.uniform(0, 0.05, shape), rng.uniform(0.8, 0.85, shape))

    P = base(k)[cl] + 0.5 * u
    R = base((k, k))[cl[:, None], cl[None, :]] + 0.25 * (u[:, None] + u[None, :])
    target = rng.integers(0, k, size=k)
    rep = np.array([np.flatnonzero(cl == c)[0] for c in range(k)])
    f = rep[target[cl]]
    ident = PLFunc.identity()
    sig = Signature("clusters", (Symbol("P", 1, ident), Symbol("R", 2, ident)),
                    (Symbol("f", 1, ident),), ("c",))
    labels = [f"p{c}.{i}" for i, c in enumerate(cl)]
    return FiniteStructure(sig, labels, d, {"P": P, "R": R}, {"f": f},
                           {"c": int(rng.integers(0, n))}, {"clusters": k, "D": float(D)})


QUOTIENT_BATTERY = [
    "exists x . P(x)",
    "forall x . P(x)",
    "exists x . ~P(x)",
    "forall x . (P(x) | ~P(x))",
    "exists x . exists y . R(x, y)",
    "forall x . exists y . R(x, y)",
    "exists x . forall y . ~R(x, y)",
    "forall x . forall y . (R(x, y) -> R(y, x))",
    "forall x . R(x, x)",
    "exists x . (P(x) & R(x, x))",
    "forall x . P(f(x))",
    "exists x . f(x) = x",
    "forall x . exists y . f(y) = x",
    "forall x . forall y . (f(x) = f(y) -> x = y)",
    "exists x . ~(x = c)",
    "P(c)",
    "forall x . (P(x) -> P(f(x)))",
    "exists x . exists y . ~(x = y)",
    "forall x . forall y . x = y",
    "exists x . R(x, f(x))",
]
