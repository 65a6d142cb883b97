"""Exact evaluation of continuous formulas on finite structures.

``sup``/``inf`` range over all points, so a formula with q nested quantifiers
costs Θ(N^q) atom evaluations.  Two engines share the same arithmetic and
return bit-identical values:

``pointwise``
    Recursive evaluation compiled to closures.  With pruning on, max/min and
    sup/inf nodes evaluate their children inside an (alpha, beta) window and
    stop once the running value can no longer change the parent's result;
    each node also carries static interval bounds used to skip whole
    subtrees.  A value returned inside the window is exact, so the root value
    (window (-inf, inf)) is exact.

``dense``
    numpy evaluation over all assignments of the in-scope variables at once.
    A quantifier whose body would exceed ``config.DENSE_CHUNK`` entries is
    evaluated one point at a time, reducing in index order.

``atoms`` in :class:`EvalResult` counts atomic-formula evaluations (one per
array entry for the dense engine); ``CLW_CAP_ATOMS`` caps it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import config
from .config import ResourceError
from .formula import ast as A
from .pl import pl_eval, pl_eval_array
from .structures import ClassicalStructure, ComputedTable, FiniteStructure

INF = math.inf


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class EvalOptions:
    pruning: bool = True
    parallel: bool = False
    engine: str = "pointwise"
    cap_atoms: int | None = None
    workers: int = 4


@dataclass
class EvalResult:
    value: float
    atoms: int
    witness: dict | None = None


# -- static interval bounds ------------------------------------------------------

def static_bounds(phi) -> tuple[float, float]:
    """An interval guaranteed to contain every value of ``phi``."""
    if isinstance(phi, (A.Dist, A.Pred)):
        return 0.0, 1.0
    if isinstance(phi, A.Val):
        return phi.value, phi.value
    if isinstance(phi, A.Neg):
        lo, hi = static_bounds(phi.arg)
        return 1.0 - hi, 1.0 - lo
    if isinstance(phi, (A.DotMinus, A.TruncAdd, A.AbsDiff)):
        (la, ha), (lb, hb) = static_bounds(phi.left), static_bounds(phi.right)
        if isinstance(phi, A.DotMinus):
            return max(la - hb, 0.0), max(ha - lb, 0.0)
        if isinstance(phi, A.TruncAdd):
            return min(la + lb, 1.0), min(ha + hb, 1.0)
        return max(la - hb, lb - ha, 0.0), max(ha - lb, hb - la)
    if isinstance(phi, (A.Max, A.Min)):
        bs = [static_bounds(a) for a in phi.args]
        op = max if isinstance(phi, A.Max) else min
        return op(b[0] for b in bs), op(b[1] for b in bs)
    if isinstance(phi, A.Scale):
        lo, hi = static_bounds(phi.arg)
        return phi.q * lo, phi.q * hi
    if isinstance(phi, A.Apply):
        lo, hi = static_bounds(phi.arg)
        if phi.func.increasing:
            return pl_eval(phi.func, lo), pl_eval(phi.func, hi)
        ys = [y for _, y in phi.func.points]
        return min(ys), max(ys)
    if isinstance(phi, (A.Sup, A.Inf)):
        return static_bounds(phi.body)
    raise TypeError(f"not a continuous formula: {phi!r}")


# -- table access -------------------------------------------------------------------

def _py_table(table):
    """Fast scalar accessor for a table: nested lists or a computed callable."""
    if isinstance(table, ComputedTable):
        fn = table.fn
        return lambda *idx: fn(*idx).item()
    return np.asarray(table).tolist()


def _resolve(A_: FiniteStructure, asg):
    out = {}
    for k, v in (asg or {}).items():
        if isinstance(v, str) and not v.lstrip("-").isdigit():
            v = A_.index(v)
        v = int(v)
        if not 0 <= v < A_.size:
            raise EvalError(f"assignment {k}={v} out of range")
        out[k] = v
    return out


# -- term evaluation ------------------------------------------------------------------

def eval_term(A_: FiniteStructure, t, asg=None) -> int:
    asg = _resolve(A_, asg)

    def go(t):
        if isinstance(t, A.Var):
            if t.name not in asg:
                raise EvalError(f"unbound variable {t.name!r}")
            return asg[t.name]
        if isinstance(t, A.Const):
            if t.name not in A_.constants:
                raise EvalError(f"constant {t.name!r} not interpreted")
            return int(A_.constants[t.name])
        if t.func not in A_.functions:
            raise EvalError(f"function {t.func!r} not interpreted")
        idx = tuple(go(a) for a in t.args)
        return int(A_.functions[t.func][idx])

    return go(t)


# -- pointwise engine -------------------------------------------------------------------

class _Counter:
    __slots__ = ("n", "cap")

    def __init__(self, cap):
        self.n = 0
        self.cap = cap

    def check(self):
        if self.n > self.cap:
            raise ResourceError(f"atom-evaluation cap {self.cap} exceeded")


class _Pointwise:
    def __init__(self, A_: FiniteStructure, pruning: bool, counter: _Counter):
        self.A = A_
        self.N = A_.size
        self.pruning = pruning
        self.counter = counter
        self.dist = _py_table(A_.dist)
        self.preds = {k: _py_table(v) for k, v in A_.predicates.items()}
        self.funcs = {k: _py_table(v) for k, v in A_.functions.items()}

    # terms compile to env -> int
    def term(self, t, slots):
        if isinstance(t, A.Var):
            if t.name not in slots:
                raise EvalError(f"unbound variable {t.name!r}")
            s = slots[t.name]
            return lambda env: env[s]
        if isinstance(t, A.Const):
            if t.name not in self.A.constants:
                raise EvalError(f"constant {t.name!r} not interpreted")
            c = int(self.A.constants[t.name])
            return lambda env: c
        if t.func not in self.funcs:
            raise EvalError(f"function {t.func!r} not interpreted")
        tab = self.funcs[t.func]
        args = [self.term(a, slots) for a in t.args]
        return _lookup(tab, args)

    def compile(self, phi, slots):
        """Compile to ``f(env, lo, hi) -> float``."""
        ev = self._compile(phi, slots)
        if not self.pruning:
            return ev
        blo, bhi = static_bounds(phi)
        if blo == 0.0 and bhi == 1.0:
            return ev

        def bounded(env, lo, hi):
            if lo >= bhi:
                return bhi
            if hi <= blo:
                return blo
            return ev(env, lo, hi)
        return bounded

    def _compile(self, phi, slots):
        cnt = self.counter
        if isinstance(phi, A.Dist):
            D = self.dist
            a, b = self.term(phi.left, slots), self.term(phi.right, slots)
            if callable(D):
                def f(env, lo, hi):
                    cnt.n += 1
                    return D(a(env), b(env))
            else:
                def f(env, lo, hi):
                    cnt.n += 1
                    return D[a(env)][b(env)]
            return f
        if isinstance(phi, A.Pred):
            if phi.name not in self.preds:
                raise EvalError(f"predicate {phi.name!r} not interpreted")
            get = _lookup(self.preds[phi.name], [self.term(t, slots) for t in phi.args])

            def f(env, lo, hi):
                cnt.n += 1
                return get(env)
            return f
        if isinstance(phi, A.Val):
            v = float(phi.value)
            return lambda env, lo, hi: v
        if isinstance(phi, A.Neg):
            g = self.compile(phi.arg, slots)
            return lambda env, lo, hi: 1.0 - g(env, 1.0 - hi, 1.0 - lo)
        if isinstance(phi, (A.DotMinus, A.TruncAdd, A.AbsDiff)):
            l, r = self.compile(phi.left, slots), self.compile(phi.right, slots)
            if isinstance(phi, A.DotMinus):
                def f(env, lo, hi):
                    x = l(env, -INF, INF) - r(env, -INF, INF)
                    return x if x > 0.0 else 0.0
            elif isinstance(phi, A.TruncAdd):
                def f(env, lo, hi):
                    x = l(env, -INF, INF) + r(env, -INF, INF)
                    return x if x < 1.0 else 1.0
            else:
                def f(env, lo, hi):
                    return abs(l(env, -INF, INF) - r(env, -INF, INF))
            return f
        if isinstance(phi, A.Scale):
            g = self.compile(phi.arg, slots)
            q = float(phi.q)
            return lambda env, lo, hi: q * g(env, -INF, INF)
        if isinstance(phi, A.Apply):
            g = self.compile(phi.arg, slots)
            u = phi.func
            return lambda env, lo, hi: pl_eval(u, g(env, -INF, INF))
        if isinstance(phi, (A.Max, A.Min)):
            kids = [self.compile(c, slots) for c in phi.args]
            _, top = static_bounds(phi)
            bottom, _ = static_bounds(phi)
            return (_max_node if isinstance(phi, A.Max) else _min_node)(kids, self.pruning, top, bottom)
        if isinstance(phi, (A.Sup, A.Inf)):
            s = len(slots)
            inner = dict(slots)
            inner[phi.var] = s
            body = self.compile(phi.body, inner)
            lo_b, hi_b = static_bounds(phi.body)
            return (_sup_node if isinstance(phi, A.Sup) else _inf_node)(
                body, s, self.N, self.pruning, hi_b, lo_b, cnt)
        raise TypeError(f"not a continuous formula: {phi!r}")


def _lookup(tab, args):
    if callable(tab):
        if len(args) == 1:
            a, = args
            return lambda env: tab(a(env))
        return lambda env: tab(*[g(env) for g in args])
    if len(args) == 1:
        a, = args
        return lambda env: tab[a(env)]
    if len(args) == 2:
        a, b = args
        return lambda env: tab[a(env)][b(env)]
    if len(args) == 3:
        a, b, c = args
        return lambda env: tab[a(env)][b(env)][c(env)]

    def get(env):
        x = tab
        for g in args:
            x = x[g(env)]
        return x
    return get


# Fail-soft alpha-beta: a result strictly inside (lo, hi) is exact; a result
# <= lo bounds the true value from above, a result >= hi bounds it from below.

def _max_node(kids, pruning, top, bottom):
    if not pruning:
        def f(env, lo, hi):
            best = -INF
            for k in kids:
                v = k(env, -INF, INF)
                if v > best:
                    best = v
            return best
        return f

    def f(env, lo, hi):
        best = -INF
        for k in kids:
            v = k(env, lo if lo > best else best, hi)
            if v > best:
                best = v
                if best >= hi or best >= top:
                    return best
        return best
    return f


def _min_node(kids, pruning, top, bottom):
    if not pruning:
        def f(env, lo, hi):
            best = INF
            for k in kids:
                v = k(env, -INF, INF)
                if v < best:
                    best = v
            return best
        return f

    def f(env, lo, hi):
        best = INF
        for k in kids:
            v = k(env, lo, hi if hi < best else best)
            if v < best:
                best = v
                if best <= lo or best <= bottom:
                    return best
        return best
    return f


def _sup_node(body, s, N, pruning, top, bottom, cnt):
    rng = range(N)
    if not pruning:
        def f(env, lo, hi):
            best = -INF
            for p in rng:
                env[s] = p
                v = body(env, -INF, INF)
                if v > best:
                    best = v
            cnt.check()
            return best
        return f

    def f(env, lo, hi):
        best = -INF
        for p in rng:
            env[s] = p
            v = body(env, lo if lo > best else best, hi)
            if v > best:
                best = v
                if best >= hi or best >= top:
                    break
        cnt.check()
        return best
    return f


def _inf_node(body, s, N, pruning, top, bottom, cnt):
    rng = range(N)
    if not pruning:
        def f(env, lo, hi):
            best = INF
            for p in rng:
                env[s] = p
                v = body(env, -INF, INF)
                if v < best:
                    best = v
            cnt.check()
            return best
        return f

    def f(env, lo, hi):
        best = INF
        for p in rng:
            env[s] = p
            v = body(env, lo, hi if hi < best else best)
            if v < best:
                best = v
                if best <= lo or best <= bottom:
                    break
        cnt.check()
        return best
    return f


# -- dense engine ----------------------------------------------------------------------

class _Dense:
    def __init__(self, A_: FiniteStructure, counter: _Counter, K: int):
        self.A = A_
        self.N = A_.size
        self.counter = counter
        self.K = K

    def count(self, arr):
        self.counter.n += int(np.size(arr))
        self.counter.check()
        return arr

    def axis(self, s):
        shape = [1] * self.K
        shape[s] = self.N
        return np.arange(self.N).reshape(shape)

    def term(self, t, env):
        if isinstance(t, A.Var):
            if t.name not in env:
                raise EvalError(f"unbound variable {t.name!r}")
            return env[t.name]
        if isinstance(t, A.Const):
            if t.name not in self.A.constants:
                raise EvalError(f"constant {t.name!r} not interpreted")
            return np.int64(self.A.constants[t.name])
        if t.func not in self.A.functions:
            raise EvalError(f"function {t.func!r} not interpreted")
        args = [self.term(a, env) for a in t.args]
        return np.asarray(self.A.functions[t.func][tuple(args)])

    def ev(self, phi, env, depth):
        if isinstance(phi, A.Dist):
            a, b = self.term(phi.left, env), self.term(phi.right, env)
            return self.count(np.asarray(self.A.dist[a, b], dtype=float))
        if isinstance(phi, A.Pred):
            if phi.name not in self.A.predicates:
                raise EvalError(f"predicate {phi.name!r} not interpreted")
            args = tuple(self.term(t, env) for t in phi.args)
            return self.count(np.asarray(self.A.predicates[phi.name][args], dtype=float))
        if isinstance(phi, A.Val):
            return np.float64(phi.value)
        if isinstance(phi, A.Neg):
            return 1.0 - self.ev(phi.arg, env, depth)
        if isinstance(phi, A.DotMinus):
            return np.maximum(self.ev(phi.left, env, depth) - self.ev(phi.right, env, depth), 0.0)
        if isinstance(phi, A.TruncAdd):
            return np.minimum(self.ev(phi.left, env, depth) + self.ev(phi.right, env, depth), 1.0)
        if isinstance(phi, A.AbsDiff):
            return np.abs(self.ev(phi.left, env, depth) - self.ev(phi.right, env, depth))
        if isinstance(phi, A.Scale):
            return phi.q * self.ev(phi.arg, env, depth)
        if isinstance(phi, A.Apply):
            return pl_eval_array(phi.func, self.ev(phi.arg, env, depth))
        if isinstance(phi, (A.Max, A.Min)):
            op = np.maximum if isinstance(phi, A.Max) else np.minimum
            acc = self.ev(phi.args[0], env, depth)
            for c in phi.args[1:]:
                acc = op(acc, self.ev(c, env, depth))
            return acc
        if isinstance(phi, (A.Sup, A.Inf)):
            is_sup = isinstance(phi, A.Sup)
            live = [v for v in A.free_vars(phi.body) if v != phi.var and np.ndim(env.get(v, 0)) > 0]
            est = self.N ** (len(live) + 1)
            if est <= config.DENSE_CHUNK:
                inner = dict(env)
                inner[phi.var] = self.axis(depth)
                body = np.asarray(self.ev(phi.body, inner, depth + 1))
                if body.ndim <= depth or body.shape[depth] == 1:
                    return body
                return body.max(axis=depth, keepdims=True) if is_sup else body.min(axis=depth, keepdims=True)
            op = np.maximum if is_sup else np.minimum
            acc = None
            inner = dict(env)
            for p in range(self.N):
                inner[phi.var] = np.int64(p)
                v = self.ev(phi.body, inner, depth + 1)
                acc = v if acc is None else op(acc, v)
            return acc
        raise TypeError(f"not a continuous formula: {phi!r}")


# -- public entry points --------------------------------------------------------------------

def evaluate(A_: FiniteStructure, phi, asg=None, opts: EvalOptions | None = None) -> EvalResult:
    """Evaluate ``phi`` on ``A_`` under ``asg`` (variable -> point index or label)."""
    opts = opts or EvalOptions()
    asg = _resolve(A_, asg)
    missing = [v for v in A.free_vars(phi) if v not in asg]
    if missing:
        raise EvalError(f"unbound free variable(s): {', '.join(missing)}")
    counter = _Counter(config.cap_atoms(opts.cap_atoms))
    if opts.engine == "dense":
        free = list(asg)
        K = len(free) + A.quantifier_depth(phi) + 1
        eng = _Dense(A_, counter, K)
        env = {k: np.int64(v) for k, v in asg.items()}
        val = np.asarray(eng.ev(phi, env, len(free)))
        return EvalResult(float(val.reshape(-1)[0]) if val.size == 1 else _collapse(val), counter.n)
    if opts.engine != "pointwise":
        raise ValueError(f"unknown engine {opts.engine!r}")
    eng = _Pointwise(A_, opts.pruning, counter)
    names = list(asg)
    slots = {v: i for i, v in enumerate(names)}
    base = [asg[v] for v in names]
    if opts.parallel and isinstance(phi, (A.Sup, A.Inf)):
        return _parallel(A_, phi, eng, slots, base, counter, opts)
    f = eng.compile(phi, slots)
    env = base + [0] * (A.quantifier_depth(phi) + 1)
    return EvalResult(float(f(env, -INF, INF)), counter.n)


def _collapse(val):
    flat = val.reshape(-1)
    if not np.all(flat == flat[0]):
        raise EvalError("dense evaluation did not reduce to a single value")
    return float(flat[0])


def _parallel(A_, phi, eng, slots, base, counter, opts):
    # one task per value of the outermost variable; combine in index order
    s = len(slots)
    inner = dict(slots)
    inner[phi.var] = s
    body = eng.compile(phi.body, inner)
    depth = A.quantifier_depth(phi)

    def task(p):
        env = base + [0] * (depth + 1)
        env[s] = p
        return body(env, -INF, INF)

    with ThreadPoolExecutor(max_workers=opts.workers) as ex:
        vals = list(ex.map(task, range(A_.size)))
    best = vals[0]
    for v in vals[1:]:
        if (v > best) if isinstance(phi, A.Sup) else (v < best):
            best = v
    return EvalResult(float(best), counter.n)


def eval_formula(A_: FiniteStructure, phi, asg=None, opts: EvalOptions | None = None) -> float:
    return evaluate(A_, phi, asg, opts).value


# -- witness traces -----------------------------------------------------------------------

def eval_with_witness(A_: FiniteStructure, phi, asg=None) -> EvalResult:
    """Evaluate and record, at every quantifier on the path that determines the
    value, the (first) point attaining the sup or inf."""
    asg = _resolve(A_, asg)
    counter = _Counter(config.cap_atoms())
    eng = _Pointwise(A_, False, counter)
    labels = A_.labels

    def trace(node, asg):
        names = list(asg)
        slots = {v: i for i, v in enumerate(names)}
        if isinstance(node, (A.Sup, A.Inf)):
            inner = dict(slots)
            inner[node.var] = len(slots)
            body = eng.compile(node.body, inner)
            env = [asg[v] for v in names] + [0] * (A.quantifier_depth(node) + 1)
            best, arg = None, None
            for p in range(A_.size):
                env[len(slots)] = p
                v = body(env, -INF, INF)
                if best is None or (v > best if isinstance(node, A.Sup) else v < best):
                    best, arg = v, p
            sub = trace(node.body, {**asg, node.var: arg})
            return {"op": type(node).__name__.lower(), "var": node.var, "index": arg,
                    "point": labels[arg], "value": best, "body": sub}
        f = eng.compile(node, slots)
        env = [asg[v] for v in names] + [0] * (A.quantifier_depth(node) + 1)
        val = f(env, -INF, INF)
        out = {"op": type(node).__name__.lower(), "value": val}
        if isinstance(node, (A.Dist, A.Pred)):
            out["formula"] = A.show(node)
            out["args"] = [labels[eval_term(A_, t, asg)] for t in A.atom_terms(node)]
        else:
            kids = A.children(node)
            if kids:
                out["args"] = [trace(c, asg) for c in kids]
        return out

    t = trace(phi, asg)
    return EvalResult(float(t["value"]), counter.n, t)


# -- classical evaluation ---------------------------------------------------------------------

def eval_classical(B: ClassicalStructure, phi, asg=None) -> bool:
    """Tarskian truth with ``exists`` as a finite disjunction."""
    env = {k: int(v) for k, v in (asg or {}).items()}
    rels = {k: np.asarray(v, dtype=bool) for k, v in B.relations.items()}
    funcs = {k: np.asarray(v) for k, v in B.functions.items()}

    def term(t, env):
        if isinstance(t, A.Var):
            if t.name not in env:
                raise EvalError(f"unbound variable {t.name!r}")
            return env[t.name]
        if isinstance(t, A.Const):
            return int(B.constants[t.name])
        return int(funcs[t.func][tuple(term(a, env) for a in t.args)])

    def go(node, env):
        if isinstance(node, A.Eq):
            return term(node.left, env) == term(node.right, env)
        if isinstance(node, A.Rel):
            return bool(rels[node.name][tuple(term(a, env) for a in node.args)])
        if isinstance(node, A.Not):
            return not go(node.arg, env)
        if isinstance(node, A.And):
            return go(node.left, env) and go(node.right, env)
        if isinstance(node, A.Exists):
            return any(go(node.body, {**env, node.var: p}) for p in range(B.size))
        raise TypeError(f"not a classical formula: {node!r}")

    return go(phi, env)
