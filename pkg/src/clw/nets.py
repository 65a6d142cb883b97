"""Built-in compact spaces, their finite nets, and discretization of symbols.

Every space exposes its exact interpretation (closed-form distance and
symbol semantics); a net of resolution m restricts it to finitely many
points.  Predicates and the metric are restricted exactly.  Function symbols
and constants are snapped to the nearest net point (lowest index on ties),
which is where a net stops being a substructure and becomes an almost
structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import config
from .config import TOL, ResourceError
from .evaluator import EvalOptions, evaluate
from .formula import ast as A
from .pl import PLFunc, modulus_threshold
from .signature import Signature, Symbol
from .structures import ComputedTable, FiniteStructure

# tables above this many entries stay lazy
MATERIALIZE_CAP = 1 << 22

_IDENT = PLFunc.identity()
_HALF = PLFunc.linear(0.5)     # Δ(ε) = ε/2
_DOUBLE = PLFunc.linear(2.0)   # Δ(ε) = min(2ε, 1)
_THIRD = PLFunc.linear(1 / 3)  # Δ(ε) = ε/3


def _table(shape, fn, dtype=float):
    t = ComputedTable(shape, fn, dtype)
    return t.materialize() if t.size <= MATERIALIZE_CAP else t


def _popcount(x):
    return np.bitwise_count(np.asarray(x, dtype=np.uint64)).astype(np.int64)


# -- space specifications ------------------------------------------------------------

@dataclass(frozen=True)
class CompactSpaceSpec:
    """One of the four built-in spaces.

    ``options`` per kind:
      interval      ``h`` (bool), ``P`` (bool), ``constants`` {name: x}
      circle        none (relational; P(u,v,w) = d(uv, w))
      ball          ``n`` (dimension), ``op`` in {None, "half", "proj"}
      prob_algebra  ``m`` (number of atoms; None means "use the resolution")
    """

    kind: str
    options: dict = field(default_factory=dict)

    @property
    def signature(self) -> Signature:
        k, o = self.kind, self.options
        if k == "interval":
            preds = (Symbol("P", 1, _IDENT),) if o.get("P", True) else ()
            funcs = (Symbol("h", 1, _DOUBLE),) if o.get("h", True) else ()
            return Signature("interval", preds, funcs, tuple(o.get("constants", {})))
        if k == "circle":
            return Signature("circle", (Symbol("P", 3, _THIRD),))
        if k == "ball":
            n = o.get("n", 2)
            funcs = ()
            if o.get("op") == "half":
                funcs = (Symbol("U", 1, _DOUBLE),)
            elif o.get("op") == "proj":
                funcs = (Symbol("U", 1, _IDENT),)
            return Signature(f"ball{n}", (Symbol("ip", 2, _HALF),), funcs)
        if k == "prob_algebra":
            return Signature(
                "prob_algebra",
                (Symbol("mu", 1, _IDENT),),
                (Symbol("inter", 2, _HALF), Symbol("union", 2, _HALF),
                 Symbol("comp", 1, _IDENT), Symbol("tau", 1, _IDENT)),
                ("bot", "top"),
            )
        raise ValueError(f"unknown space kind {k!r}")

    def describe(self) -> str:
        if self.kind == "ball":
            op = self.options.get("op")
            return f"ball({self.options.get('n', 2)}{',' + op if op else ''})"
        if self.kind == "prob_algebra" and self.options.get("m"):
            return f"prob_algebra({self.options['m']})"
        return self.kind


def interval(h=True, P=True, constants=None) -> CompactSpaceSpec:
    return CompactSpaceSpec("interval", {"h": h, "P": P, "constants": dict(constants or {})})


def circle() -> CompactSpaceSpec:
    return CompactSpaceSpec("circle")


def ball(n=2, op=None) -> CompactSpaceSpec:
    if op not in (None, "half", "proj"):
        raise ValueError(f"unknown ball operator {op!r}")
    return CompactSpaceSpec("ball", {"n": int(n), "op": op})


def prob_algebra(m=None) -> CompactSpaceSpec:
    return CompactSpaceSpec("prob_algebra", {"m": m})


def parse_space(text: str) -> CompactSpaceSpec:
    """``interval``, ``circle``, ``ball(2)``, ``ball(2,half)``, ``prob_algebra(4)``."""
    text = text.replace(" ", "")
    name, _, rest = text.partition("(")
    args = [a for a in rest.rstrip(")").split(",") if a]
    if name == "interval":
        return interval()
    if name == "circle":
        return circle()
    if name == "ball":
        return ball(int(args[0]) if args else 2, args[1] if len(args) > 1 else None)
    if name in ("prob_algebra", "prob"):
        return prob_algebra(int(args[0]) if args else None)
    raise ValueError(f"unknown space {text!r}")


# -- nets --------------------------------------------------------------------------

@dataclass
class NetResult:
    structure: FiniteStructure
    mesh: float
    m: int
    spec: CompactSpaceSpec
    coords: np.ndarray | None = None
    notes: dict = field(default_factory=dict)

    def provenance(self) -> dict:
        return {"space": self.spec.describe(), "m": self.m, "mesh": self.mesh,
                "points": self.structure.size, **self.notes}


def generate_net(spec: CompactSpaceSpec, m: int, cap_points: int | None = None) -> NetResult:
    """Restrict ``spec`` to a finite net of resolution ``m``.

    The returned structure carries the metric and predicate tables only;
    :func:`discretize_symbols` adds function and constant interpretations.
    """
    if m < 1:
        raise ValueError("resolution m must be >= 1")
    cap = int(cap_points or config.DEFAULT_CAP_POINTS)
    sig = spec.signature
    rel = sig.reduct([p.name for p in sig.predicates])
    k = spec.kind

    if k == "interval":
        # covering radius: any x in [0,1] lies within 1/(2m) of some k/m
        N = m + 1
        _guard(N, cap)
        xs = np.arange(N) / m
        dist = _table((N, N), lambda i, j: np.abs(i - j) / m)
        preds = {"P": xs.copy()} if "P" in rel.symbol_names else {}
        labels = ["%.12g" % x for x in xs]
        A_ = FiniteStructure(rel, labels, dist, preds)
        return NetResult(A_, 1 / (2 * m), m, spec, xs[:, None])

    if k == "circle":
        # m-th roots of unity; an arc of angle 2π/m has half-chord sin(π/(2m))
        # from its midpoint to either end, which bounds the covering radius
        N = m
        _guard(N, cap)
        chord = np.sin(np.pi * np.minimum(np.arange(m), m - np.arange(m)) / m)
        chord[0] = 0.0
        if m % 2 == 0:
            chord[m // 2] = 1.0
        dist = _table((N, N), lambda i, j: chord[(i - j) % m])
        P = _table((N, N, N), lambda a, b, c: chord[(a + b - c) % m])
        labels = [f"z{k}" for k in range(m)]
        ang = 2 * np.pi * np.arange(m) / m
        A_ = FiniteStructure(rel, labels, dist, {"P": P})
        return NetResult(A_, math.sin(math.pi / (2 * m)), m, spec,
                         np.stack([np.cos(ang), np.sin(ang)], axis=1))

    if k == "ball":
        n = spec.options.get("n", 2)
        if n > 3 and cap_points is None:
            raise ResourceError(f"ball dimension {n} > 3 needs an explicit point cap")
        pts = _ball_points(n, m, cap)
        return _euclid_net(spec, rel, pts, math.sqrt(n) / (2 * m), m)

    if k == "prob_algebra":
        mm = spec.options.get("m") or m
        N = 1 << mm
        _guard(N, cap)
        dist = _table((N, N), lambda x, y: _popcount(np.bitwise_xor(x, y)) / mm)
        mu = _popcount(np.arange(N)) / mm
        labels = ["{" + ",".join(str(b + 1) for b in range(mm) if x >> b & 1) + "}"
                  for x in range(N)]
        A_ = FiniteStructure(rel, labels, dist, {"mu": mu})
        net = NetResult(A_, 0.0, mm, spec, None, {"exact": True})
        return net

    raise ValueError(f"unknown space kind {k!r}")


def _guard(N, cap):
    if N > cap:
        raise ResourceError(f"net would have {N} points, cap is {cap}")


def _ball_points(n, m, cap):
    # Grid of spacing 1/m inside the ball, plus the radial projections of
    # grid points just outside it.  Covering: x in the ball has a grid point g
    # with |x-g| <= sqrt(n)/(2m).  If |g| > 1 then |g| - 1 <= |g| - |x| <=
    # |x-g|, so |x - g/|g|| <= 2|x-g| <= sqrt(n)/m, i.e. sqrt(n)/(2m) in the
    # half metric.  Inner grid points are within sqrt(n)/(4m).
    h = 1.0 / m
    est = (2 * m + 1) ** n
    if est > 50 * cap:
        raise ResourceError(f"ball grid of {est} cells exceeds cap {cap}")
    axis = np.arange(-m, m + 1) * h
    grid = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    r = np.sqrt((grid ** 2).sum(axis=1))
    inner = grid[r <= 1 + TOL]
    shell = grid[(r > 1 + TOL) & (r <= 1 + math.sqrt(n) * h)]
    shell = shell / np.sqrt((shell ** 2).sum(axis=1))[:, None]
    pts = np.concatenate([inner, shell])
    pts = np.unique(np.round(pts, 12), axis=0)
    _guard(len(pts), cap)
    return pts


def _euclid_net(spec, sig, pts, mesh, m):
    N = len(pts)
    P = pts

    def dist(i, j):
        return np.sqrt(((P[i] - P[j]) ** 2).sum(axis=-1)) / 2

    def ip(i, j):
        return np.clip((1 + (P[i] * P[j]).sum(axis=-1)) / 2, 0.0, 1.0)

    D = _table((N, N), dist)
    if isinstance(D, np.ndarray):
        D = np.minimum(D, 1.0)
        np.fill_diagonal(D, 0.0)
        D = (D + D.T) / 2
    labels = [f"p{i}" for i in range(N)]
    A_ = FiniteStructure(sig, labels, D, {"ip": _table((N, N), ip)})
    return NetResult(A_, mesh, m, spec, pts)


def euclidean_structure(sig: Signature, pts, maps: dict, meta=None) -> FiniteStructure:
    """Finite structure on points of the unit ball with the half metric,
    ``ip`` and function symbols given as coordinate maps (snapped)."""
    pts = np.asarray(pts, dtype=float)
    N = len(pts)
    diff = pts[:, None, :] - pts[None, :, :]
    D = np.minimum(np.sqrt((diff ** 2).sum(axis=-1)) / 2, 1.0)
    np.fill_diagonal(D, 0.0)
    D = (D + D.T) / 2
    ipt = np.clip((1 + pts @ pts.T) / 2, 0.0, 1.0)
    funcs = {}
    errs = {}
    for name, fn in maps.items():
        img = np.asarray(fn(pts))
        idx, err = _snap(pts, img)
        funcs[name] = idx
        errs[name] = float(err.max()) / 2 if len(err) else 0.0
    return FiniteStructure(sig, [f"p{i}" for i in range(N)], D, {"ip": ipt}, funcs, {},
                           dict(meta or {}, snap_error=errs))


def _snap(points, images, chunk=1 << 22):
    """Index of the nearest point for each image (lowest index within TOL)."""
    points = np.asarray(points, dtype=float)
    images = np.asarray(images, dtype=float).reshape(-1, points.shape[1])
    idx = np.empty(len(images), dtype=np.int64)
    err = np.empty(len(images))
    step = max(1, chunk // max(len(points), 1))
    for s in range(0, len(images), step):
        blk = images[s:s + step]
        d = np.sqrt(((blk[:, None, :] - points[None, :, :]) ** 2).sum(axis=-1))
        best = d.min(axis=1)
        idx[s:s + step] = np.argmax(d <= best[:, None] + TOL, axis=1)
        err[s:s + step] = d[np.arange(len(blk)), idx[s:s + step]]
    return idx, err


def discretize_symbols(net: NetResult) -> FiniteStructure:
    """Add snapped interpretations of function symbols and constants.

    Snapping errors (in the space's metric) are recorded in
    ``structure.meta["snap_errors"]`` per symbol, flattened in C order.
    """
    spec, S = net.spec, net.structure
    full = spec.signature
    funcs, consts, snaps = {}, {}, {}
    N = S.size
    k = spec.kind
    if k == "interval":
        xs = net.coords[:, 0]
        for f in full.functions:           # only h
            idx, err = _snap(net.coords, (xs / 2)[:, None])
            funcs[f.name] = idx
            snaps[f.name] = err
        for c, x in spec.options.get("constants", {}).items():
            idx, err = _snap(net.coords, np.array([[float(x)]]))
            consts[c] = int(idx[0])
            snaps[c] = err
    elif k == "ball":
        op = spec.options.get("op")
        if op is not None:
            pts = net.coords
            img = pts / 2 if op == "half" else np.concatenate(
                [pts[:, :1], np.zeros_like(pts[:, 1:])], axis=1)
            idx, err = _snap(pts, img)
            funcs["U"] = idx
            snaps["U"] = err / 2
    elif k == "prob_algebra":
        mm = net.m
        full_set = (1 << mm) - 1
        funcs["inter"] = _table((N, N), np.bitwise_and, np.int64)
        funcs["union"] = _table((N, N), np.bitwise_or, np.int64)
        funcs["comp"] = np.bitwise_xor(np.arange(N), full_set)
        a = np.arange(N)
        # point map j -> j+1 (mod m) on {1..m}: rotate the bitmask left
        funcs["tau"] = ((a << 1) | (a >> (mm - 1))) & full_set if mm > 0 else a
        consts = {"bot": 0, "top": full_set}
    meta = dict(S.meta, **net.provenance())
    meta["snap_errors"] = {k: np.asarray(v).ravel().tolist() for k, v in snaps.items()}
    meta["max_snap_error"] = max((float(np.max(v)) for v in snaps.values() if len(v)), default=0.0)
    return FiniteStructure(full, S.labels, S.dist, dict(S.predicates), funcs, consts, meta)


def build_net(spec: CompactSpaceSpec, m: int, cap_points=None) -> FiniteStructure:
    return discretize_symbols(generate_net(spec, m, cap_points))


def covering_radius(net: NetResult, samples: np.ndarray) -> float:
    """Largest distance (space metric) from a sample point to its nearest net point."""
    k = net.spec.kind
    if k == "interval":
        return float(np.abs(samples[:, None] - net.coords[None, :, 0]).min(axis=1).max())
    if k == "circle":
        # samples are angles
        z = np.stack([np.cos(samples), np.sin(samples)], axis=1)
        d = np.sqrt(((z[:, None, :] - net.coords[None]) ** 2).sum(-1)) / 2
        return float(d.min(axis=1).max())
    if k == "ball":
        _, err = _snap(net.coords, samples)
        return float(err.max() / 2)
    return 0.0


# -- reference values ------------------------------------------------------------------

def continuity_bound(phi, sig: Signature, moved: dict) -> float:
    """Bound on |phi(a) - phi(b)| when each variable v moves by at most
    ``moved.get(v, 0)``, composing the moduli along the syntax tree.

    Valid on any structure in which every symbol obeys its modulus.
    """
    def term(t, env):
        if isinstance(t, A.Var):
            return env.get(t.name, 0.0)
        if isinstance(t, A.Const):
            return 0.0
        b = max(term(a, env) for a in t.args)
        return modulus_threshold(sig.function(t.func).modulus, min(b, 1.0))

    return _compose(phi, sig, moved, term)


def _compose(phi, sig, env, term):
    def go(node, env):
        if isinstance(node, A.Dist):
            return min(term(node.left, env) + term(node.right, env), 1.0)
        if isinstance(node, A.Pred):
            b = max(term(a, env) for a in node.args)
            return modulus_threshold(sig.predicate(node.name).modulus, min(b, 1.0))
        if isinstance(node, A.Val):
            return 0.0
        if isinstance(node, A.Neg):
            return go(node.arg, env)
        if isinstance(node, (A.DotMinus, A.TruncAdd, A.AbsDiff)):
            return min(go(node.left, env) + go(node.right, env), 1.0)
        if isinstance(node, (A.Max, A.Min)):
            return max(go(a, env) for a in node.args)
        if isinstance(node, A.Scale):
            return node.q * go(node.arg, env)
        if isinstance(node, A.Apply):
            return min(node.func.lipschitz() * go(node.arg, env), 1.0)
        if isinstance(node, (A.Sup, A.Inf)):
            return go(node.body, {**env, node.var: 0.0})
        raise TypeError(f"not a continuous formula: {node!r}")
    return go(phi, env)


def approximation_bound(phi, sig: Signature, mesh: float, snapped=True) -> float:
    """Bound on |phi^M(a) - phi^X(a)| for a net X of the given mesh and a
    tuple a from X, following the constructive proof of the approximation
    lemma: snapping adds ``mesh`` per function application and constant, and
    each quantifier adds the continuity of its body in the bound variable."""
    if mesh == 0:
        return 0.0

    def term(t):
        if isinstance(t, A.Var):
            return 0.0
        if isinstance(t, A.Const):
            return mesh if snapped else 0.0
        b = max(term(a) for a in t.args)
        return min(modulus_threshold(sig.function(t.func).modulus, min(b, 1.0))
                   + (mesh if snapped else 0.0), 1.0)

    def go(node):
        if isinstance(node, A.Dist):
            return min(term(node.left) + term(node.right), 1.0)
        if isinstance(node, A.Pred):
            b = max(term(a) for a in node.args)
            return modulus_threshold(sig.predicate(node.name).modulus, min(b, 1.0))
        if isinstance(node, A.Val):
            return 0.0
        if isinstance(node, A.Neg):
            return go(node.arg)
        if isinstance(node, (A.DotMinus, A.TruncAdd, A.AbsDiff)):
            return min(go(node.left) + go(node.right), 1.0)
        if isinstance(node, (A.Max, A.Min)):
            return max(go(a) for a in node.args)
        if isinstance(node, A.Scale):
            return node.q * go(node.arg)
        if isinstance(node, A.Apply):
            return min(node.func.lipschitz() * go(node.arg), 1.0)
        if isinstance(node, (A.Sup, A.Inf)):
            return min(go(node.body) + continuity_bound(node.body, sig, {node.var: mesh}), 1.0)
        raise TypeError(f"not a continuous formula: {node!r}")

    return go(phi)


@dataclass
class ReferenceValue:
    value: float
    error_bound: float
    m_ref: int
    mesh: float


def reference_value(spec: CompactSpaceSpec, sigma, m_ref: int, engine="dense",
                    cap_points=None) -> ReferenceValue:
    """Value of ``sigma`` on a fine net, as an approximation of its value on
    the compact space, with a modulus-derived error bound."""
    if A.free_vars(sigma):
        raise ValueError("reference_value needs a sentence")
    net = generate_net(spec, m_ref, cap_points)
    S = discretize_symbols(net)
    v = evaluate(S, sigma, opts=EvalOptions(engine=engine)).value
    snapped = bool(spec.signature.functions or spec.signature.constants)
    err = approximation_bound(sigma, spec.signature, net.mesh, snapped)
    return ReferenceValue(v, err, net.m, net.mesh)


def sample_points(spec: CompactSpaceSpec, count=1000) -> np.ndarray:
    """Deterministic sample of exact points (a low-discrepancy sequence)."""
    g = (math.sqrt(5) - 1) / 2
    k = spec.kind
    if k == "interval":
        return (np.arange(count) * g) % 1.0
    if k == "circle":
        return 2 * np.pi * ((np.arange(count) * g) % 1.0)
    if k == "ball":
        n = spec.options.get("n", 2)
        # Kronecker sequence in the cube, mapped into the ball radially
        alphas = [math.sqrt(p) % 1 for p in (2, 3, 5, 7, 11, 13)[:n]]
        u = np.stack([(np.arange(1, count + 1) * a) % 1.0 for a in alphas], axis=1) * 2 - 1
        r = np.sqrt((u ** 2).sum(axis=1))
        scale = np.where(r > 1, 1 / np.maximum(r, 1e-300), 1.0)
        return u * scale[:, None]
    return np.zeros(0)

