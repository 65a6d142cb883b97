"""Sentence builders and reproducible experiments.

Each ``run_*`` function returns an :class:`ExperimentReport` listing computed
values, the bounds they are compared against, and one entry per assertion
with both sides of the comparison.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import nets
from .config import TOL, ResourceError
from .evaluator import EvalOptions, eval_formula, evaluate
from .formula import ast as A
from .formula.parser import parse_formula
from .pl import PLFunc
from .signature import Signature, Symbol
from .structures import FiniteStructure

ALPHA = PLFunc.linear(2.0)   # min(2t, 1)
BETA = PLFunc.linear(4.0)    # min(4t, 1)
GOLDEN_ANGLE = math.pi * (3 - math.sqrt(5))
DENSE = EvalOptions(engine="dense")


# -- reports -----------------------------------------------------------------------

@dataclass
class ExperimentReport:
    name: str
    params: dict
    values: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    assertions: list = field(default_factory=list)
    atoms: int = 0
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def check(self, name, lhs, op, rhs, tol=None):
        tol = TOL if tol is None else tol
        lhs, rhs = float(lhs), float(rhs)
        ok = {"<=": lhs <= rhs + tol, ">=": lhs >= rhs - tol, "==": abs(lhs - rhs) <= tol,
              "<": lhs < rhs, ">": lhs > rhs, "===": lhs == rhs}[op]
        self.assertions.append({"name": name, "lhs": lhs, "op": op, "rhs": rhs,
                                "tol": tol, "pass": bool(ok)})
        return ok

    @property
    def passed(self) -> bool:
        return all(a["pass"] for a in self.assertions)

    def to_json(self, with_time=False) -> dict:
        out = {"experiment": self.name, "params": self.params, "values": self.values,
               "bounds": self.bounds, "assertions": self.assertions, "atoms": self.atoms,
               "pass": self.passed}
        if self.extra:
            out.update(self.extra)
        if with_time:
            out["wall_time"] = self.wall_time
        return out


class _Timer:
    def __init__(self, report):
        self.report = report

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self.report

    def __exit__(self, *exc):
        self.report.wall_time = time.perf_counter() - self.t0


def _eval(S, phi, report, asg=None, opts=DENSE):
    r = evaluate(S, phi, asg, opts)
    report.atoms += r.atoms
    return r.value


# -- threshold sentences -----------------------------------------------------------------

def build_threshold_sentences(P: str = "P", alpha: PLFunc = ALPHA, x="x", y="y", arity: int = 1):
    """``sigma_P = sup x (P(x) -. alpha(P(x) -. 1/2))`` and
    ``tau = sup x,y (d(x,y) -. alpha(d(x,y) -. 1/2))``.

    For ``arity > 1`` the sup in ``sigma_P`` runs over ``x, x1, x2, ...``.
    """
    _need_witness(alpha, "alpha")
    xs = [x] + [f"{x}{i}" for i in range(1, arity)]
    px = A.Pred(P, tuple(A.Var(v) for v in xs))
    sigma = A.sup(xs, A.dotminus(px, A.Apply("alpha", alpha, A.dotminus(px, 0.5))))
    dxy = A.Dist(A.Var(x), A.Var(y))
    tau = A.sup([x, y], A.dotminus(dxy, A.Apply("alpha", alpha, A.dotminus(dxy, 0.5))))
    return sigma, tau


def threshold_values(S: FiniteStructure, alpha: PLFunc = ALPHA) -> dict:
    """Values of ``sigma_P`` for every predicate of ``S`` and of ``tau``."""
    out = {}
    tau = None
    for p in S.signature.predicates:
        sigma, tau = build_threshold_sentences(p.name, alpha, arity=p.arity)
        out[p.name] = evaluate(S, sigma).value
    if tau is None:
        tau = build_threshold_sentences("P", alpha)[1]
    out["tau"] = evaluate(S, tau).value
    return out


def _need_witness(f: PLFunc, name):
    if not f.increasing or f.points[0][1] != 0.0:
        raise ValueError(f"witness function {name} must be increasing with value 0 at 0")


# -- injectivity / surjectivity ----------------------------------------------------------

INJ_SURJ = "injective=>surjective"
SURJ_INJ = "surjective=>injective"


@dataclass(frozen=True)
class InjSurjSpec:
    """``phi`` has free variables ``x``, ``y`` and the parameters ``z``."""
    phi: object
    alpha: PLFunc | None
    eps: float
    mode: str
    beta: PLFunc | None = None
    gamma: PLFunc | None = None
    x: str = "x"
    y: str = "y"
    z: tuple = ()

    def problems(self) -> list[str]:
        out = []
        if not 0 < self.eps <= 1:
            out.append("gap eps must lie in (0,1]")
        if self.mode not in (INJ_SURJ, SURJ_INJ):
            out.append(f"unknown mode {self.mode!r}")
        need = ["alpha", "beta" if self.mode == INJ_SURJ else "gamma"]
        for n in need:
            f = getattr(self, n)
            if f is None:
                out.append(f"witness function {n} unset")
            elif not f.increasing or f.points[0][1] != 0.0:
                out.append(f"witness function {n} must be increasing with value 0 at 0")
        return out


def build_injsurj(spec: InjSurjSpec, with_components=False):
    """Sentence ``inf z max(P, Q, R, S)`` (no ``inf`` when z is empty).

    With ``with_components`` also returns the dict of the four component
    formulas (free in z).
    """
    bad = spec.problems()
    if bad:
        raise ValueError("; ".join(bad))
    taken = A.all_vars(spec.phi) | set(spec.z)
    names = {}
    for base in ("x", "y", "y1", "y2", "x1", "x2", "w1", "w2"):
        names[base] = A.fresh_name(base, taken)
        taken.add(names[base])
    V = {k: A.Var(v) for k, v in names.items()}

    def phi(xv, yv):
        return A.substitute(spec.phi, {spec.x: V[xv], spec.y: V[yv]})

    def wit(f, name, arg):
        return A.Apply(name, f, arg)

    n = names
    P = A.Sup(n["x"], A.Inf(n["y"], phi("x", "y")))
    Q = A.sup([n["x"], n["y1"], n["y2"]], A.DotMinus(
        A.Dist(V["y1"], V["y2"]),
        wit(spec.alpha, "alpha", A.Max((phi("x", "y1"), phi("x", "y2"))))))
    if spec.mode == INJ_SURJ:
        R = A.sup([n["x1"], n["x2"], n["y"]], A.DotMinus(
            A.Dist(V["x1"], V["x2"]),
            wit(spec.beta, "beta", A.Max((phi("x1", "y"), phi("x2", "y"))))))
        S = A.Inf(n["y"], A.Sup(n["x"], A.dotminus(spec.eps, phi("x", "y"))))
    else:
        g = A.sup([n["w1"], n["w2"]], A.DotMinus(
            A.Dist(V["w1"], V["w2"]),
            wit(spec.gamma, "gamma", A.Max((phi("x1", "w1"), phi("x2", "w2"))))))
        R = A.inf([n["x1"], n["x2"]], A.Max((
            A.AbsDiff(A.Dist(V["x1"], V["x2"]), A.Val(float(spec.eps))), g)))
        S = A.Sup(n["y"], A.Inf(n["x"], phi("x", "y")))
    sigma = A.inf(list(spec.z), A.Max((P, Q, R, S)))
    if with_components:
        return sigma, {"P": P, "Q": Q, "R": R, "S": S}
    return sigma


def circle_injsurj_spec() -> InjSurjSpec:
    # squaring on the circle: surjective, antipodal points collide (gap 1)
    phi = A.Pred("P", (A.Var("x"), A.Var("x"), A.Var("y")))
    return InjSurjSpec(phi, ALPHA, 1.0, SURJ_INJ, gamma=ALPHA)


def interval_injsurj_spec() -> InjSurjSpec:
    # h(x) = x/2 on [0,1]: injective, y = 1 stays at distance 1/2 from the image
    phi = A.Dist(A.App("h", (A.Var("x"),)), A.Var("y"))
    return InjSurjSpec(phi, ALPHA, 0.5, INJ_SURJ, beta=BETA)


def _run_injsurj(name, spec, S, params):
    rep = ExperimentReport(name, params)
    with _Timer(rep):
        sigma, comps = build_injsurj(spec, with_components=True)
        for k, f in comps.items():
            rep.values[k] = _eval(S, f, rep)
        rep.values["Sigma"] = _eval(S, sigma, rep)
        rep.extra["sentence"] = A.show(sigma)
    return rep


def run_circle(m: int) -> ExperimentReport:
    """Surjective, non-injective squaring map on the circle net of size m."""
    S = nets.build_net(nets.circle(), m)
    rep = _run_injsurj("circle", circle_injsurj_spec(), S, {"m": m, "eps": 1.0})
    v = rep.values
    rep.bounds["sin(pi/m)"] = math.sin(math.pi / m)
    rep.check("Q exactly 0", v["Q"], "===", 0.0)
    rep.check("Sigma > 0", v["Sigma"], ">", 0.0)
    if m % 2 == 0:
        rep.check("Sigma = sin(pi/m)", v["Sigma"], "==", math.sin(math.pi / m))
    return rep


def run_interval(m: int) -> ExperimentReport:
    """Injective, non-surjective halving map on the interval net of size m+1."""
    S = nets.build_net(nets.interval(), m)
    rep = _run_injsurj("interval", interval_injsurj_spec(), S, {"m": m, "eps": 0.5})
    v = rep.values
    rep.bounds["mesh"] = 1 / (2 * m)
    rep.check("Q exactly 0", v["Q"], "===", 0.0)
    rep.check("Sigma > 0", v["Sigma"], ">", 0.0)
    return rep


# -- probability algebras -------------------------------------------------------------

def apaa_sentence(n: int, e="e"):
    """``inf e max(|1/n - mu(e)|, mu(e & tau e), ..., mu(e & tau^(n-1) e))``."""
    ev = A.Var(e)
    terms = [A.AbsDiff(A.Val(1.0 / n), A.Pred("mu", (ev,)))]
    t = ev
    for _ in range(1, n):
        t = A.App("tau", (t,))
        terms.append(A.Pred("mu", (A.App("inter", (ev, t)),)))
    return A.Inf(e, A.Max(tuple(terms)))


def atomless_sentence():
    return parse_formula(
        "sup x . inf y . |mu(inter(x, y)) - mu(inter(x, comp(y)))|",
        nets.prob_algebra().signature)


def _mask(elements):
    return sum(1 << (j - 1) for j in elements)


def run_apaa(m: int, n: int, cap: int = 14) -> ExperimentReport:
    if not 1 <= n < m:
        raise ValueError("need 1 <= n < m")
    if m > cap:
        raise ResourceError(f"m={m} exceeds the brute-force cap {cap}")
    S = nets.build_net(nets.prob_algebra(m), m)
    rep = ExperimentReport("apaa", {"m": m, "n": n})
    with _Timer(rep):
        sigma = apaa_sentence(n)
        brute = _eval(S, sigma, rep)
        # largest k with (k-1)/(m-1) <= 1/n, i.e. (k-1) n <= m-1
        k = (m - 1) // n + 1
        e = [1 + i * n for i in range(k)]
        wval = _eval(S, sigma.body, rep, {"e": _mask(e)}, EvalOptions())
        bound = 3 / (m - 1)
        rep.values.update(brute=brute, witness=wval)
        rep.bounds["3/(m-1)"] = bound
        rep.extra["witness_event"] = e
        rep.extra["k"] = k
        rep.check("brute <= witness", brute, "<=", wval)
        rep.check("witness <= 3/(m-1)", wval, "<=", bound)
        rep.check("brute <= 3/(m-1)", brute, "<=", bound)
    return rep


def run_atomless(m: int, cap: int = 14) -> ExperimentReport:
    if m > cap:
        raise ResourceError(f"m={m} exceeds the brute-force cap {cap}")
    S = nets.build_net(nets.prob_algebra(m), m)
    rep = ExperimentReport("atomless", {"m": m})
    with _Timer(rep):
        sigma = atomless_sentence()
        v = _eval(S, sigma, rep)
        rep.values["value"] = v
        rep.bounds["1/m"] = 1 / m
        rep.check("value = 1/m", v, "==", 1 / m)
        # even-cardinality events split perfectly
        inner = sigma.body
        even = [x for x in range(S.size) if bin(x).count("1") % 2 == 0]
        worst = max(_eval(S, inner, rep, {"x": x}) for x in even)
        rep.values["even_sup_inner_inf"] = worst
        rep.check("even events: inner inf = 0", worst, "==", 0.0)
    return rep


# -- unitary eigenvalue sentence ---------------------------------------------------------

def unitary_angles(m: int):
    return [j * GOLDEN_ANGLE for j in range(m)]


def _rotate_blocks(pts, angles):
    pts = np.asarray(pts, dtype=float)
    out = np.empty_like(pts)
    for j, th in enumerate(angles):
        c, s = math.cos(th), math.sin(th)
        a, b = pts[:, 2 * j], pts[:, 2 * j + 1]
        out[:, 2 * j] = c * a - s * b
        out[:, 2 * j + 1] = s * a + c * b
    return out


def _zmul(pts, theta):
    # complex scalar multiplication by e^{i theta}, coordinates paired (re, im)
    c, s = math.cos(theta), math.sin(theta)
    pts = np.asarray(pts, dtype=float)
    out = np.empty_like(pts)
    out[:, 0::2] = c * pts[:, 0::2] - s * pts[:, 1::2]
    out[:, 1::2] = s * pts[:, 0::2] + c * pts[:, 1::2]
    return out


def unitary_signature(dim: int) -> Signature:
    half = PLFunc.linear(0.5)
    ident = PLFunc.identity()
    # U and zmul are isometries
    return Signature(f"ball{dim}+U", (Symbol("ip", 2, half),),
                     (Symbol("U", 1, ident), Symbol("zmul", 1, ident)))


def unitary_sentence():
    """Rescaled eigenvalue sentence: ``ip`` is (1 + <x,y>)/2 and ``d`` is half
    the norm distance, so each term is half its unscaled counterpart."""
    x = A.Var("x")
    return A.Inf("x", A.Max((
        A.AbsDiff(A.Pred("ip", (x, x)), A.Val(1.0)),
        A.Dist(A.App("U", (x,)), A.App("zmul", (x,))),
    )))


def run_unitary_eigen(n: int, m: int | None = None, h: float | None = None) -> ExperimentReport:
    m = n + 2 if m is None else m
    if not 0 <= n < m:
        raise ValueError("need 0 <= n < m")
    if m > 16:
        raise ResourceError("dimension 2m capped at 32")
    dim = 2 * m
    th = unitary_angles(m)
    U = lambda p: _rotate_blocks(p, th)  # noqa: E731
    Z = lambda p: _zmul(p, th[n])  # noqa: E731
    sig = unitary_signature(dim)
    sigma = unitary_sentence()
    rep = ExperimentReport("unitary", {"n": n, "m": m, "dim": dim})
    with _Timer(rep):
        e = np.zeros((1, dim))
        e[0, 2 * n] = 1.0
        # exact universe: the eigenvector and its image
        pts = np.concatenate([e, U(e)])
        W = nets.euclidean_structure(sig, pts, {"U": U, "zmul": Z})
        wit = _eval(W, sigma.body, rep, {"x": 0}, EvalOptions())
        rep.values["witness"] = wit
        rep.check("witness value = 0", wit, "==", 0.0)
        # coarse patch: unit vectors within half a grid step of e_n
        h = h or 1.0 / (2 * m)
        patch = [e[0]]
        for k in range(dim):
            for sgn in (-0.5, 0.5):
                p = e[0].copy()
                p[k] += sgn * h
                patch.append(p / np.linalg.norm(p))
        patch = np.array(patch[1:])
        mesh = float(np.max(np.linalg.norm(patch - e, axis=1)) / 2)
        pts = np.concatenate([patch, U(patch), Z(patch)])
        C = nets.euclidean_structure(sig, pts, {"U": U, "zmul": Z})
        # patch points have their images in the universe, so these are exact
        at = [_eval(C, sigma.body, rep, {"x": i}, EvalOptions()) for i in range(len(patch))]
        rep.values["coarse"] = min(at)
        rep.values["coarse_worst_point"] = max(at)
        rep.bounds["2*mesh"] = 2 * mesh
        rep.extra["patch_points"] = len(patch)
        rep.check("coarse value <= 2*mesh", min(at), "<=", 2 * mesh)
        rep.check("every patch point <= 2*mesh", max(at), "<=", 2 * mesh)
    return rep


# -- categoricity formulas ---------------------------------------------------------------------

@dataclass
class Categoricity:
    psi: object
    chi: object
    tau: object
    phi: object
    variables: list
    r: list
    j: list
    s: np.ndarray


def build_categoricity(net: "nets.NetResult | FiniteStructure", m: int, P="P", F="h") -> Categoricity:
    """Formulas pinning down the net's points up to 1/m, read off the net."""
    S = net if isinstance(net, FiniteStructure) else nets.discretize_symbols(net)
    sig = S.signature
    if sig.kind(P) != "predicate" or sig.kind(F) != "function":
        raise ValueError(f"signature needs unary predicate {P!r} and unary function {F!r}")
    N = S.size
    d = np.asarray(S.dist, dtype=float)
    Pt = np.asarray(S.predicates[P], dtype=float)
    Ft = np.asarray(S.functions[F])
    snap = S.meta.get("snap_errors", {}).get(F)
    xs = [f"x{i + 1}" for i in range(N)]
    V = [A.Var(v) for v in xs]
    r = [float(Pt[i]) for i in range(N)]
    j = []
    for i in range(N):
        # nearest point to F(a_i): the tabled image itself
        err = snap[i] if snap is not None else 0.0
        jj = int(np.argmin(d[Ft[i]]))
        if d[Ft[i], jj] + err > 1 / m + TOL:
            raise ValueError(f"no admissible j({i + 1},{m}): net too coarse for m={m}")
        j.append(jj)
    inv = 1.0 / m
    psi = A.Sup("x", A.Min(tuple(A.dotminus(A.Dist(A.Var("x"), V[i]), inv) for i in range(N))))
    chi = A.Max(tuple(A.Max((
        A.AbsDiff(A.Pred(P, (V[i],)), A.Val(r[i])),
        A.dotminus(A.Dist(A.App(F, (V[i],)), V[j[i]]), inv))) for i in range(N)))
    tau = A.Max(tuple(A.AbsDiff(A.Dist(V[a], V[b]), A.Val(float(d[a, b])))
                      for a in range(N) for b in range(N)))
    return Categoricity(psi, chi, tau, A.Max((psi, chi, tau)), xs, r, j, d)


def run_categoricity(m: int, factors=(2, 4)) -> ExperimentReport:
    spec = nets.interval()
    sig = spec.signature
    net = nets.generate_net(spec, m)
    S = nets.discretize_symbols(net)
    cat = build_categoricity(S, m)
    rep = ExperimentReport("categoricity", {"m": m, "factors": list(factors)})
    with _Timer(rep):
        asg = {v: i for i, v in enumerate(cat.variables)}
        vals = {k: _eval(S, getattr(cat, k), rep, asg, EvalOptions())
                for k in ("psi", "chi", "tau", "phi")}
        rep.values.update({f"{k}_defining": v for k, v in vals.items()})
        rep.check("phi_m = 0 at defining tuple", vals["phi"], "==", 0.0)
        rep.check("tau_m = 0 at defining tuple", vals["tau"], "===", 0.0)
        coarse_err = nets.approximation_bound(cat.phi, sig, net.mesh)
        prev = vals["phi"]
        for f in factors:
            fine = nets.generate_net(spec, f * m)
            F = nets.discretize_symbols(fine)
            coords = fine.coords[:, 0]
            idx = [int(np.argmin(np.abs(coords - net.coords[i, 0]))) for i in range(S.size)]
            move = float(max(abs(coords[idx[i]] - net.coords[i, 0]) for i in range(S.size)))
            v = _eval(F, cat.phi, rep, dict(zip(cat.variables, idx)), EvalOptions())
            bound = min(1.0, vals["phi"] + coarse_err
                        + nets.approximation_bound(cat.phi, sig, fine.mesh)
                        + nets.continuity_bound(cat.phi, sig, {x: move for x in cat.variables}))
            rep.values[f"phi_fine_x{f}"] = v
            rep.bounds[f"bound_x{f}"] = bound
            rep.check(f"phi on {f}x finer net <= composed bound", v, "<=", bound)
            rep.check(f"phi on {f}x finer net nonincreasing", v, "<=", prev)
            prev = v
        rep.extra["n(m)"] = S.size
        rep.extra["j"] = [x + 1 for x in cat.j]
    return rep


# -- convergence -----------------------------------------------------------------------------

@dataclass(frozen=True)
class BatteryItem:
    name: str
    text: str
    limit: object = None     # closed-form limit value (probability algebras)


def _tau_text():
    return "sup x, y . (d(x,y) -. alpha((d(x,y) -. 0.5)))"


DEFS = {"alpha": ALPHA}

BATTERIES = {
    "interval": [
        BatteryItem("closest", "sup x . inf y . d(x,y)"),
        BatteryItem("h-image", "sup y . inf x . d(h(x), y)"),
        BatteryItem("P-scaling", "sup x . |P(h(x)) - scale(0.5, P(x))|"),
        BatteryItem("P-third", "inf x . |P(x) - 1/3|"),
        BatteryItem("dist-0.3", "sup x . inf y . |d(x,y) - 0.3|"),
        BatteryItem("P-drop", "sup x . (P(x) -. P(h(x)))"),
        BatteryItem("h-contraction", "sup x, y . |d(h(x), h(y)) - scale(0.5, d(x,y))|"),
    ],
    "circle": [
        BatteryItem("S", "sup y . inf x . P(x,x,y)"),
        BatteryItem("P-square", "sup x . inf y . P(x,x,y)"),
        BatteryItem("closest", "sup x . inf y . d(x,y)"),
        BatteryItem("dist-0.5", "sup x . inf y . |d(x,y) - 0.5|"),
        BatteryItem("tau", _tau_text()),
        BatteryItem("fixed-square", "inf x . P(x,x,x)"),
        BatteryItem("half-square", "inf x . |P(x,x,x) - 0.5|"),
    ],
    "ball": [
        BatteryItem("closest", "sup x . inf y . d(x,y)"),
        BatteryItem("unit", "inf x . |ip(x,x) - 1|"),
        BatteryItem("orthogonal", "sup x . inf y . ip(x,y)"),
        BatteryItem("norm-0.3", "inf x . |ip(x,x) - 0.3|"),
        BatteryItem("norm-0.6", "inf x . |ip(x,x) - 0.6|"),
        BatteryItem("symmetric", "sup x, y . |ip(x,y) - ip(y,x)|"),
        BatteryItem("half-ip", "sup x . inf y . |ip(x,y) - 0.5|"),
    ],
    "prob_algebra": [
        BatteryItem("atomless", "sup x . inf y . |mu(inter(x, y)) - mu(inter(x, comp(y)))|", 0.0),
        BatteryItem("half-event", "inf e . |0.5 - mu(e)|", 0.0),
        BatteryItem("closest", "sup x . inf y . d(x,y)", 0.0),
        BatteryItem("tau-invariant", "sup x . |mu(x) - mu(tau(x))|", 0.0),
        BatteryItem("apaa-2", "inf e . max(|0.5 - mu(e)|, mu(inter(e, tau(e))))", 0.0),
        BatteryItem("complement", "sup x . d(inter(x, comp(x)), bot)", 0.0),
        BatteryItem("halving", "sup x . inf y . |mu(y) - scale(0.5, mu(x))|", 0.0),
        BatteryItem("full", "sup x . mu(x)", 1.0),
    ],
}

DEFAULT_MS = {"prob_algebra": [4, 6, 8, 10]}


def battery_for(spec: nets.CompactSpaceSpec):
    items = BATTERIES[spec.kind]
    sig = spec.signature
    return [(it, parse_formula(it.text, sig, DEFS)) for it in items]


CSV_HEADER = ["sentence", "m", "value", "reference", "error"]


def run_convergence(spec: nets.CompactSpaceSpec, battery=None, ms=None,
                    m_ref: int = 1024) -> ExperimentReport:
    """Value of each sentence on nets of increasing resolution, against a
    fine-net reference (closed-form limits for probability algebras)."""
    battery = battery or battery_for(spec)
    ms = list(ms or DEFAULT_MS.get(spec.kind, [8, 16, 32, 64]))
    exact = spec.kind == "prob_algebra"
    rep = ExperimentReport("convergence", {"space": spec.describe(), "ms": ms,
                                           "m_ref": None if exact else m_ref})
    rows = []
    with _Timer(rep):
        structs = {m: nets.build_net(spec, m) for m in ms}
        for it, phi in battery:
            if exact:
                ref, ref_err = float(it.limit), 0.0
            else:
                rv = nets.reference_value(spec, phi, m_ref)
                ref, ref_err = rv.value, rv.error_bound
            vals, errs = [], []
            for m in ms:
                v = _eval(structs[m], phi, rep)
                vals.append(v)
                errs.append(abs(v - ref))
                rows.append([it.name, m, v, ref, abs(v - ref)])
            rep.values[it.name] = {"values": vals, "reference": ref,
                                   "reference_error_bound": ref_err, "errors": errs}
            for a, b, e0, e1 in zip(ms, ms[1:], errs, errs[1:]):
                rep.check(f"{it.name}: error(m={b}) <= error(m={a})", e1, "<=", e0)
            if abs(ref) <= TOL:
                rep.check(f"{it.name}: value(m={ms[-1]}) <= value(m={ms[0]})", vals[-1], "<=", vals[0])
                rep.check(f"{it.name}: value(m={ms[-1]}) <= 0.2", vals[-1], "<=", 0.2)
    rep.extra["rows"] = rows
    return rep


def convergence_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for name, m, v, ref, err in report.extra["rows"]:
        w.writerow([name, m, "%.12g" % v, "%.12g" % ref, "%.12g" % err])
    return buf.getvalue()


# -- registry ------------------------------------------------------------------------------

EXPERIMENTS = ("apaa", "atomless", "circle", "interval", "unitary", "categoricity", "convergence")


def value_of(S: FiniteStructure, text: str) -> float:
    """Convenience: parse ``text`` against ``S``'s signature and evaluate."""
    return eval_formula(S, parse_formula(text, S.signature, DEFS))
