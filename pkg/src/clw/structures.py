"""Finite metric structures given by explicit tables.

A :class:`FiniteStructure` stores the distance matrix and one table per
symbol.  Tables are numpy arrays, or :class:`ComputedTable` objects when a
full table would be too large to hold (the ternary circle predicate, the
Boolean operations of a probability algebra); both support indexing by
tuples of integer arrays.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import TOL, ResourceError
from .pl import PLFunc
from .signature import Signature, classical_signature

log = logging.getLogger(__name__)


class StructureError(ValueError):
    pass


class ComputedTable:
    """A read-only table whose entries are computed on demand.

    ``fn`` receives one integer array (or int) per axis, already broadcast,
    and returns the entries.
    """

    def __init__(self, shape, fn, dtype=float):
        self.shape = tuple(shape)
        self.ndim = len(self.shape)
        self.fn = fn
        self.dtype = np.dtype(dtype)

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        if len(key) != self.ndim:
            raise IndexError(f"expected {self.ndim} indices, got {len(key)}")
        return self.fn(*np.broadcast_arrays(*[np.asarray(k) for k in key]))

    @property
    def size(self):
        return int(np.prod(self.shape, dtype=np.int64))

    def materialize(self, cap=50_000_000) -> np.ndarray:
        if self.size > cap:
            raise ResourceError(f"table with {self.size} entries exceeds cap {cap}")
        idx = np.indices(self.shape, sparse=True)
        return np.asarray(self[tuple(idx)], dtype=self.dtype).reshape(self.shape)

    def __array__(self, dtype=None, copy=None):
        arr = self.materialize()
        return arr if dtype is None else arr.astype(dtype)


def as_array(table, cap=50_000_000) -> np.ndarray:
    if isinstance(table, ComputedTable):
        return table.materialize(cap)
    return np.asarray(table)


@dataclass(frozen=True, eq=False)
class FiniteStructure:
    signature: Signature
    labels: tuple
    dist: object
    predicates: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        return self.labels.index(str(label))

    def with_tables(self, **changes) -> "FiniteStructure":
        """Copy with some fields replaced; table dicts are merged, not replaced."""
        kw = dict(signature=self.signature, labels=self.labels, dist=self.dist,
                  predicates=dict(self.predicates), functions=dict(self.functions),
                  constants=dict(self.constants), meta=dict(self.meta))
        for k, v in changes.items():
            if k in ("predicates", "functions", "constants"):
                kw[k].update(v)
            else:
                kw[k] = v
        return FiniteStructure(**kw)

    # -- serialization ------------------------------------------------------

    def to_json(self, cap=50_000_000) -> dict:
        return {
            "signature": self.signature.to_json(),
            "points": list(self.labels),
            "dist": as_array(self.dist, cap).tolist(),
            "predicates": {k: as_array(v, cap).ravel().tolist() for k, v in self.predicates.items()},
            "functions": {k: as_array(v, cap).ravel().astype(int).tolist()
                          for k, v in self.functions.items()},
            "constants": {k: int(v) for k, v in self.constants.items()},
        }

    @classmethod
    def from_json(cls, data: dict, base: Path | None = None) -> "FiniteStructure":
        sig = data["signature"]
        if isinstance(sig, str):
            path = Path(sig)
            if base is not None and not path.is_absolute():
                path = base / path
            sig = Signature.load(path)
        else:
            sig = Signature.from_json(sig)
        labels = [str(p) for p in data["points"]]
        n = len(labels)
        dist = np.asarray(data["dist"], dtype=float)
        preds, funcs = {}, {}
        for name, flat in data.get("predicates", {}).items():
            k = sig.predicate(name).arity
            preds[name] = _reshape(flat, n, k, float, name)
        for name, flat in data.get("functions", {}).items():
            k = sig.function(name).arity
            funcs[name] = _reshape(flat, n, k, np.int64, name)
        consts = {k: int(v) for k, v in data.get("constants", {}).items()}
        return cls(sig, tuple(labels), dist, preds, funcs, consts)

    @classmethod
    def load(cls, path) -> "FiniteStructure":
        path = Path(path)
        return cls.from_json(json.loads(path.read_text()), base=path.parent)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")


def _reshape(flat, n, k, dtype, name):
    arr = np.asarray(flat, dtype=dtype)
    if arr.size != n ** k:
        raise StructureError(f"table {name!r} has {arr.size} entries, expected {n}^{k} = {n ** k}")
    return arr.reshape((n,) * k)


# -- validation -----------------------------------------------------------------

def validate_structure(A: FiniteStructure, triangle_cap: int = 1200) -> list[str]:
    """Metric-axiom and totality violations of ``A``, each with a witness."""
    out: list[str] = []
    n = A.size
    lab = A.labels
    if n < 1:
        return ["structure has no points"]
    if len(set(lab)) != n:
        out.append("duplicate point labels")
    if isinstance(A.dist, ComputedTable) and n > triangle_cap:
        log.info("distance table of %d points not checked exhaustively", n)
        d = None
    else:
        d = as_array(A.dist)
    if d is not None:
        if d.shape != (n, n):
            return out + [f"distance matrix has shape {d.shape}, expected ({n}, {n})"]
        bad = np.argwhere((d < -TOL) | (d > 1 + TOL))
        if len(bad):
            i, j = bad[0]
            out.append(f"distance out of [0,1]: d({lab[i]},{lab[j]}) = {d[i, j]}")
        bad = np.argwhere(np.abs(d - d.T) > TOL)
        if len(bad):
            i, j = bad[0]
            out.append(f"symmetry violated: d({lab[i]},{lab[j]}) = {d[i, j]} != d({lab[j]},{lab[i]}) = {d[j, i]}")
        diag = np.flatnonzero(np.abs(np.diag(d)) > TOL)
        if len(diag):
            i = diag[0]
            out.append(f"nonzero diagonal: d({lab[i]},{lab[i]}) = {d[i, i]}")
        off = d + np.eye(n)
        bad = np.argwhere(off <= 0)
        if len(bad):
            i, j = bad[0]
            out.append(f"distinct points at distance 0: {lab[i]}, {lab[j]}")
        if n <= triangle_cap:
            w = _triangle_witness(d)
            if w is not None:
                a, b, c = w
                out.append(
                    f"triangle inequality violated: d({lab[a]},{lab[c]}) = {d[a, c]} > "
                    f"d({lab[a]},{lab[b]}) + d({lab[b]},{lab[c]}) = {d[a, b] + d[b, c]} "
                    f"(witness ({lab[a]},{lab[b]},{lab[c]}))")
        else:
            log.info("triangle inequality not checked for %d points (cap %d)", n, triangle_cap)
    sig = A.signature
    for p in sig.predicates:
        if p.name not in A.predicates:
            out.append(f"predicate {p.name!r} not interpreted")
            continue
        t = A.predicates[p.name]
        if tuple(t.shape) != (n,) * p.arity:
            out.append(f"predicate {p.name!r} table has shape {t.shape}, expected {(n,) * p.arity}")
        elif not isinstance(t, ComputedTable):
            t = np.asarray(t)
            if t.size and (t.min() < -TOL or t.max() > 1 + TOL):
                idx = np.unravel_index(np.argmax((t < -TOL) | (t > 1 + TOL)), t.shape)
                out.append(f"predicate {p.name!r} value {t[idx]} at {_tup(lab, idx)} outside [0,1]")
    for f in sig.functions:
        if f.name not in A.functions:
            out.append(f"function {f.name!r} not interpreted")
            continue
        t = A.functions[f.name]
        if tuple(t.shape) != (n,) * f.arity:
            out.append(f"function {f.name!r} table has shape {t.shape}, expected {(n,) * f.arity}")
        elif not isinstance(t, ComputedTable):
            t = np.asarray(t)
            if t.size and (t.min() < 0 or t.max() >= n):
                idx = np.unravel_index(np.argmax((t < 0) | (t >= n)), t.shape)
                out.append(f"function {f.name!r} value {t[idx]} at {_tup(lab, idx)} is not a point index")
    for c in sig.constants:
        if c not in A.constants:
            out.append(f"constant {c!r} not interpreted")
        elif not 0 <= A.constants[c] < n:
            out.append(f"constant {c!r} assigned out-of-range index {A.constants[c]}")
    return out


def _tup(labels, idx):
    return "(" + ",".join(labels[i] for i in idx) + ")"


def _triangle_witness(d):
    n = len(d)
    for b in range(n):
        # d[a,c] <= d[a,b] + d[b,c] for all a, c
        slack = d[:, b][:, None] + d[b, :][None, :] - d
        if slack.min() < -TOL:
            a, c = np.unravel_index(np.argmin(slack), slack.shape)
            return int(a), b, int(c)
    return None


# -- modulus compliance ---------------------------------------------------------

@dataclass
class SymbolCompliance:
    name: str
    kind: str
    status: str                      # "full" | "almost" | "violation"
    eps0: float | None = None
    witness: tuple | None = None     # (tuple_a, tuple_b, distance, discrepancy)
    pairs_checked: int = 0

    def to_json(self):
        out = {"symbol": self.name, "kind": self.kind, "status": self.status,
               "pairs_checked": self.pairs_checked}
        if self.eps0 is not None:
            out["eps0"] = self.eps0
        if self.witness is not None:
            a, b, dd, e = self.witness
            out["witness"] = {"a": list(a), "b": list(b), "distance": dd, "discrepancy": e}
        return out


@dataclass
class ComplianceReport:
    symbols: list

    @property
    def classification(self) -> str:
        st = {s.status for s in self.symbols}
        if "violation" in st:
            return "invalid"
        if "almost" in st:
            return "almost-structure"
        return "structure"

    def __getitem__(self, name) -> SymbolCompliance:
        for s in self.symbols:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_json(self):
        return {"classification": self.classification,
                "symbols": [s.to_json() for s in self.symbols]}


def modulus_threshold_array(delta: PLFunc, d: np.ndarray) -> np.ndarray:
    """Vectorized :func:`clw.pl.modulus_threshold`."""
    d = np.asarray(d, dtype=float)
    out = np.ones_like(d)
    pts = delta.points
    done = np.zeros(d.shape, dtype=bool)
    if pts[0][1] > 0:
        hit = d < pts[0][1]
        out[hit] = 0.0
        done |= hit
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if y1 <= y0:
            continue
        hit = ~done & (d >= y0) & (d < y1)
        out[hit] = np.minimum(x0 + (d[hit] - y0) * (x1 - x0) / (y1 - y0), 1.0)
        done |= hit
    return out


def compliance_report(A: FiniteStructure, pair_cap: int = 60_000_000,
                      chunk: int = 1 << 21) -> ComplianceReport:
    """Check every symbol of ``A`` against its modulus of uniform continuity.

    For argument tuples at (max-metric) distance D with output discrepancy e,
    the modulus allows e up to ``modulus_threshold(Δ, D)``.  A function symbol
    whose violations all sit at eps >= eps0 > 0 is only *almost* compliant;
    ``eps0`` is the least modulus threshold over the violating pairs.
    Predicates are either fully compliant or in violation.
    """
    d = as_array(A.dist)
    n = A.size
    results = []
    sig = A.signature
    for kind, syms, tables in (("predicate", sig.predicates, A.predicates),
                               ("function", sig.functions, A.functions)):
        for s in syms:
            table = as_array(tables[s.name])
            results.append(_symbol_compliance(d, n, s, kind, table, pair_cap, chunk))
    return ComplianceReport(results)


def _symbol_compliance(d, n, sym, kind, table, pair_cap, chunk):
    k = sym.arity
    m = n ** k
    if m * m > pair_cap:
        raise ResourceError(f"compliance check of {sym.name!r} needs {m * m} pairs (cap {pair_cap})")
    tuples = np.array(list(itertools.product(range(n), repeat=k)), dtype=np.int64).reshape(m, k)
    flat = table.reshape(-1)
    rows = max(1, chunk // m)
    worst_thr = None
    witness = None
    first_violation = None
    for start in range(0, m, rows):
        a = tuples[start:start + rows]
        dd = np.zeros((len(a), m))
        for i in range(k):
            np.maximum(dd, d[a[:, i][:, None], tuples[:, i][None, :]], out=dd)
        fa = flat[start:start + rows][:, None]
        fb = flat[None, :]
        e = np.abs(fa - fb) if kind == "predicate" else d[fa, fb]
        thr = modulus_threshold_array(sym.modulus, np.clip(dd, 0.0, 1.0))
        bad = e > thr + TOL
        if bad.any():
            tv = np.where(bad, thr, np.inf)
            p, q = np.unravel_index(np.argmin(tv), tv.shape)
            if worst_thr is None or tv[p, q] < worst_thr:
                worst_thr = float(tv[p, q])
                witness = (tuple(int(x) for x in a[p]), tuple(int(x) for x in tuples[q]),
                           float(dd[p, q]), float(e[p, q]))
            if first_violation is None:
                first_violation = witness
    if witness is None:
        return SymbolCompliance(sym.name, kind, "full", pairs_checked=m * m)
    if kind == "function" and worst_thr > TOL:
        return SymbolCompliance(sym.name, kind, "almost", eps0=worst_thr, witness=witness,
                                pairs_checked=m * m)
    return SymbolCompliance(sym.name, kind, "violation", witness=witness, pairs_checked=m * m)


# -- classical structures ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassicalStructure:
    signature: Signature
    labels: tuple
    relations: dict = field(default_factory=dict)   # name -> bool array, True = holds
    functions: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))

    @property
    def size(self) -> int:
        return len(self.labels)

    def problems(self) -> list[str]:
        n = self.size
        out = []
        for p in self.signature.predicates:
            t = self.relations.get(p.name)
            if t is None or np.shape(t) != (n,) * p.arity:
                out.append(f"relation {p.name!r} missing or wrong shape")
        for f in self.signature.functions:
            t = self.functions.get(f.name)
            if t is None or np.shape(t) != (n,) * f.arity:
                out.append(f"function {f.name!r} missing or wrong shape")
            elif np.size(t) and (np.min(t) < 0 or np.max(t) >= n):
                out.append(f"function {f.name!r} has out-of-range values")
        for c in self.signature.constants:
            if not 0 <= self.constants.get(c, -1) < n:
                out.append(f"constant {c!r} missing or out of range")
        return out

    def to_json(self) -> dict:
        return {
            "signature": self.signature.to_json(),
            "points": list(self.labels),
            "relations": {k: np.asarray(v, dtype=bool).ravel().tolist() for k, v in self.relations.items()},
            "functions": {k: np.asarray(v).ravel().astype(int).tolist() for k, v in self.functions.items()},
            "constants": {k: int(v) for k, v in self.constants.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "ClassicalStructure":
        sig = Signature.from_json(data["signature"])
        sig = classical_signature(sig.name, [(p.name, p.arity) for p in sig.predicates],
                                  [(f.name, f.arity) for f in sig.functions], sig.constants)
        labels = [str(p) for p in data["points"]]
        n = len(labels)
        rels = {k: _reshape(v, n, sig.predicate(k).arity, bool, k) for k, v in data.get("relations", {}).items()}
        funcs = {k: _reshape(v, n, sig.function(k).arity, np.int64, k) for k, v in data.get("functions", {}).items()}
        return cls(sig, tuple(labels), rels, funcs, {k: int(v) for k, v in data.get("constants", {}).items()})


def classical_as_metric(B: ClassicalStructure) -> FiniteStructure:
    """View ``B`` as a metric structure: discrete metric, identity moduli,
    and relation membership mapped to predicate value 0."""
    problems = B.problems()
    if problems:
        raise StructureError("; ".join(problems))
    n = B.size
    sig = B.signature
    if not sig.classical:
        sig = classical_signature(sig.name, [(p.name, p.arity) for p in sig.predicates],
                                  [(f.name, f.arity) for f in sig.functions], sig.constants)
    dist = 1.0 - np.eye(n)
    preds = {k: np.where(np.asarray(v, dtype=bool), 0.0, 1.0) for k, v in B.relations.items()}
    funcs = {k: np.asarray(v, dtype=np.int64) for k, v in B.functions.items()}
    return FiniteStructure(sig, B.labels, dist, preds, funcs, dict(B.constants))


# -- quotient by the closeness relation -------------------------------------------

class QuotientError(StructureError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass
class Quotient:
    structure: ClassicalStructure
    class_of: np.ndarray            # point index -> class index
    classes: list                   # class index -> list of point indices

    def to_json(self, A: FiniteStructure | None = None):
        out = self.structure.to_json()
        out["classes"] = [[A.labels[i] if A else i for i in c] for c in self.classes]
        return out


def quotient_discretize(A: FiniteStructure, e_threshold: float = 0.25,
                        truth_threshold: float = 0.5, symbols=None) -> Quotient:
    """Collapse points within ``e_threshold`` of each other into one point.

    Predicates become relations (``[a]`` in ``P`` iff ``P(a) <= truth_threshold``)
    and functions act on classes.  Raises :class:`QuotientError` with a witness
    when closeness is not transitive or a symbol does not respect classes.
    """
    d = as_array(A.dist)
    n = A.size
    lab = A.labels
    E = d <= e_threshold + TOL
    # transitivity: E(a,b) and E(b,c) imply E(a,c)
    path = (E.astype(np.int64) @ E.astype(np.int64)) > 0
    bad = np.argwhere(path & ~E)
    if len(bad):
        a, c = (int(x) for x in bad[0])
        b = int(np.flatnonzero(E[a] & E[:, c])[0])
        raise QuotientError(
            f"closeness relation not transitive: d({lab[a]},{lab[b]}) = {d[a, b]}, "
            f"d({lab[b]},{lab[c]}) = {d[b, c]}, but d({lab[a]},{lab[c]}) = {d[a, c]} > {e_threshold}",
            (lab[a], lab[b], lab[c]))
    cls = -np.ones(n, dtype=np.int64)
    classes = []
    for i in range(n):
        if cls[i] < 0:
            members = np.flatnonzero(E[i])
            cls[members] = len(classes)
            classes.append([int(x) for x in members])
    k_cls = len(classes)

    sig = A.signature
    if symbols is None:
        symbols = [p.name for p in sig.predicates] + [f.name for f in sig.functions]
    symbols = list(symbols)
    for s in symbols:
        if sig.kind(s) not in ("predicate", "function"):
            raise StructureError(f"unknown predicate or function symbol {s!r}")

    rels, funcs = {}, {}
    rel_arity, fun_arity = [], []
    for s in symbols:
        kind = sig.kind(s)
        if kind == "predicate":
            arity = sig.predicate(s).arity
            truth = as_array(A.predicates[s]) <= truth_threshold + TOL
            rels[s] = _lift_table(truth, cls, k_cls, arity, s, lab, "predicate")
            rel_arity.append((s, arity))
        else:
            arity = sig.function(s).arity
            image = cls[as_array(A.functions[s])]
            funcs[s] = _lift_table(image, cls, k_cls, arity, s, lab, "function")
            fun_arity.append((s, arity))
    consts = {c: int(cls[A.constants[c]]) for c in sig.constants}
    bsig = classical_signature(sig.name + "/E", rel_arity, fun_arity, sig.constants)
    labels = ["{" + ",".join(lab[i] for i in c) + "}" for c in classes]
    B = ClassicalStructure(bsig, tuple(labels), rels, funcs, consts)
    return Quotient(B, cls, classes)


def _lift_table(values, cls, k_cls, arity, name, lab, kind):
    n = len(cls)
    grids = np.meshgrid(*([cls] * arity), indexing="ij")
    codes = np.ravel_multi_index(grids, (k_cls,) * arity).ravel()
    vals = np.asarray(values).ravel().astype(np.int64)
    size = k_cls ** arity
    # per class-tuple: first value seen, and whether any member disagrees
    order = np.argsort(codes, kind="stable")
    sc, sv = codes[order], vals[order]
    starts = np.flatnonzero(np.r_[True, sc[1:] != sc[:-1]])
    first = np.repeat(sv[starts], np.diff(np.r_[starts, len(sc)]))
    mismatch = np.flatnonzero(sv != first)
    if len(mismatch):
        j = mismatch[0]
        g = np.searchsorted(starts, j, side="right") - 1
        ia = np.unravel_index(order[starts[g]], (n,) * arity)
        ib = np.unravel_index(order[j], (n,) * arity)
        what = "truth value" if kind == "predicate" else "image class"
        raise QuotientError(
            f"{kind} {name!r} does not respect the quotient: {_tup(lab, ia)} and {_tup(lab, ib)} "
            f"are equivalent but differ in {what}",
            (_tup(lab, ia), _tup(lab, ib)))
    out = np.empty(size, dtype=np.int64)
    out[sc[starts]] = sv[starts]
    out = out.reshape((k_cls,) * arity)
    return out.astype(bool) if kind == "predicate" else out
