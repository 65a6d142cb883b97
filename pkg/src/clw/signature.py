"""One-sorted, 1-bounded metric signatures."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .pl import PLFunc


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int
    modulus: PLFunc


@dataclass(frozen=True)
class Signature:
    name: str
    predicates: tuple[Symbol, ...] = ()
    functions: tuple[Symbol, ...] = ()
    constants: tuple[str, ...] = ()
    # classical: predicates are {0,1}-valued and the metric is discrete
    classical: bool = False
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "predicates", tuple(self.predicates))
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "constants", tuple(self.constants))
        index = {}
        for kind, syms in (("predicate", self.predicates), ("function", self.functions)):
            for s in syms:
                index.setdefault(s.name, (kind, s))
        for c in self.constants:
            index.setdefault(c, ("constant", c))
        object.__setattr__(self, "_index", index)

    def kind(self, name: str) -> str | None:
        hit = self._index.get(name)
        return hit[0] if hit else None

    def predicate(self, name: str) -> Symbol:
        kind, sym = self._index.get(name, (None, None))
        if kind != "predicate":
            raise KeyError(f"unknown predicate {name!r}")
        return sym

    def function(self, name: str) -> Symbol:
        kind, sym = self._index.get(name, (None, None))
        if kind != "function":
            raise KeyError(f"unknown function {name!r}")
        return sym

    @property
    def symbol_names(self):
        return set(self._index)

    def is_relational(self) -> bool:
        return not self.functions

    def reduct(self, names, name=None) -> "Signature":
        names = set(names)
        return Signature(
            name or self.name,
            tuple(p for p in self.predicates if p.name in names),
            tuple(f for f in self.functions if f.name in names),
            tuple(c for c in self.constants if c in names),
            classical=self.classical,
        )

    def extend(self, predicates=(), functions=(), constants=(), name=None) -> "Signature":
        return Signature(
            name or self.name,
            self.predicates + tuple(predicates),
            self.functions + tuple(functions),
            self.constants + tuple(constants),
            classical=self.classical,
        )

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        def sym(s):
            return {"name": s.name, "arity": s.arity, "modulus": s.modulus.to_json()}
        out = {
            "name": self.name,
            "predicates": [sym(p) for p in self.predicates],
            "functions": [sym(f) for f in self.functions],
            "constants": list(self.constants),
        }
        if self.classical:
            out["classical"] = True
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Signature":
        def sym(d):
            mod = d.get("modulus", [[0, 0], [1, 1]])
            # flags are checked by validate_signature, not at load time
            return Symbol(d["name"], int(d["arity"]), PLFunc.from_json(mod, increasing=False))
        return cls(
            data.get("name", "L"),
            tuple(sym(d) for d in data.get("predicates", [])),
            tuple(sym(d) for d in data.get("functions", [])),
            tuple(data.get("constants", [])),
            classical=bool(data.get("classical", False)),
        )

    @classmethod
    def load(cls, path) -> "Signature":
        return cls.from_json(json.loads(Path(path).read_text()))


def classical_signature(name, relations=(), functions=(), constants=()) -> Signature:
    """Signature of a classical structure: identity moduli everywhere.

    ``relations`` and ``functions`` are ``(name, arity)`` pairs.
    """
    ident = PLFunc.identity()
    return Signature(
        name,
        tuple(Symbol(n, a, ident) for n, a in relations),
        tuple(Symbol(n, a, ident) for n, a in functions),
        tuple(constants),
        classical=True,
    )


def validate_signature(sig: Signature) -> list[str]:
    """Return a list of violations; an empty list means ``sig`` is valid."""
    out = []
    seen = set()
    names = [s.name for s in sig.predicates] + [s.name for s in sig.functions] + list(sig.constants)
    for n in names:
        if n in seen:
            out.append(f"duplicate symbol name {n!r}")
        seen.add(n)
    for kind, syms in (("predicate", sig.predicates), ("function", sig.functions)):
        for s in syms:
            if s.arity < 1:
                out.append(f"{kind} {s.name!r}: arity must be >= 1")
            pts = s.modulus.points
            if pts[0][1] != 0.0:
                out.append(f"{kind} {s.name!r}: modulus zero-at-zero violated (Δ(0) = {pts[0][1]})")
            if any(y1 < y0 for (_, y0), (_, y1) in zip(pts, pts[1:])):
                out.append(f"{kind} {s.name!r}: modulus not increasing")
            # PL and increasing: positive on (0,1] iff positive at the first x > 0
            if pts[1][1] <= 0.0:
                out.append(f"{kind} {s.name!r}: modulus must satisfy Δ(ε) > 0 for ε > 0")
    return out
