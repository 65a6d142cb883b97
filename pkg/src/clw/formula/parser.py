"""Text syntax for continuous and classical formulas.

Continuous grammar::

    expr    := ("sup" | "inf") var ([","] var)* "." expr | binary
    binary  := primary (("-." | "+.") primary)*          left associative
    primary := "(" expr ")" | number ["/" number]
             | "|" expr "-" expr "|"
             | ("max" | "min") "(" expr ("," expr)* ")"
             | "neg" "(" expr ")" | "scale" "(" number "," expr ")"
             | "d" "(" term "," term ")"
             | plname "(" expr ")" | predname "(" term ("," term)* ")"
             | expr-level quantifier (body extends as far right as possible)
    term    := name | fname "(" term ("," term)* ")"

Classical grammar::

    cexpr   := ("exists" | "forall") var ([","] var)* "." cexpr | implication
    implication := disj ["->" implication]
    disj    := conj (("|" | "or") conj)*
    conj    := unary (("&" | "and") unary)*
    unary   := ("~" | "not") unary | "(" cexpr ")" | term "=" term
             | relname "(" term ("," term)* ")" | quantified cexpr

Unicode ``¬ ∧ ∨ ∃ ∀ → ∸`` are accepted as aliases.  Names bound to PL
functions come from a ``defs`` mapping; formula files supply them with
``def name = [[x, y], ...]`` lines.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction

from ..pl import PLFunc
from ..signature import Signature
from . import ast as A

KEYWORDS = {"sup", "inf", "max", "min", "neg", "scale", "d"}
CLASSICAL_KEYWORDS = {"exists", "forall", "not", "and", "or"}

_ALIASES = {"¬": "~", "∧": "&", "∨": "|", "∃": "exists ", "∀": "forall ", "→": "->", "∸": "-."}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>-\.|\+\.|->|[-|(),.=~&/])
""", re.VERBOSE)


class ParseError(A.FormulaError):
    def __init__(self, message, pos=None, text=None):
        self.message, self.pos = message, pos
        if pos is not None and text is not None:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"line {line}, column {col}: {message}"
        super().__init__(message)


@dataclass
class Tok:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Tok]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Tok(kind, m.group(), pos))
        pos = m.end()
    out.append(Tok("eof", "", len(text)))
    return out


def _normalize(text: str) -> str:
    for k, v in _ALIASES.items():
        text = text.replace(k, v)
    return text


class _Parser:
    def __init__(self, text, sig: Signature | None, defs=None):
        self.text = _normalize(text)
        self.toks = tokenize(self.text)
        self.i = 0
        self.sig = sig
        self.defs = defs or {}
        self.bound: list[str] = []

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k=1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.pos, self.text)

    def take(self, text=None, kind=None) -> Tok:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(t.text) if t.kind != "eof" else "end of input"
            raise self.error(f"expected {want}, got {got}")
        self.i += 1
        return t

    def at(self, text) -> bool:
        return self.tok.text == text and self.tok.kind != "eof"

    def done(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after end of formula")

    def number(self) -> float:
        t = self.take(kind="num")
        val = Fraction(t.text)
        if self.at("/") and self.peek().kind == "num":
            self.take("/")
            den = Fraction(self.take(kind="num").text)
            if den == 0:
                raise self.error("division by zero", t)
            val = val / den
        return float(val)

    # -- quantifier blocks --------------------------------------------------

    def var_block(self) -> list[str]:
        names = [self.binder()]
        while not self.at("."):
            if self.at(","):
                self.take(",")
            names.append(self.binder())
        self.take(".")
        return names

    def binder(self) -> str:
        t = self.take(kind="name")
        if t.text in KEYWORDS or t.text in CLASSICAL_KEYWORDS:
            raise self.error(f"keyword {t.text!r} cannot be a variable", t)
        if self.sig is not None and self.sig.kind(t.text) is not None:
            raise self.error(f"cannot quantify over signature symbol {t.text!r}", t)
        if t.text in self.defs:
            raise self.error(f"cannot quantify over function name {t.text!r}", t)
        if t.text in self.bound:
            raise self.error(f"variable {t.text!r} rebound inside its own scope", t)
        return t.text

    # -- terms --------------------------------------------------------------

    def term(self) -> A.Term:
        t = self.take(kind="name")
        name = t.text
        if self.at("("):
            if self.sig is not None and self.sig.kind(name) != "function":
                raise self.error(f"unknown function symbol {name!r}", t)
            args = self.args(self.term)
            if self.sig is not None:
                arity = self.sig.function(name).arity
                if arity != len(args):
                    raise self.error(
                        f"arity mismatch: {name!r} takes {arity} arguments, got {len(args)}", t)
            return A.App(name, tuple(args))
        if name in self.bound:
            return A.Var(name)
        if self.sig is not None:
            kind = self.sig.kind(name)
            if kind == "constant":
                return A.Const(name)
            if kind is not None:
                raise self.error(f"{kind} symbol {name!r} used as a term without arguments", t)
        if name in KEYWORDS:
            raise self.error(f"keyword {name!r} used as a variable", t)
        return A.Var(name)

    def args(self, item):
        self.take("(")
        out = [item()]
        while self.at(","):
            self.take(",")
            out.append(item())
        self.take(")")
        return out

    def atom_args(self, name, tok):
        args = self.args(self.term)
        if self.sig is not None:
            arity = self.sig.predicate(name).arity
            if arity != len(args):
                raise self.error(
                    f"arity mismatch: {name!r} takes {arity} arguments, got {len(args)}", tok)
        return tuple(args)

    # -- continuous formulas ------------------------------------------------

    def expr(self):
        if self.tok.text in ("sup", "inf") and self.tok.kind == "name":
            q = self.take().text
            names = self.var_block()
            self.bound.extend(names)
            try:
                body = self.expr()
            finally:
                del self.bound[-len(names):]
            return (A.sup if q == "sup" else A.inf)(names, body)
        return self.binary()

    def binary(self):
        left = self.primary()
        while self.tok.text in ("-.", "+."):
            op = self.take().text
            right = self.primary()
            left = A.DotMinus(left, right) if op == "-." else A.TruncAdd(left, right)
        return left

    def primary(self):
        t = self.tok
        if t.text == "(":
            self.take("(")
            e = self.expr()
            self.take(")")
            return e
        if t.kind == "num":
            v = self.number()
            if not 0.0 <= v <= 1.0:
                raise self.error(f"constant {v} outside [0,1]", t)
            return A.Val(v)
        if t.text == "|":
            self.take("|")
            left = self.expr()
            self.take("-")
            right = self.expr()
            self.take("|")
            return A.AbsDiff(left, right)
        if t.kind != "name":
            raise self.error(f"unexpected {t.text!r}" if t.kind != "eof" else "unexpected end of input")
        name = t.text
        if name in ("sup", "inf"):
            return self.expr()
        if name in ("max", "min"):
            self.take()
            args = self.args(self.expr)
            return (A.Max if name == "max" else A.Min)(tuple(args))
        if name == "neg":
            self.take()
            self.take("(")
            e = self.expr()
            self.take(")")
            return A.Neg(e)
        if name == "scale":
            self.take()
            self.take("(")
            qt = self.tok
            q = self.number()
            if not 0.0 < q <= 1.0:
                raise self.error(f"scale factor {q} outside (0,1]", qt)
            self.take(",")
            e = self.expr()
            self.take(")")
            return A.Scale(q, e)
        if name == "d" and self.peek().text == "(":
            self.take()
            self.take("(")
            a = self.term()
            self.take(",")
            b = self.term()
            self.take(")")
            return A.Dist(a, b)
        if name in self.defs and self.peek().text == "(":
            self.take()
            self.take("(")
            e = self.expr()
            self.take(")")
            return A.Apply(name, self.defs[name], e)
        if self.peek().text == "(":
            self.take()
            if self.sig is None or self.sig.kind(name) == "predicate":
                return A.Pred(name, self.atom_args(name, t))
            kind = self.sig.kind(name)
            if kind is None:
                raise self.error(f"unknown symbol {name!r}", t)
            raise self.error(f"{kind} symbol {name!r} used where a formula is expected", t)
        raise self.error(f"expected a formula, got {name!r}", t)

    # -- classical formulas -------------------------------------------------

    def cexpr(self):
        if self.tok.text in ("exists", "forall") and self.tok.kind == "name":
            q = self.take().text
            names = self.var_block()
            self.bound.extend(names)
            try:
                body = self.cexpr()
            finally:
                del self.bound[-len(names):]
            for v in reversed(names):
                body = A.Exists(v, body) if q == "exists" else A.Forall(v, body)
            return body
        return self.implication()

    def implication(self):
        left = self.disj()
        if self.at("->"):
            self.take("->")
            return A.Implies(left, self.implication())
        return left

    def disj(self):
        left = self.conj()
        while self.at("|") or self.at("or"):
            self.take()
            left = A.Or(left, self.conj())
        return left

    def conj(self):
        left = self.cunary()
        while self.at("&") or self.at("and"):
            self.take()
            left = A.And(left, self.cunary())
        return left

    def cunary(self):
        t = self.tok
        if t.text in ("~", "not"):
            self.take()
            return A.Not(self.cunary())
        if t.text in ("exists", "forall"):
            return self.cexpr()
        if t.text == "(":
            self.take("(")
            e = self.cexpr()
            self.take(")")
            return e
        if t.kind != "name":
            raise self.error(f"unexpected {t.text!r}" if t.kind != "eof" else "unexpected end of input")
        # relation atom or equation between terms
        if self.peek().text == "(" and self._is_relation(t.text):
            self.take()
            return A.Rel(t.text, self.atom_args(t.text, t))
        left = self.term()
        self.take("=")
        right = self.term()
        return A.Eq(left, right)

    def _is_relation(self, name):
        if self.sig is not None:
            return self.sig.kind(name) == "predicate"
        # without a signature, f(x) is a relation unless followed by "="
        depth, j = 0, self.i + 1
        while j < len(self.toks):
            tx = self.toks[j].text
            depth += tx == "("
            depth -= tx == ")"
            j += 1
            if depth == 0:
                break
        return self.toks[j].text != "=" if j < len(self.toks) else True


def parse_formula(text: str, sig: Signature | None = None, defs=None, check=True):
    """Parse a continuous formula.

    With a signature, symbols and arities are checked while parsing and the
    result is checked for well-formedness (capture discipline included).
    """
    p = _Parser(text, sig, defs)
    phi = p.expr()
    p.done()
    if check and sig is not None:
        A.check_formula(phi, sig)
    return phi


def parse_classical(text: str, sig: Signature | None = None, check=True):
    p = _Parser(text, sig)
    phi = p.cexpr()
    p.done()
    if check and sig is not None:
        A.check_formula(phi, sig)
    return phi


def parse_term(text: str, sig: Signature | None = None):
    p = _Parser(text, sig)
    t = p.term()
    p.done()
    return t


# -- formula files ------------------------------------------------------------

_DEF = re.compile(r"^\s*def\s+([A-Za-z_][A-Za-z0-9_']*)\s*=\s*(.+?)\s*$")


def split_formula_file(text: str):
    """Split a formula file into ``(defs, formula_text, formula_offset)``.

    Lines starting with ``#`` are comments; ``def name = [[x,y],...]`` lines
    bind PL functions.  The remaining lines form the formula; other lines are
    blanked so error positions still refer to the file.
    """
    defs = {}
    body = []
    offset = None
    pos = 0
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        m = _DEF.match(line)
        if m:
            name, payload = m.groups()
            try:
                pts = json.loads(payload)
                defs[name] = PLFunc.from_json(pts, zero_at_zero=bool(pts and pts[0][1] == 0))
            except (ValueError, TypeError) as exc:
                raise ParseError(f"bad definition of {name!r}: {exc}", pos, text) from None
            body.append("\n" if line.endswith("\n") else "")
        elif stripped and not stripped.startswith("#"):
            if offset is None:
                offset = pos
            body.append(line)
        else:
            # keep line numbers of the formula aligned with the file
            body.append("\n" if line.endswith("\n") else "")
        pos += len(line)
    return defs, "".join(body), offset or 0


def parse_formula_file(text: str, sig: Signature | None = None):
    defs, body, _ = split_formula_file(text)
    if not body.strip():
        raise ParseError("no formula found")
    return parse_formula(body, sig, defs), defs
