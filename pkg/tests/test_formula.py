import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clw import corpus, nets
from clw.evaluator import eval_classical, eval_formula
from clw.formula import ast as A
from clw.formula import (FormulaError, ParseError, abstract_constants, classical_to_continuous,
                         free_vars, parse_classical, parse_formula, parse_formula_file, show,
                         show_classical, substitute_predicate, value_set)
from clw.pl import PLFunc
from clw.signature import Signature, Symbol, classical_signature
from clw.structures import ClassicalStructure, FiniteStructure, classical_as_metric

IDENT = PLFunc.identity()
ALPHA = PLFunc.linear(2)
SIG = Signature("t", (Symbol("P", 1, IDENT), Symbol("P0", 1, IDENT), Symbol("R", 2, IDENT)),
                (Symbol("f", 1, IDENT),), ("c",))
X, Y = A.Var("x"), A.Var("y")


def test_parse_atoms():
    assert parse_formula("d(x,y)", SIG) == A.Dist(X, Y)
    assert parse_formula("R(f(x), c)", SIG) == A.Pred("R", (A.App("f", (X,)), A.Const("c")))


def test_parse_sigma_p():
    phi = parse_formula("sup x . (P(x) -. alpha(P(x) -. 0.5))", SIG, {"alpha": ALPHA})
    px = A.Pred("P", (X,))
    assert phi == A.Sup("x", A.DotMinus(px, A.Apply("alpha", ALPHA, A.DotMinus(px, A.Val(0.5)))))


def test_parse_apaa_axiom():
    sig = nets.prob_algebra().signature
    phi = parse_formula("inf e . max(|0.5 - mu(e)|, mu(inter(e, tau(e))))", sig)
    e = A.Var("e")
    assert phi == A.Inf("e", A.Max((
        A.AbsDiff(A.Val(0.5), A.Pred("mu", (e,))),
        A.Pred("mu", (A.App("inter", (e, A.App("tau", (e,)))),)))))


def test_parse_sugar_and_fractions():
    assert parse_formula("sup x, y . d(x,y)", SIG) == A.Sup("x", A.Sup("y", A.Dist(X, Y)))
    assert parse_formula("1/4", SIG) == A.Val(0.25)
    assert parse_formula("(P(x) -. P(y)) -. 0.5", SIG) == A.DotMinus(
        A.DotMinus(A.Pred("P", (X,)), A.Pred("P", (Y,))), A.Val(0.5))


@pytest.mark.parametrize("text, needle", [
    ("d(x,", "column"),
    ("R(x)", "arity"),
    ("Q(x)", "unknown"),
    ("sup x . sup x . P(x)", "bound"),
    ("max(P(x), sup x . P(x))", "free and bound"),
    ("scale(1.5, P(x))", "scale"),
    ("2.0", "[0,1]"),
    ("foo(P(x))", "unknown"),
])
def test_parse_errors(text, needle):
    with pytest.raises(FormulaError) as exc:
        parse_formula(text, SIG)
    assert needle in str(exc.value)


def test_parse_error_position():
    with pytest.raises(ParseError) as exc:
        parse_formula_file("# comment\ndef a = [[0,0],[1,1]]\nsup x . R(x)\n", SIG)
    assert "line 3" in str(exc.value)


def test_formula_file_defs():
    phi, defs = parse_formula_file("def a = [[0,0],[0.5,1],[1,1]]\nsup x . a(P(x))\n", SIG)
    assert defs["a"].points == ALPHA.points
    assert phi == A.Sup("x", A.Apply("a", defs["a"], A.Pred("P", (X,))))


def test_free_vars():
    sigma_p = parse_formula("sup x . (P(x) -. alpha(P(x) -. 0.5))", SIG, {"alpha": ALPHA})
    assert free_vars(sigma_p) == []
    assert free_vars(A.Dist(X, Y)) == ["x", "y"]
    assert free_vars(parse_formula("sup x . d(x,y)", SIG)) == ["y"]
    assert free_vars(parse_formula("max(d(y,x), P(y))", SIG)) == ["y", "x"]


def _two_point(P):
    return FiniteStructure(SIG, ["a", "b"], np.array([[0, 0.5], [0.5, 0]]),
                           {"P": np.array(P), "P0": np.array(P), "R": np.zeros((2, 2))},
                           {"f": np.array([1, 0])}, {"c": 0})


def test_abstract_constants_examples():
    phi = abstract_constants(A.Dist(A.Const("c"), A.Const("c")), ["c"], SIG)
    assert phi == A.Sup("x_c", A.Dist(A.Var("x_c"), A.Var("x_c")))
    assert eval_formula(_two_point([0.2, 0.7]), phi) == 0.0
    psi = abstract_constants(A.Pred("P", (A.Const("c"),)), ["c"], SIG)
    assert eval_formula(_two_point([0.2, 0.7]), psi) == 0.7
    sigma = A.Pred("P", (A.Const("c"),))
    assert abstract_constants(sigma, [], SIG) is sigma
    with pytest.raises(FormulaError):
        abstract_constants(sigma, ["zz"], SIG)


def test_abstract_constants_fresh_name_avoids_clash():
    sigma = parse_formula("sup x_c . d(x_c, c)", SIG)
    out = abstract_constants(sigma, ["c"], SIG)
    assert isinstance(out, A.Sup) and out.var != "x_c"
    assert free_vars(out) == []


def test_substitute_predicate_examples():
    out = substitute_predicate(A.Pred("P", (X,)), "P", ["x"], A.Dist(X, A.Const("c")))
    assert out == A.Dist(X, A.Const("c"))
    phi = parse_formula("sup x . P(f(x))", SIG)
    psi = A.DotMinus(A.Pred("P0", (X,)), A.Val(0.5))
    assert substitute_predicate(phi, "P", ["x"], psi) == parse_formula("sup x . (P0(f(x)) -. 0.5)", SIG)
    with pytest.raises(FormulaError):
        substitute_predicate(phi, "P", ["x", "y"], psi, arity=1)


def test_substitute_predicate_avoids_capture():
    # the parameter y of psi must not be captured by phi's "sup y"
    phi = parse_formula("sup y . P(y)", SIG)
    psi = A.Dist(X, Y)
    out = substitute_predicate(phi, "P", ["x"], psi)
    assert free_vars(out) == ["y"]
    assert isinstance(out, A.Sup) and out.var != "y"


def test_substitute_predicate_evaluation_invariance():
    psi = parse_formula("max(d(x, c), P0(f(x)))", SIG)
    for seed in range(20):
        rng = np.random.default_rng(seed)
        base = corpus.random_structure(rng, max_points=4)
        n = base.size
        S = FiniteStructure(SIG, base.labels, base.dist,
                            {"P0": base.predicates["P"], "R": base.predicates["R"],
                             "P": np.zeros(n)}, {"f": base.functions["f"]}, base.constants)
        # interpret P pointwise as psi
        Pvals = np.array([eval_formula(S, psi, {"x": i}) for i in range(n)])
        S = S.with_tables(predicates={**S.predicates, "P": Pvals})
        phi = corpus.random_formula(rng, SIG, depth=4)
        out = substitute_predicate(phi, "P", ["x"], psi)
        assert eval_formula(S, phi) == eval_formula(S, out)
        assert not any(isinstance(n_, A.Pred) and n_.name == "P" for n_ in A.walk(out))


def test_transform_examples():
    assert classical_to_continuous(parse_classical("~(x = y)")) == A.Neg(A.Dist(X, Y))
    csig = classical_signature("c", [("P", 1)], [], ["c"])
    phi = parse_classical("x = y & P(x)", csig)
    assert classical_to_continuous(phi) == A.Max((A.Dist(X, Y), A.Pred("P", (X,))))
    ex = classical_to_continuous(parse_classical("exists y . y = c", csig))
    assert ex == A.Inf("y", A.Dist(Y, A.Const("c")))
    B = ClassicalStructure(csig, ("p", "q", "r"), {"P": np.array([True, False, True])}, {}, {"c": 1})
    assert eval_formula(classical_as_metric(B), ex) == 0.0


def test_classical_sugar_expands():
    csig = classical_signature("c", [("P", 1)])
    phi = parse_classical("forall x . (P(x) | ~P(x))", csig)
    p = A.Rel("P", (X,))
    body = A.Not(A.And(A.Not(p), A.Not(A.Not(p))))
    assert phi == A.Not(A.Exists("x", A.Not(body)))
    assert not any(type(n).__name__ in ("Or", "Forall") for n in A.walk(phi))


def test_value_set_examples():
    csig = classical_signature("c", [("P", 1)])
    assert value_set(A.Dist(X, Y), csig) == {0.0, 1.0}
    assert value_set(A.DotMinus(A.Pred("P", (X,)), A.Val(0.5)), csig) == {0.0, 0.5}
    neg = A.Neg(A.Max((A.Dist(X, Y), A.Pred("P", (X,)))))
    vs = value_set(neg, csig)
    assert vs == {0.0, 1.0}
    with pytest.raises(ValueError):
        value_set(A.Dist(X, Y), SIG)


def test_value_set_cross_check_all_small_structures():
    csig = classical_signature("c", [("P", 1)])
    phi = A.Neg(A.Max((A.Dist(X, Y), A.Pred("P", (X,)))))
    vs = value_set(phi, csig)
    for n in (1, 2, 3):
        for bits in itertools.product([False, True], repeat=n):
            B = ClassicalStructure(csig, tuple(map(str, range(n))), {"P": np.array(bits)}, {}, {})
            S = classical_as_metric(B)
            for a, b in itertools.product(range(n), repeat=2):
                assert eval_formula(S, phi, {"x": a, "y": b}) in vs


# -- properties ---------------------------------------------------------------------

@settings(max_examples=300)
@given(st.integers(0, 10**9))
def test_round_trip_continuous(seed):
    phi = corpus.random_formula(seed, SIG, depth=6, max_quant=4)
    assert parse_formula(show(phi), SIG, corpus.PL_POOL) == phi


@settings(max_examples=300)
@given(st.integers(0, 10**9))
def test_round_trip_classical(seed):
    B = corpus.random_classical_structure(seed)
    phi = corpus.random_classical_sentence(seed, B.signature, depth=4)
    assert parse_classical(show_classical(phi), B.signature) == phi


@settings(max_examples=200)
@given(st.integers(0, 10**9))
def test_transform_soundness(seed):
    B = corpus.random_classical_structure(seed)
    phi = corpus.random_classical_sentence(seed + 1, B.signature, depth=3)
    tilde = classical_to_continuous(phi)
    v = eval_formula(classical_as_metric(B), tilde)
    assert eval_classical(B, phi) == (v == 0.0)
    assert any(abs(v - r) <= 1e-9 for r in value_set(tilde, B.signature))


@settings(max_examples=100)
@given(st.integers(0, 10**9))
def test_abstract_constants_is_sup_over_reinterpretations(seed):
    rng = np.random.default_rng(seed)
    S = corpus.random_structure(rng, max_points=5)
    sigma = corpus.random_formula(rng, S.signature, depth=3)
    out = abstract_constants(sigma, ["c"], S.signature)
    brute = max(eval_formula(S.with_tables(constants={"c": i}), sigma) for i in range(S.size))
    assert eval_formula(S, out) == brute
