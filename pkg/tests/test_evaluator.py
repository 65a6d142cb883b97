import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clw import corpus, nets
from clw.config import ResourceError
from clw.evaluator import (EvalError, EvalOptions, eval_classical, eval_formula, eval_term,
                           eval_with_witness, evaluate, static_bounds)
from clw.formula import ast as A
from clw.formula import classical_to_continuous, parse_classical, parse_formula, value_set
from clw.structures import classical_as_metric

X, Y = A.Var("x"), A.Var("y")
NOPRUNE = EvalOptions(pruning=False)
DENSE = EvalOptions(engine="dense")


def test_eval_term(line4):
    assert eval_term(line4, A.App("h", (A.Const("c"),))) == 2
    assert line4.labels[eval_term(line4, A.App("h", (A.Const("c"),)))] == "0.5"
    assert eval_term(line4, A.App("h", (X,)), {"x": "0.75"}) == 1
    with pytest.raises(EvalError):
        eval_term(line4, X)


def test_sup_distance_to_self_is_zero(line4):
    assert eval_formula(line4, parse_formula("sup x . d(x,x)", line4.signature)) == 0.0


def test_diameter_and_label_assignment(line4):
    assert eval_formula(line4, parse_formula("sup x, y . d(x,y)")) == 1.0
    phi = parse_formula("d(x, c)", line4.signature)
    assert eval_formula(line4, phi, {"x": "0.25"}) == 0.75
    assert eval_formula(line4, phi, {"x": 1}) == 0.75


def test_atomless_on_b4():
    S = nets.build_net(nets.prob_algebra(4), 4)
    phi = parse_formula("sup x . inf y . |mu(inter(x,y)) - mu(inter(x, comp(y)))|", S.signature)
    assert eval_formula(S, phi) == 0.25
    assert eval_formula(S, phi, opts=DENSE) == 0.25


def test_circle_sentence_m8():
    from clw.experiments import build_injsurj, circle_injsurj_spec
    S = nets.build_net(nets.circle(), 8)
    sigma = build_injsurj(circle_injsurj_spec())
    assert abs(eval_formula(S, sigma, opts=DENSE) - math.sin(math.pi / 8)) <= 1e-9


def test_classical_examples():
    from clw.structures import ClassicalStructure
    from clw.signature import classical_signature
    sig = classical_signature("c", [("E", 2)], [], [])
    E = np.array([[False, True], [True, False]])
    B = ClassicalStructure(sig, ("u", "v"), {"E": E})
    assert eval_classical(B, parse_classical("forall x . exists y . E(x,y)", sig))
    assert not eval_classical(B, parse_classical("exists x . E(x,x)", sig))
    assert eval_classical(B, parse_classical("forall x . forall y . (E(x,y) -> E(y,x))", sig))


def test_unbound_and_missing_symbols(line4):
    with pytest.raises(EvalError, match="unbound"):
        evaluate(line4, parse_formula("d(x,y)"), {"x": 0})
    bare = line4.with_tables()
    bare.predicates.pop("P")
    with pytest.raises(EvalError, match="not interpreted"):
        evaluate(bare, parse_formula("sup x . P(x)", line4.signature))
    with pytest.raises(EvalError, match="out of range"):
        evaluate(line4, parse_formula("d(x,x)"), {"x": 9})


def test_atom_cap(line4):
    phi = parse_formula("sup x, y . d(x,y)")
    with pytest.raises(ResourceError):
        evaluate(line4, phi, opts=EvalOptions(cap_atoms=3))
    with pytest.raises(ResourceError):
        evaluate(line4, phi, opts=EvalOptions(cap_atoms=3, engine="dense"))


def test_witness_trace(line4):
    phi = parse_formula("inf x . |P(x) - 0.5|", line4.signature)
    res = eval_with_witness(line4, phi)
    assert res.value == 0.0
    w = res.witness
    assert w["op"] == "inf" and w["point"] == "0.5" and w["value"] == 0.0


def _pair(seed):
    rng = np.random.default_rng(seed)
    S = corpus.random_structure(rng)
    phi = corpus.random_formula(rng, S.signature, depth=4)
    return S, phi


def _negate_quantifiers(phi):
    # inf x . psi  ->  neg sup x . neg psi, recursively
    if isinstance(phi, A.Inf):
        return A.Neg(A.Sup(phi.var, A.Neg(_negate_quantifiers(phi.body))))
    if isinstance(phi, A.Sup):
        return A.Sup(phi.var, _negate_quantifiers(phi.body))
    kids = A.children(phi)
    return A.rebuild(phi, [_negate_quantifiers(k) for k in kids]) if kids else phi


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_range_and_static_bounds(seed):
    S, phi = _pair(seed)
    v = eval_formula(S, phi)
    lo, hi = static_bounds(phi)
    assert 0.0 <= v <= 1.0
    assert lo - 1e-12 <= v <= hi + 1e-12


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_engines_and_pruning_bit_identical(seed):
    S, phi = _pair(seed)
    v = eval_formula(S, phi)
    assert eval_formula(S, phi, opts=NOPRUNE) == v
    assert eval_formula(S, phi, opts=DENSE) == v
    assert eval_formula(S, phi, opts=EvalOptions(parallel=True)) == v


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_duality_exact(seed):
    S, phi = _pair(seed)
    assert eval_formula(S, _negate_quantifiers(phi)) == eval_formula(S, phi)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_witness_attains_value(seed):
    S, phi = _pair(seed)
    res = eval_with_witness(S, phi)
    assert res.value == eval_formula(S, phi)
    if isinstance(phi, (A.Sup, A.Inf)):
        w = res.witness
        assert eval_formula(S, phi.body, {phi.var: w["index"]}) == res.value


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_monotone_in_predicate(seed):
    # raising P everywhere moves an occurrence-positive formula up
    rng = np.random.default_rng(seed)
    S = corpus.random_structure(rng)
    body = corpus.random_formula(rng, S.signature, depth=2, scope=("x",))
    phi = A.Sup("x", A.Max((A.Pred("P", (X,)), A.Min((body, A.Pred("P", (X,)))))))
    T = S.with_tables(predicates={"P": np.minimum(S.predicates["P"] + 0.25, 1.0)})
    assert eval_formula(T, phi) >= eval_formula(S, phi)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_continuity_transfer(seed):
    rng = np.random.default_rng(seed)
    S = corpus.random_structure(rng, functions=False)
    phi = corpus.random_formula(rng, S.signature, depth=3, scope=("x",))
    if "x" not in A.free_vars(phi):
        return
    a, b = rng.integers(0, S.size, size=2)
    diff = abs(eval_formula(S, phi, {"x": a}) - eval_formula(S, phi, {"x": b}))
    bound = nets.continuity_bound(phi, S.signature, {"x": float(S.dist[a, b])})
    assert diff <= bound + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_classical_coincidence(seed):
    rng = np.random.default_rng(seed)
    B = corpus.random_classical_structure(rng)
    sigma = corpus.random_classical_sentence(rng, B.signature)
    psi = classical_to_continuous(sigma)
    v = eval_formula(classical_as_metric(B), psi)
    assert (v == 0.0) == eval_classical(B, sigma)
    assert v in value_set(psi, B.signature)
