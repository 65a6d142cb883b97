import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clw import corpus, nets
from clw.pl import PLFunc, modulus_threshold
from clw.signature import Signature, Symbol, classical_signature
from clw.structures import (ClassicalStructure, ComputedTable, FiniteStructure, QuotientError,
                            classical_as_metric, compliance_report, quotient_discretize,
                            validate_structure)

IDENT = PLFunc.identity()
EMPTY = Signature("empty")


def metric(d, labels=None):
    d = np.asarray(d, dtype=float)
    labels = labels or [chr(ord("a") + i) for i in range(len(d))]
    return FiniteStructure(EMPTY, labels, d)


def test_one_point_valid():
    assert validate_structure(metric([[0.0]])) == []


def test_triangle_violation_witness():
    d = [[0, 0.9, 0.2], [0.9, 0, 0.05], [0.2, 0.05, 0]]
    probs = validate_structure(metric(d))
    assert len(probs) == 1 and "triangle" in probs[0]
    assert "(a,c,b)" in probs[0]


def test_asymmetric_and_zero_distance():
    assert any("symmetry" in p for p in validate_structure(metric([[0, 0.5], [0.4, 0]])))
    assert any("distance 0" in p for p in validate_structure(metric([[0, 0], [0, 0]])))


def test_table_checks():
    sig = Signature("s", (Symbol("P", 1, IDENT),), (Symbol("f", 1, IDENT),), ("c",))
    S = FiniteStructure(sig, ["a", "b"], np.array([[0, 1.0], [1.0, 0]]),
                        {"P": np.array([0.5, 1.5])}, {"f": np.array([0, 2])}, {})
    probs = validate_structure(S)
    assert any("outside [0,1]" in p for p in probs)
    assert any("not a point index" in p for p in probs)
    assert any("'c'" in p for p in probs)


def test_classical_compliance_full():
    sig = classical_signature("c", [("R", 2)], [("f", 1)], ["c"])
    rng = np.random.default_rng(0)
    B = ClassicalStructure(sig, ("p", "q", "r"), {"R": rng.random((3, 3)) < 0.5},
                           {"f": np.array([2, 0, 0])}, {"c": 1})
    S = classical_as_metric(B)
    assert validate_structure(S) == []
    rep = compliance_report(S)
    assert rep.classification == "structure"
    assert all(s.status == "full" for s in rep.symbols)


def test_two_point_equality_only():
    B = ClassicalStructure(classical_signature("eq"), ("u", "v"))
    S = classical_as_metric(B)
    assert S.dist.tolist() == [[0, 1], [1, 0]]


def test_two_point_predicate_violation():
    sig = Signature("s", (Symbol("P", 1, IDENT),))
    S = FiniteStructure(sig, ["a", "b"], np.array([[0, 0.5], [0.5, 0]]), {"P": np.array([0.0, 1.0])})
    rep = compliance_report(S)
    assert rep["P"].status == "violation"
    assert rep["P"].witness[:2] in (((0,), (1,)), ((1,), (0,)))
    assert rep.classification == "invalid"


def test_interval_net_h_is_almost():
    S = nets.build_net(nets.interval(), 8)
    rep = compliance_report(S)
    h = rep["h"]
    assert h.status == "almost" and h.eps0 > 0
    # violations only where the snapped images are 1/m apart; the modulus
    # min(2e,1) then allows output distance r/2 at input distance r
    r = 1 / 8
    assert h.eps0 >= modulus_threshold(S.signature.function("h").modulus, r) - 1e-12
    assert rep.classification == "almost-structure"


def test_computed_table():
    t = ComputedTable((3, 3), lambda i, j: (i + j) / 4)
    assert float(t[1, 2]) == 0.75
    assert np.array_equal(t.materialize(), (np.add.outer(np.arange(3), np.arange(3))) / 4)


def test_json_round_trip(tmp_path):
    S = nets.build_net(nets.interval(constants={"c": 1.0}), 4)
    path = tmp_path / "s.json"
    S.save(path)
    T = FiniteStructure.load(path)
    assert T.to_json() == S.to_json()
    data = json.loads(path.read_text())
    # flattening: last argument varies fastest
    assert data["functions"]["h"] == [0, 0, 1, 1, 2]


def test_signature_by_path(tmp_path):
    S = nets.build_net(nets.prob_algebra(2), 2)
    (tmp_path / "sig.json").write_text(json.dumps(S.signature.to_json()))
    data = S.to_json()
    data["signature"] = "sig.json"
    (tmp_path / "s.json").write_text(json.dumps(data))
    T = FiniteStructure.load(tmp_path / "s.json")
    assert np.array_equal(T.functions["inter"], S.functions["inter"])
    assert T.functions["inter"][1, 3] == 1


def _two_clusters():
    sig = Signature("s", (Symbol("P", 1, IDENT),), (Symbol("f", 1, IDENT),))
    d = np.full((4, 4), 0.9)
    d[0, 1] = d[1, 0] = d[2, 3] = d[3, 2] = 0.1
    np.fill_diagonal(d, 0)
    return FiniteStructure(sig, ["p1", "p2", "p3", "p4"], d, {"P": np.array([0.0, 0.05, 0.9, 0.85])},
                           {"f": np.array([2, 3, 0, 0])})


def test_quotient_two_clusters():
    q = quotient_discretize(_two_clusters())
    B = q.structure
    assert B.size == 2
    assert B.relations["P"].tolist() == [True, False]
    assert B.functions["f"].tolist() == [1, 0]
    assert q.class_of.tolist() == [0, 0, 1, 1]


def test_quotient_discrete_is_identity():
    d = np.full((3, 3), 0.95)
    np.fill_diagonal(d, 0)
    q = quotient_discretize(metric(d))
    assert q.structure.size == 3


def test_quotient_errors():
    d = [[0, 0.2, 0.4], [0.2, 0, 0.2], [0.4, 0.2, 0]]
    with pytest.raises(QuotientError) as exc:
        quotient_discretize(metric(d))
    assert exc.value.witness == ("a", "b", "c")
    S = _two_clusters()
    S = S.with_tables(predicates={"P": np.array([0.0, 0.7, 0.9, 0.85])})
    with pytest.raises(QuotientError):
        quotient_discretize(S)
    S = _two_clusters().with_tables(functions={"f": np.array([2, 0, 0, 0])})
    with pytest.raises(QuotientError):
        quotient_discretize(S)


@settings(max_examples=50)
@given(st.integers(0, 10**6))
def test_clustered_quotient_size_matches_clusters(seed):
    A = corpus.clustered_structure(seed)
    assert validate_structure(A) == []
    assert compliance_report(A).classification == "structure"
    q = quotient_discretize(A)
    assert q.structure.size == A.meta["clusters"]
    # quotient size is at most the size of any 1/4-net, e.g. one point per class
    assert q.structure.size <= A.size


@settings(max_examples=50)
@given(st.integers(0, 10**6))
def test_random_corpus_structures_valid(seed):
    S = corpus.random_structure(seed)
    assert validate_structure(S) == []
    assert compliance_report(S).classification in ("structure", "almost-structure")
