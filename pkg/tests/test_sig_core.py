import math

import pytest
from hypothesis import given, settings, strategies as st

from clw import nets
from clw.pl import DomainError, PLFunc, modulus_threshold, pl_eval, pl_eval_array
from clw.signature import Signature, Symbol, validate_signature

import numpy as np

IDENT = PLFunc.identity()
DOUBLE = PLFunc(((0, 0), (0.5, 1), (1, 1)))
HALF = PLFunc(((0, 0), (1, 0.5)))


def test_pl_eval_examples():
    assert pl_eval(IDENT, 0.3) == 0.3
    assert pl_eval(DOUBLE, 0.25) == 0.5
    assert pl_eval(DOUBLE, 0.75) == 1.0


def test_pl_eval_exact_at_breakpoints():
    f = PLFunc(((0, 0), (1 / 3, 0.7), (1, 0.9)))
    assert pl_eval(f, 1 / 3) == 0.7
    assert pl_eval(f, 1.0) == 0.9


@pytest.mark.parametrize("x", [-0.1, 1.5, math.inf])
def test_pl_eval_domain(x):
    with pytest.raises(DomainError):
        pl_eval(IDENT, x)


@pytest.mark.parametrize("pts", [
    ((0.1, 0), (1, 1)),            # does not start at 0
    ((0, 0), (0.5, 1), (0.5, 1), (1, 1)),
    ((0, 0), (1, 1.2)),
])
def test_plfunc_rejects_bad_breakpoints(pts):
    with pytest.raises(DomainError):
        PLFunc(pts)


def test_plfunc_flags():
    with pytest.raises(DomainError):
        PLFunc(((0, 0.5), (1, 0.2)))          # declared increasing
    with pytest.raises(DomainError):
        PLFunc(((0, 0.1), (1, 1)), zero_at_zero=True)
    assert PLFunc(((0, 0.5), (1, 0.2)), increasing=False)(1.0) == 0.2


def test_linear_helper():
    assert PLFunc.linear(2).points == DOUBLE.points
    assert PLFunc.linear(0.5).points == HALF.points


def test_modulus_threshold_examples():
    assert modulus_threshold(IDENT, 0.3) == 0.3
    assert modulus_threshold(HALF, 1.0) == 1.0
    assert modulus_threshold(DOUBLE, 1.0) == 1.0
    assert modulus_threshold(HALF, 0.2) == pytest.approx(0.4, abs=1e-12)


def test_modulus_threshold_saturating():
    # HALF never exceeds 0.5, so any D >= 0.5 leaves no constraint
    assert modulus_threshold(HALF, 0.5) == 1.0
    assert modulus_threshold(DOUBLE, 0.5) == 0.25


def test_validate_signature_examples():
    dup = Signature("s", (Symbol("P", 1, IDENT), Symbol("P", 2, IDENT)))
    assert len([p for p in validate_signature(dup) if "duplicate" in p]) == 1
    assert validate_signature(nets.prob_algebra().signature) == []
    bad = Signature("s", (Symbol("P", 1, PLFunc(((0, 0.1), (1, 1)))),))
    assert any("zero-at-zero" in p for p in validate_signature(bad))


def test_validate_signature_flat_start_and_arity():
    flat = PLFunc(((0, 0), (0.2, 0), (1, 1)))
    sig = Signature("s", (Symbol("P", 1, flat), Symbol("Q", 0, IDENT)))
    probs = validate_signature(sig)
    assert any("> 0" in p or "positive" in p for p in probs)
    assert any("arity" in p for p in probs)


def test_signature_json_round_trip():
    sig = nets.prob_algebra().signature
    again = Signature.from_json(sig.to_json())
    assert again.to_json() == sig.to_json()
    assert again.kind("inter") == "function" and again.kind("bot") == "constant"


# -- properties ---------------------------------------------------------------

@st.composite
def increasing_pl(draw, zero=True):
    k = draw(st.integers(0, 4))
    xs = sorted(set(draw(st.lists(st.floats(0.01, 0.99), min_size=k, max_size=k))))
    ys = sorted(draw(st.lists(st.floats(0, 1), min_size=len(xs) + 2, max_size=len(xs) + 2)))
    if zero:
        ys[0] = 0.0
    return PLFunc(tuple(zip([0.0] + xs + [1.0], ys)), zero_at_zero=zero)


unit = st.floats(0, 1)


@given(increasing_pl(zero=False), unit, unit)
def test_pl_eval_monotone(f, a, b):
    lo, hi = min(a, b), max(a, b)
    assert pl_eval(f, lo) <= pl_eval(f, hi)


@given(increasing_pl(zero=False), st.lists(unit, min_size=1, max_size=20))
def test_pl_eval_array_bit_identical(f, xs):
    arr = pl_eval_array(f, np.array(xs))
    assert [float(v) for v in arr] == [pl_eval(f, x) for x in xs]


@given(increasing_pl(), unit, unit)
def test_modulus_threshold_monotone(delta, a, b):
    lo, hi = min(a, b), max(a, b)
    assert modulus_threshold(delta, lo) <= modulus_threshold(delta, hi) + 1e-12


@given(unit)
def test_modulus_threshold_identity(d):
    assert modulus_threshold(IDENT, d) == pytest.approx(d, abs=1e-15)


@settings(max_examples=200)
@given(increasing_pl(), unit, st.lists(unit, min_size=1, max_size=30))
def test_threshold_is_lower_bound(delta, d, eps_grid):
    t = modulus_threshold(delta, d)
    for eps in eps_grid:
        if pl_eval(delta, eps) > d:
            assert eps >= t - 1e-9
