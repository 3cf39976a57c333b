import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from pythagoras import multiquad as mq
from pythagoras.numkernel import prime_factors

E = mq.MultiQuadElem
half = Fraction(1, 2)


def elem(**terms):
    # elem(r1=..., r5=...) keyed by radicand
    return E({int(k[1:]): Fraction(v) for k, v in terms.items()})


def support_primes(*elems):
    return sorted({p for a in elems for d in a.keys() for p in prime_factors(d)})


def float_embeddings(a, primes=None):
    """All sign choices for the square roots of ``primes``, applied to ``a``."""
    primes = support_primes(a) if primes is None else primes
    out = []
    for signs in itertools.product((1, -1), repeat=len(primes)):
        s = dict(zip(primes, signs))
        val = 0.0
        for d, c in a.terms.items():
            sign = math.prod(s[p] for p in prime_factors(d)) if d > 1 else 1
            val += float(c) * sign * math.sqrt(d)
        out.append(val)
    return out


def gf2_rank(keys, primes):
    rows = [sum(1 << primes.index(p) for p in prime_factors(d)) for d in keys if d > 1]
    rank = 0
    for bit in range(len(primes)):
        pivot = next((r for r in rows if r >> bit & 1), None)
        if pivot is None:
            continue
        rows = [r ^ pivot if r >> bit & 1 else r for r in rows if r is not pivot]
        rank += 1
    return rank


RADICANDS = [1, 2, 3, 5, 6, 7, 10, 15, 17, 30]
coeffs = st.fractions(min_value=-20, max_value=20, max_denominator=6)
elements = st.dictionaries(st.sampled_from(RADICANDS), coeffs, max_size=4).map(E)


def test_addition_examples():
    assert E.sqrt(2) + (-E.sqrt(2)) == E()
    assert elem(r1=1, r5=half) + elem(r5=half) == elem(r1=1, r5=1)
    assert elem(r1=Fraction(3, 2), r5=half) + elem(r1=Fraction(9, 2), r17=half) == elem(r1=6, r5=half, r17=half)


def test_multiplication_examples():
    assert E.sqrt(2) * E.sqrt(2) == E.rational(2)
    phi = elem(r1=half, r5=half)
    assert phi * phi == elem(r1=Fraction(3, 2), r5=half)
    assert E.sqrt(6) * E.sqrt(10) == elem(r15=2)


def test_canonical_printing():
    assert str(elem(r1=Fraction(3, 2), r5=half)) == "3/2 + 1/2*sqrt(5)"
    assert str(E()) == "0"
    assert str(elem(r2=-1)) == "-sqrt(2)"


@given(elements, elements, elements)
def test_ring_laws(a, b, c):
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == E()


@given(elements, elements)
def test_product_matches_floats(a, b):
    primes = support_primes(a, b)
    for x, y, z in zip(float_embeddings(a, primes), float_embeddings(b, primes), float_embeddings(a * b, primes)):
        assert abs(x * y - z) <= 1e-9 * (1 + abs(x * y))


def test_contains_sqrt():
    assert not mq.contains_sqrt(elem(r1=1, r2=1), 3)
    s2 = elem(r1=6, r5=half, r17=half)
    assert mq.contains_sqrt(s2, 17)
    assert not mq.contains_sqrt(E(), 5)


def test_normalized_trace_examples():
    assert mq.normalized_trace(E.sqrt(2)) == 0
    assert mq.normalized_trace(elem(r1=6, r5=half, r17=half)) == 6


@given(elements, elements)
def test_normalized_trace_is_linear(a, b):
    assert mq.normalized_trace(a + b) == mq.normalized_trace(a) + mq.normalized_trace(b)


@given(elements)
def test_normalized_trace_is_mean_of_embeddings(a):
    vals = float_embeddings(a)
    assert abs(sum(vals) / len(vals) - float(mq.normalized_trace(a))) < 1e-9 * (1 + max(map(abs, vals)))


def test_total_positivity_examples():
    assert not mq.is_totally_positive(elem(r1=half, r5=half))
    assert mq.is_totally_positive(elem(r1=8, r7=3))
    assert not mq.is_totally_positive(E.sqrt(2))


@given(elements)
def test_total_positivity_matches_floats(a):
    vals = float_embeddings(a)
    if all(abs(v) > 1e-6 for v in vals):
        assert mq.is_totally_positive(a) == all(v > 0 for v in vals)


def test_near_cancellation_is_decided_exactly():
    # 8 - 3 sqrt 7 is about 0.0627, and 1351 - 780 sqrt 3 is about 3.7e-4
    assert mq.is_totally_positive(elem(r1=8, r7=3))
    assert mq.is_totally_positive(elem(r1=1351, r3=780))
    assert not mq.is_totally_positive(elem(r1=1351, r3=781))


def test_norm_examples():
    assert mq.mq_norm(elem(r1=half, r5=half)) == -1
    assert mq.mq_norm(elem(r1=8, r7=3)) == 1
    assert mq.mq_norm(E.sqrt(2)) == -2


@given(elements)
def test_norm_matches_float_product(a):
    primes = support_primes(a)
    # each embedding of Q(radicals of a) appears 2^(#primes - rank) times
    mult = 2 ** (len(primes) - gf2_rank(a.keys(), primes))
    expected = math.prod(float_embeddings(a, primes))
    got = float(mq.mq_norm(a)) ** mult
    assert abs(got - expected) <= 1e-7 * (1 + abs(expected))


def test_min_poly_rejects_four_radicals():
    with pytest.raises(ValueError):
        mq.min_poly(E.sqrt(2) + E.sqrt(3) + E.sqrt(5) + E.sqrt(7))


def test_min_poly_examples():
    assert mq.min_poly(elem(r1=half, r5=half)) == [1, -1, -1]
    assert mq.min_poly(E.sqrt(2)) == [1, 0, -2]
    assert mq.format_poly(mq.min_poly(E.sqrt(2))) == "x^2 - 2"
    alpha = elem(r1=Fraction(1, 4), r221=Fraction(1, 4), r377=Fraction(1, 4), r493=Fraction(1, 4))
    poly = mq.min_poly(alpha)
    assert len(poly) == 5 and poly[0] == 1
    assert all(c.denominator == 1 for c in poly)


small_elements = st.dictionaries(st.sampled_from([1, 2, 3, 5, 6, 10, 15, 30]), coeffs, max_size=4).map(E)


@given(small_elements)
def test_min_poly_vanishes_on_every_embedding(a):
    poly = mq.min_poly(a)
    assert poly[0] == 1
    for v in float_embeddings(a):
        val = 0.0
        for c in poly:
            val = val * v + float(c)
        scale = sum(abs(float(c)) * max(1.0, abs(v)) ** (len(poly) - 1 - i) for i, c in enumerate(poly))
        assert abs(val) <= 1e-9 * scale


def test_half_coordinates():
    t = mq.PrimeTower((5,))
    assert mq.to_half_coords(E.rational(1), t).coords == (1, 0)
    assert mq.to_half_coords(elem(r1=half, r5=half), t).coords == (0, 1)
    assert mq.to_half_coords(elem(r1=Fraction(3, 2), r5=half), t).coords == (1, 1)


def test_half_coordinates_errors():
    t = mq.PrimeTower((5, 13))
    with pytest.raises(mq.NotIntegral):
        mq.to_half_coords(elem(r5=half), t)
    with pytest.raises(mq.NotInTower):
        mq.to_half_coords(E.sqrt(17), t)


@given(st.lists(st.integers(-9, 9), min_size=8, max_size=8))
def test_half_coordinates_round_trip(vals):
    t = mq.PrimeTower((5, 13, 17))
    x = E()
    for v, b in zip(vals, t.basis()):
        x = x + b * v
    h = mq.to_half_coords(x, t)
    assert list(h.coords) == vals
    assert mq.from_half_coords(h) == x


def test_tower_rejects_bad_primes():
    for primes in ((3,), (5, 5), (13, 5), (21,)):
        with pytest.raises(ValueError):
            mq.PrimeTower(primes)


def test_witness_s():
    assert mq.witness_s(mq.PrimeTower((5,)), 1) == elem(r1=Fraction(3, 2), r5=half)
    assert mq.witness_s(mq.PrimeTower((5, 17)), 2) == elem(r1=6, r5=half, r17=half)
    s3 = mq.witness_s(mq.PrimeTower((5, 17, 53)), 3)
    assert mq.normalized_trace(s3) == Fraction(39, 2)


@given(st.lists(st.sampled_from([5, 13, 17, 29, 37, 41]), min_size=1, max_size=4, unique=True))
def test_witness_trace_formula(primes):
    primes = tuple(sorted(primes))
    s = mq.witness_s(mq.PrimeTower(primes), len(primes))
    assert mq.normalized_trace(s) == sum(Fraction(1 + p, 4) for p in primes)
    assert mq.is_totally_positive(s)


def test_greedy_prime_sequence():
    assert mq.greedy_prime_sequence(5, 3) == [5, 17, 53]
    assert mq.greedy_prime_sequence(5, 4) == [5, 17, 53, 173]
    assert mq.greedy_prime_sequence(2, 1) == [5]
    assert mq.growth_bound([5, 17, 53]) == 158


def test_three_prime_trace_check():
    rep = mq.three_prime_trace_check(13, 17, 29)
    assert rep.alpha_integral and rep.contains_target
    assert rep.trace_lhs == 273 and rep.trace_rhs == 378 and rep.inequality_holds
    assert rep.target_coefficient == Fraction(9, 4)
    bad = mq.three_prime_trace_check(5, 13, 17)
    assert bad.trace_lhs == 93 and bad.trace_rhs == 86 and not bad.inequality_holds


def test_two_square_representations():
    assert mq.two_square_unramified_rep(5) == (E.rational(1), E.rational(2))
    assert mq.two_square_unramified_rep(13) == (E.rational(1), elem(r3=2))
    assert mq.two_square_unramified_rep(17) == (E.rational(1), E.rational(4))
    for p in (5, 13, 17, 29, 37):
        a, b = mq.two_square_unramified_rep(p)
        assert a * a + b * b == E.rational(p)


def test_divides_or_coprime_predicate():
    assert mq.divides_or_coprime_predicate({5, 10, 3})
    assert not mq.divides_or_coprime_predicate({15, 21})
    assert not mq.divides_or_coprime_predicate(set())
