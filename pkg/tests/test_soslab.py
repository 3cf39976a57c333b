import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pythagoras import cyclo as cy
from pythagoras import multiquad as mq
from pythagoras import soslab as sl

E = mq.MultiQuadElem
ZZ = sl.integer_ring()
T5 = sl.tower_ring((5,))
PHI = E({1: Fraction(1, 2), 5: Fraction(1, 2)})


def query(ring, target, cap=4, **kw):
    return sl.min_squares(sl.SosQuery(ring, target, cap), **kw)


# --------------------------------------------------------------------------
# enumeration


def test_enumerate_integers():
    assert sl.enumerate_bounded(ZZ, Fraction(4)) == [E.rational(1), E.rational(2)]
    assert sl.enumerate_bounded(ZZ, Fraction(0)) == []


def test_enumerate_golden_ring():
    got = sl.enumerate_bounded(T5, Fraction(2))
    expected = {E.rational(1), PHI, PHI - 1}
    assert {x if x in expected else -x for x in got} == expected
    assert len(got) == 3


def test_enumerate_order_is_by_trace_then_coordinates():
    ring = sl.tower_ring((5, 13))
    rows = sl.enumerate_coords(ring, Fraction(6))
    qs = [q for _, q in rows]
    assert qs == sorted(qs)
    assert rows == sorted(rows, key=lambda r: (r[1], r[0]))


def test_enumerate_capacity_is_loud():
    with pytest.raises(sl.CapacityExceeded):
        sl.enumerate_bounded(sl.tower_ring((5, 13, 17)), Fraction(40), limit=50)


@st.composite
def gram_matrices(draw):
    n = draw(st.integers(1, 4))
    entries = st.fractions(min_value=-3, max_value=3, max_denominator=4)
    a = [[draw(entries) for _ in range(n)] for _ in range(n)]
    gram = [[sum(a[k][i] * a[k][j] for k in range(n)) + (Fraction(1, 2) if i == j else 0) for j in range(n)] for i in range(n)]
    bound = draw(st.fractions(min_value=0, max_value=12, max_denominator=3))
    return gram, bound


def box_enumeration(gram, bound):
    n = len(gram)
    lam = min(np.linalg.eigvalsh(np.array(gram, dtype=float)))
    r = math.isqrt(int(float(bound) / lam) + 1) + 1
    out = set()
    for x in itertools.product(range(-r, r + 1), repeat=n):
        q = sum(gram[i][j] * x[i] * x[j] for i in range(n) for j in range(n))
        if any(x) and q <= bound:
            out.add((x, q))
    return out


@settings(max_examples=60)
@given(gram_matrices())
def test_fincke_pohst_matches_box(case):
    gram, bound = case
    got = sl.fincke_pohst(gram, bound)
    assert len(got) == len(set(got))
    assert set(got) == box_enumeration(gram, bound)


# --------------------------------------------------------------------------
# minimal lengths


def test_min_squares_examples():
    res = query(ZZ, E.rational(7), cap=5)
    assert res.found and res.length == 4
    assert sorted((abs(int(r.rational_value())) for r in res.certificate), reverse=True) == [2, 1, 1, 1]
    zero = query(ZZ, E(), cap=3)
    assert zero.found and zero.length == 0 and zero.certificate == []
    neg = query(ZZ, E.rational(-1))
    assert not neg.found and neg.status == "not_representable"


def test_two_squares_in_two_prime_tower():
    ring = sl.tower_ring((5, 17))
    s2 = mq.witness_s(mq.PrimeTower((5, 17)), 2)
    res = query(ring, s2)
    assert res.length == 2
    squares = sorted(str(r * r) for r in res.certificate)
    assert squares == sorted(str(b * b) for b in (PHI, E({1: Fraction(1, 2), 17: Fraction(1, 2)})))


def test_unit_shortcut_consistency():
    ring = sl.quadratic_order(7)
    unit = E({1: 8, 7: 3})
    for cap in range(1, 5):
        assert query(ring, unit, cap=cap).status == "not_representable"


def test_not_integral_target_is_rejected():
    with pytest.raises(mq.NotIntegral):
        query(T5, E({5: Fraction(1, 2)}))


def naive_lengths(squares, trace, bound, max_len):
    """Minimal number of squares for every reachable coordinate vector, by level sets."""
    best = {}
    level = {tuple([0] * len(next(iter(squares))))}
    for length in range(max_len + 1):
        for v in level:
            best.setdefault(v, length)
        level = {tuple(a + b for a, b in zip(v, s)) for v in level for s in squares}
        level = {v for v in level if trace(v) <= bound}
    return best


def test_integer_lengths_match_naive_search():
    best = naive_lengths({(1,), (4,), (9,)}, lambda v: v[0], 12, 5)
    for n in range(0, 13):
        res = query(ZZ, E.rational(n), cap=5)
        assert res.length == best[(n,)]


def test_golden_lengths_match_naive_search():
    # (a + b phi)^2 = (a^2 + b^2) + (2ab + b^2) phi; trace(x + y phi) = x + y/2
    def trace(v):
        return Fraction(v[0]) + Fraction(v[1], 2)

    squares = set()
    for a, b in itertools.product(range(-6, 7), repeat=2):
        sq = (a * a + b * b, 2 * a * b + b * b)
        if (a, b) != (0, 0) and trace(sq) <= 12:
            squares.add(sq)
    best = naive_lengths(squares, trace, 12, 4)
    checked = 0
    for x, y in itertools.product(range(-30, 31), repeat=2):
        target = E.rational(x) + PHI * y
        if trace((x, y)) > 12 or not (target.is_zero() or mq.is_totally_positive(target)):
            continue
        res = query(T5, target, cap=4)
        expected = best.get((x, y))
        if expected is None:
            assert not res.found
        else:
            assert res.found and res.length == expected
        checked += 1
    assert checked > 50


golden_targets = st.lists(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), min_size=0, max_size=4).map(
    lambda pairs: sum(((E.rational(a) + PHI * b) ** 2 for a, b in pairs), E())
)


@given(golden_targets)
def test_certificates_are_exact_and_within_budget(target):
    res = query(T5, target, cap=4)
    assert res.found
    total = E()
    for r in res.certificate:
        assert not r.is_zero()
        assert mq.normalized_trace(r * r) <= mq.normalized_trace(target)
        total = total + r * r
    assert total == target


@given(golden_targets, st.integers(0, 4))
def test_min_length_is_monotone_in_cap(target, extra):
    full = query(T5, target, cap=4)
    for cap in range(0, 4):
        res = query(T5, target, cap=cap)
        if cap >= full.length:
            assert res.found and res.length == full.length
        else:
            assert not res.found
    assert query(T5, target, cap=4 + extra).length == full.length


def test_tower_witnesses():
    for primes, length in (((5,), 1), ((5, 17), 2), ((5, 17, 53), 3)):
        s = mq.witness_s(mq.PrimeTower(primes), len(primes))
        res = query(sl.tower_ring(primes), s, cap=4)
        assert res.length == length


def test_worker_count_does_not_change_answer():
    ring = sl.tower_ring((5, 17, 53))
    s3 = mq.witness_s(mq.PrimeTower((5, 17, 53)), 3)
    one = query(ring, s3, workers=1)
    two = query(ring, s3, workers=2)
    assert (one.length, [str(r) for r in one.certificate]) == (two.length, [str(r) for r in two.certificate])
    assert (one.nodes, one.candidates) == (two.nodes, two.candidates)


# --------------------------------------------------------------------------
# profiles


def test_integer_profile():
    prof = sl.pythagoras_profile(ZZ, Fraction(10), 5)
    assert prof.max_length == 4 and [str(e) for e in prof.argmax] == ["7"]
    assert [L for _, L in prof.rows] == [1, 2, 3, 1, 2, 3, 4, 2, 1, 2]


def test_profile_below_smallest_square_is_empty():
    for ring in (ZZ, T5, sl.tower_ring((5, 13))):
        assert sl.pythagoras_profile(ring, Fraction(1, 2), 3).rows == []


def test_sqrt2_profile_reaches_three():
    prof = sl.pythagoras_profile(sl.quadratic_order(2), Fraction(20), 5)
    assert prof.max_length == 3


# --------------------------------------------------------------------------
# cyclotomic adapter


def test_cyclo_two_square_test_examples():
    r54 = cy.CycloRing(5, 4)
    assert sl.not_sum_of_two_squares_cyclo(r54, cy.witness_t(r54, 4)) is False
    r52 = cy.CycloRing(5, 2)
    w5 = cy.CycloElem.omega(r52, 5)
    assert sl.not_sum_of_two_squares_cyclo(r52, w5 * w5) is False


@settings(max_examples=25)
@given(st.lists(st.lists(st.integers(-1, 1), min_size=2, max_size=2), min_size=1, max_size=3), st.integers(0, 2))
def test_cyclo_two_square_test_matches_search(roots, shift):
    ring = cy.CycloRing(5, 1)
    target = cy.CycloElem.constant(ring, shift)
    for r in roots:
        x = cy.CycloElem(ring, r)
        target = target + x * x
    if target.is_zero() or not cy.cyc_is_totally_positive(target):
        return
    adapter = sl.CycloAdapter(ring)
    res = query(adapter, target, cap=2)
    assert sl.not_sum_of_two_squares_cyclo(ring, target) == (not res.found)


def test_cyclo_min_squares_small():
    ring = cy.CycloRing(5, 2)
    adapter = sl.CycloAdapter(ring)
    w1, w5 = cy.CycloElem.omega(ring, 1), cy.CycloElem.omega(ring, 5)
    target = w1 * w1 + w5 * w5
    res = query(adapter, target, cap=3)
    assert res.found and res.length <= 2
    total = cy.CycloElem.zero(ring)
    for r in res.certificate:
        total = total + r * r
    assert total == target
