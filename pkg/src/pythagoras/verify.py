"""Self-checks run by ``pythagoras verify`` and by the acceptance tests.

Each check returns a :class:`CheckResult`; failures are collected rather
than raised so that one broken check does not hide the others.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import cyclo as cy
from . import multiquad as mq
from . import padlocal as pl
from . import soslab as sl

DEFAULT_SEED = 20240611


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    topic: str
    gating: bool = True
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.ok else ("FAIL" if self.gating else "MISS")
        extra = "" if self.gating else " (non-gating)"
        return f"[{tag}] {self.name}{extra}: {self.detail} ({self.seconds:.2f}s) [{self.topic}]"


# --------------------------------------------------------------------------
# independent oracles


def residue_oracle_sum_k(x, k: int, p: int) -> bool:
    """Is ``x`` a sum of ``k`` squares in Q_p?  Decided by a residue search.

    ``x`` is scaled by an even power of ``p`` to valuation 0 or 1.  A
    primitive ``y`` with ``sum y_i^2 = p^(2j) x`` and a unit coordinate is
    detected modulo ``p`` (odd ``p``) or ``8`` (``p = 2``); Hensel's lemma in
    the unit coordinate lifts it to an exact solution.
    """
    x = Fraction(x)
    v = pl.valuation(x, p)
    x = x / Fraction(p) ** (v - v % 2)
    mod = 8 if p == 2 else p
    js = (0, 1, 2) if p == 2 else (0, 1)
    for j in js:
        c = x * p ** (2 * j)
        if c.denominator % p == 0:
            continue
        target = c.numerator * pow(c.denominator, -1, mod) % mod
        for y in itertools.product(range(mod), repeat=k):
            if sum(t * t for t in y) % mod == target and any(t % p for t in y):
                return True
    return False


def _omega_float(k: int, j: int, M: int) -> float:
    return 2 * math.cos(2 * math.pi * ((j * k) % M) / M)


def _small_rings(limit: int) -> list[tuple[int, int]]:
    out = []
    for p in range(5, limit + 1, 4):
        if not mq.is_prime(p):
            continue
        n = 1
        while p**n <= limit:
            out.append((p, n))
            n += 1
    return out


# --------------------------------------------------------------------------
# checks


def check_zero_sum_subsets() -> tuple[bool, str]:
    bad = [m for m in itertools.product(range(4), repeat=7) if pl.four_subset_zero_mod4(m) is None]
    six = pl.six_tuple_counterexample()
    six_ok = six == (0, 0, 0, 1, 1, 1) and all(
        sum(c) % 4 for c in itertools.combinations(six, 4)
    ) and len(list(itertools.combinations(six, 4))) == 15
    return not bad and six_ok, f"{4**7} tuples, {len(bad)} without a zero-sum 4-subset; six-tuple check {six_ok}"


def check_omega_product_rule(seed: int = DEFAULT_SEED, count: int = 1000) -> tuple[bool, str]:
    rng = random.Random(seed)
    rings = _small_rings(3000)
    worst = 0.0
    exact_fail = 0
    for _ in range(count):
        p, n = rng.choice(rings)
        R = cy.CycloRing(p, n)
        M = R.M
        k, l = rng.randrange(-2 * M, 2 * M), rng.randrange(-2 * M, 2 * M)
        prod = cy.CycloElem.omega(R, k) * cy.CycloElem.omega(R, l)
        rule = cy.CycloElem.omega(R, k + l) + cy.CycloElem.omega(R, k - l)
        if prod != rule:
            exact_fail += 1
        js = cy.embedding_exponents(R)
        got = cy.embedding_floats(prod)
        want = np.array([_omega_float(k, int(j), M) * _omega_float(l, int(j), M) for j in js])
        worst = max(worst, float(np.max(np.abs(got - want))))
    ok = exact_fail == 0 and worst < 1e-8
    return ok, f"{count} products, {exact_fail} exact mismatches, max embedding error {worst:.2e}"


def check_constant_coefficient(seed: int = DEFAULT_SEED, count: int = 1000) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    rings = [cy.CycloRing(p, n) for p in (5, 13) for n in (1, 2, 3, 4)]
    fails = []
    for i in range(count):
        R = rings[i % len(rings)]
        a = cy.CycloElem(R, rng.integers(-3, 4, R.N))
        sq = a * a
        c0 = cy.c0_closed_form(a)
        split = cy.c0_split(a)
        pred = cy.mod2_square_prediction(a)
        if c0 != sq.c0:
            fails.append(f"closed form {R}")
        if sum(split) != c0 or min(split) < 0:
            fails.append(f"split {R}")
        if np.any((sq.coeffs - pred.coeffs) % 2):
            fails.append(f"mod 2 {R}")
    return not fails, f"{count} random elements, {len(fails)} failures" + (f": {fails[:3]}" if fails else "")


def check_witness_coefficients() -> tuple[bool, str]:
    bad = []
    cases = 0
    for p in (5, 13):
        for n in range(3, 7):
            R = cy.CycloRing(p, n)
            for m in range(3, n + 1):
                t = cy.witness_t(R, m)
                cases += 1
                if t.c0 != 2 * (m - 2):
                    bad.append((p, n, m, "C0"))
                for k in range(n - m, n - 2):
                    if t[2 * p**k] != 1:
                        bad.append((p, n, m, k))
    return not bad, f"{cases} (p, n, m) cases, {len(bad)} failures"


def check_t4_not_square() -> tuple[bool, str]:
    R = cy.CycloRing(5, 4)
    t4 = cy.witness_t(R, 4)
    w1, w5 = cy.CycloElem.omega(R, 1), cy.CycloElem.omega(R, 5)
    is_sum = w1 * w1 + w5 * w5 == t4
    root = cy.cyc_sqrt_exact(t4)
    return root is None and is_sum, f"cyc:5^4 t_4 = w(1)^2 + w(5)^2: {is_sum}; square root: {root}"


def check_t5_not_two_squares() -> tuple[bool, str]:
    R = cy.CycloRing(5, 5)
    try:
        res = sl.not_sum_of_two_squares_cyclo(R, cy.witness_t(R, 5))
    except sl.CapacityExceeded as e:
        return False, f"capacity exceeded: {e}"
    return res, f"cyc:5^5 t_5 is not a sum of two squares: {res}"


def _tower_witness(primes):
    tower = mq.PrimeTower(tuple(primes))
    return tower, mq.witness_s(tower, len(primes))


def check_tower_witnesses() -> tuple[bool, str]:
    parts = []
    ok = True
    for primes, want, bound in (((5,), 1, Fraction(3, 2)), ((5, 17), 2, Fraction(6)), ((5, 17, 53), 3, Fraction(39, 2))):
        _, s = _tower_witness(primes)
        ring = sl.tower_ring(primes)
        B = mq.normalized_trace(s)
        res = sl.min_squares(sl.SosQuery(ring, s, 4))
        total = sum((c * c for c in res.certificate), mq.MultiQuadElem())
        good = res.found and res.length == want and B == bound and total == s
        ok &= good
        parts.append(f"{list(primes)}: length {res.length} (B = {B}, {res.candidates} candidates)")
    return ok, "; ".join(parts)


def check_integer_sanity() -> tuple[bool, str]:
    Z = sl.integer_ring()
    res = sl.min_squares(sl.SosQuery(Z, mq.MultiQuadElem.rational(7), 5))
    prof = sl.pythagoras_profile(Z, 10, 5)
    at7 = [str(e) for e in prof.argmax]
    ok = res.length == 4 and prof.max_length == 4 and at7 == ["7"]
    return ok, f"min_squares(7) = {res.length}; profile(B=10) max {prof.max_length} at {at7}"


def check_local_criteria() -> tuple[bool, str]:
    mism = []
    for p in (2, 3, 5):
        for k in (1, 2, 3, 4):
            for x in range(1, 201):
                if pl.sum_k_squares_local(x, k, p) != residue_oracle_sum_k(x, k, p):
                    mism.append((x, k, p))
    named = (not pl.sum_k_squares_local(7, 3, 2)) and (not pl.sum_k_squares_local(3, 2, 3))
    return not mism and named, f"2400 cases, {len(mism)} mismatches; 7 over Q_2 (k=3) and 3 over Q_3 (k=2) rejected: {named}"


def check_unit_obstructions() -> tuple[bool, str]:
    facts = []
    for a, b, d, p in ((8, 3, 7, 3), (23, 4, 33, 2)):
        x = mq.MultiQuadElem.rational(a) + mq.MultiQuadElem.sqrt(d, b)
        facts.append(pl.unit_sos_obstruction(a, b, d, p))
        facts.append(mq.mq_norm(x) == 1)
        facts.append(mq.is_totally_positive(x))
    ring = sl.quadratic_order(7)
    unit = mq.MultiQuadElem.rational(8) + mq.MultiQuadElem.sqrt(7, 3)
    res = sl.min_squares(sl.SosQuery(ring, unit, 4))
    facts.append(not res.found)
    return all(facts), f"obstructions/norms/positivity {facts[:6]}; quad:7 search for 8+3*sqrt(7) (cap 4): {res.status}"


def check_growth_sequence() -> tuple[bool, str]:
    seq = mq.greedy_prime_sequence(5, 4)
    ok = seq == [5, 17, 53, 173] and all(seq[i + 1] > mq.growth_bound(seq[: i + 1]) for i in range(len(seq) - 1))
    return ok, f"{seq}"


def check_trace_comparison() -> tuple[bool, str]:
    good = mq.three_prime_trace_check(13, 17, 29)
    bad = mq.three_prime_trace_check(5, 13, 17)
    ok = (
        good.alpha_integral
        and good.contains_target
        and good.trace_lhs == 273
        and good.trace_rhs == 378
        and good.inequality_holds
        and not bad.inequality_holds
    )
    return ok, f"(13,17,29): {good.trace_lhs} < {good.trace_rhs}; (5,13,17): {bad.trace_lhs} vs {bad.trace_rhs}"


def sos_report_json(ring: sl.RingAdapter, target, cap: int, workers: int) -> str:
    from .cli import sos_payload

    res = sl.min_squares(sl.SosQuery(ring, target, cap), workers=workers)
    return json.dumps(sos_payload(ring, target, res), sort_keys=True)


def check_determinism(worker_counts=(1, 2, 8)) -> tuple[bool, str]:
    inputs = [(sl.integer_ring(), mq.MultiQuadElem.rational(7), 5)]
    for primes in ((5,), (5, 17), (5, 17, 53)):
        _, s = _tower_witness(primes)
        inputs.append((sl.tower_ring(primes), s, 4))
    differing = []
    for ring, target, cap in inputs:
        outs = {w: sos_report_json(ring, target, cap, w) for w in worker_counts}
        if len(set(outs.values())) != 1:
            differing.append(ring.name)
    return not differing, f"{len(inputs)} queries x workers {list(worker_counts)}; differing: {differing}"


@dataclass(frozen=True)
class Check:
    name: str
    topic: str
    run: Callable[..., tuple[bool, str]]
    gating: bool = True
    seeded: bool = False


CHECKS: list[Check] = [
    Check("zero-sum-4-subsets", "seven residues mod 4 always contain a zero-sum 4-subset", check_zero_sum_subsets),
    Check("omega-product-rule", "w(k)w(l) = w(k+l) + w(k-l)", check_omega_product_rule, seeded=True),
    Check("constant-coefficient", "C0(a^2) closed form, mod-2 square congruence, block split", check_constant_coefficient, seeded=True),
    Check("witness-t-coefficients", "C0(t_m) = 2(m-2), C_{2p^k}(t_m) = 1", check_witness_coefficients),
    Check("t4-not-a-square", "t_4 in cyc:5^4 is not a single square", check_t4_not_square),
    Check("t5-not-two-squares", "t_5 in cyc:5^5 is not a sum of two squares", check_t5_not_two_squares, gating=False),
    Check("tower-witness-lengths", "s_n needs n squares inside its tower", check_tower_witnesses),
    Check("integer-sanity", "7 needs four squares; P(Z) = 4", check_integer_sanity),
    Check("local-sum-of-squares", "sums of k squares over Q_p", check_local_criteria),
    Check("unit-obstructions", "totally positive nonsquare units are not sums of squares", check_unit_obstructions),
    Check("growth-sequence", "p_{n+1} > 2 + 2 sum (1 + p_i)", check_growth_sequence),
    Check("trace-comparison", "trace comparison for a three-prime tower", check_trace_comparison),
    Check("determinism", "sos output independent of worker count", check_determinism),
]


def run_checks(filter_text: str | None = None, seed: int = DEFAULT_SEED) -> list[CheckResult]:
    out = []
    for chk in CHECKS:
        if filter_text and filter_text not in chk.name:
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = chk.run(seed) if chk.seeded else chk.run()
        except Exception as e:  # collected, not fatal
            ok, detail = False, f"{type(e).__name__}: {e}"
        out.append(CheckResult(chk.name, ok, detail, chk.topic, chk.gating, time.perf_counter() - t0))
    return out
