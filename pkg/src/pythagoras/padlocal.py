"""Local (p-adic) square tests and small combinatorial facts about residues.

Squares in Q_p are detected from the valuation and the unit residue; roots
are produced by Hensel lifting.  Sums of k squares over Q_p follow the usual
classification of the forms <1, ..., 1>.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import isqrt

from .numkernel import is_prime, squarefree_decompose

__all__ = [
    "PadicApprox",
    "valuation",
    "padic_sqrt",
    "is_square_local",
    "sum_k_squares_local",
    "quad_unit_square_test",
    "QuadSquareReport",
    "four_subset_zero_mod4",
    "six_tuple_counterexample",
    "unit_sos_obstruction",
    "NotAUnit",
    "NotTotallyPositive",
    "default_precision",
]


class NotAUnit(ValueError):
    pass


class NotTotallyPositive(ValueError):
    pass


def default_precision(p: int) -> int:
    return 8 if p == 2 else 6


def valuation(x, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


@dataclass(frozen=True)
class PadicApprox:
    """``p**valuation * (unit_residue + O(p**precision))``, or zero."""

    p: int
    valuation: int
    unit_residue: int
    precision: int
    is_zero: bool = False

    def __post_init__(self):
        if not self.is_zero:
            if self.unit_residue % self.p == 0:
                raise ValueError("unit residue must be prime to p")
            object.__setattr__(self, "unit_residue", self.unit_residue % self.p**self.precision)

    @classmethod
    def from_rational(cls, x, p: int, precision: int | None = None) -> "PadicApprox":
        if precision is None:
            precision = default_precision(p)
        x = Fraction(x)
        if x == 0:
            return cls(p, 0, 0, precision, is_zero=True)
        v = valuation(x, p)
        u = x / Fraction(p) ** v
        mod = p**precision
        residue = u.numerator * pow(u.denominator, -1, mod) % mod
        return cls(p, v, residue, precision)

    @property
    def modulus(self) -> int:
        return self.p**self.precision


def _unit_is_square(u: int, p: int) -> bool:
    if p == 2:
        return u % 8 == 1
    return pow(u % p, (p - 1) // 2, p) == 1


def _sqrt_mod_prime(u: int, p: int) -> int:
    u %= p
    if p < 5000:
        return min(r for r in range(1, p) if r * r % p == u)
    # Tonelli-Shanks
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(u, q, p), pow(u, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return min(r, p - r)


def _unit_sqrt(u: int, p: int, precision: int) -> int:
    """Least nonnegative ``r`` with ``r*r = u (mod p**precision)`` (u a square unit)."""
    mod = p**precision
    if p == 2:
        if precision <= 3:
            return min(r for r in range(1, mod, 2) if r * r % mod == u % mod)
        # lift r -> r + 2^(k-1) * t keeping r^2 = u mod 2^k
        r = 1
        for k in range(4, precision + 1):
            if (r * r - u) % (1 << k):
                r += 1 << (k - 2)
        roots = {r % mod, -r % mod, (r + mod // 2) % mod, (-r + mod // 2) % mod}
        return min(roots)
    r = _sqrt_mod_prime(u, p)
    pk = p
    inv2 = pow(2, -1, mod)
    while pk < mod:
        pk = min(pk * pk, mod)
        r = (r - (r * r - u) * inv2 * pow(r, -1, pk)) % pk
    return min(r % mod, -r % mod)


def padic_sqrt(x: PadicApprox) -> PadicApprox | None:
    """Square root in Q_p to the working precision, or ``None`` for a nonsquare."""
    if x.is_zero:
        raise ValueError("padic_sqrt needs a nonzero argument")
    if x.p == 2 and x.precision < 3:
        raise ValueError("squares in Q_2 are decided modulo 8; precision must be at least 3")
    if x.valuation % 2 or not _unit_is_square(x.unit_residue, x.p):
        return None
    r = _unit_sqrt(x.unit_residue, x.p, x.precision)
    assert (r * r - x.unit_residue) % x.modulus == 0
    return PadicApprox(x.p, x.valuation // 2, r, x.precision)


def _split(x, p: int) -> tuple[int, int]:
    """``x = p**v * u`` with ``u`` a p-adic unit; returns ``(v, u mod p^3)``."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("zero has no square class")
    v = valuation(x, p)
    u = x / Fraction(p) ** v
    mod = p**3
    return v, u.numerator * pow(u.denominator, -1, mod) % mod


def is_square_local(x, p: int) -> bool:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    v, u = _split(x, p)
    return v % 2 == 0 and _unit_is_square(u, p)


def sum_k_squares_local(x, k: int, p: int) -> bool:
    """Is ``x`` a sum of ``k`` squares in Q_p?"""
    if k not in (1, 2, 3, 4):
        raise ValueError("k must be in 1..4")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    v, u = _split(x, p)
    if k == 1:
        return v % 2 == 0 and _unit_is_square(u, p)
    if k == 2:
        # norm from Q_p(i): Hilbert symbol (-1, x)_p = 1
        if p == 2:
            return u % 4 == 1
        if p % 4 == 1:
            return True
        return v % 2 == 0
    if k == 3:
        # <1,1,1> is isotropic for odd p; over Q_2 it misses exactly the class of -1
        if p == 2:
            return not (v % 2 == 0 and u % 8 == 7)
        return True
    return True


@dataclass(frozen=True)
class QuadSquareReport:
    embeds: bool
    roots: tuple[int, ...]
    values: tuple[PadicApprox, ...]
    square_class_per_root: tuple[bool, ...]
    precision: int

    def as_dict(self) -> dict:
        return {
            "embeds": self.embeds,
            "roots": list(self.roots),
            "values": [
                {"valuation": v.valuation, "unit_residue": v.unit_residue, "precision": v.precision}
                for v in self.values
            ],
            "square_class_per_root": list(self.square_class_per_root),
            "precision": self.precision,
        }


def quad_unit_square_test(a: int, b: int, d: int, p: int, prec: int | None = None) -> QuadSquareReport:
    """Is ``a + b*sqrt(d)`` a square in Q_p, for each p-adic root of ``d``?"""
    if prec is None:
        prec = default_precision(p)
    if isqrt(d) ** 2 == d:
        raise ValueError("d must not be a perfect square")
    if d % p == 0 or not _unit_is_square(d, p):
        return QuadSquareReport(False, (), (), (), prec)
    need = 3 if p != 2 else 5
    if b == 0:
        root = _unit_sqrt(d, p, prec)
        roots = (root, (-root) % p**prec)
        val = PadicApprox.from_rational(a, p, prec)
        cls = val.valuation % 2 == 0 and _unit_is_square(val.unit_residue, p)
        return QuadSquareReport(True, roots, (val, val), (cls, cls), prec)
    while True:
        root = _unit_sqrt(d, p, prec)
        roots = (root, (-root) % p**prec)
        # a 2-adic root is only pinned down modulo 2^(prec-1)
        known = (prec - 1 if p == 2 else prec) + valuation(b, p)
        values = []
        decided = True
        for rt in roots:
            val = a + b * rt
            if val % p**known == 0:
                decided = False
                break
            v = valuation(val, p)
            if v + need > known:
                decided = False
                break
            values.append(PadicApprox.from_rational(val, p, known - v))
        if decided:
            classes = tuple(v.valuation % 2 == 0 and _unit_is_square(v.unit_residue, p) for v in values)
            return QuadSquareReport(True, roots, tuple(values), classes, prec)
        prec *= 2


def four_subset_zero_mod4(m) -> tuple[int, int, int, int] | None:
    """Indices ``i<j<k<l`` (1-based) with ``m_i+m_j+m_k+m_l = 0 (mod 4)``."""
    m = list(m)
    if len(m) != 7:
        raise ValueError("expected exactly 7 residues")
    for idx in combinations(range(7), 4):
        if sum(m[i] for i in idx) % 4 == 0:
            return tuple(i + 1 for i in idx)
    return None


def six_tuple_counterexample() -> tuple[int, ...]:
    """Six residues mod 4 with no zero-sum 4-subset."""
    m = (0, 0, 0, 1, 1, 1)
    assert all(sum(c) % 4 for c in combinations(m, 4))
    return m


def unit_sos_obstruction(a: int, b: int, d: int, p: int) -> bool:
    """Certify that the totally positive unit ``a + b*sqrt(d)`` is not a sum of squares.

    True when the element is a nonsquare in Q_p under every embedding of
    Q(sqrt(d)); raises :class:`NotAUnit` / :class:`NotTotallyPositive` when
    the element fails the hypotheses.
    """
    from .multiquad import MultiQuadElem, is_totally_positive, mq_norm

    x = MultiQuadElem.rational(a) + MultiQuadElem.sqrt(d, b)
    if abs(mq_norm(x)) != 1:
        raise NotAUnit(f"{x} has norm {mq_norm(x)}, not a unit")
    if not is_totally_positive(x):
        raise NotTotallyPositive(f"{x} is not totally positive")
    c, dd = squarefree_decompose(d)
    report = quad_unit_square_test(a, b * c, dd, p)
    return report.embeds and not any(report.square_class_per_root)
