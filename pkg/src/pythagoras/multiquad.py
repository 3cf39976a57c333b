"""Exact arithmetic in multiquadratic fields.

An element is stored as its unique expansion ``sum c_d * sqrt(d)`` over
distinct squarefree ``d`` with nonzero rational ``c_d`` (``d = 1`` holds the
rational part).  Prime towers ``Q(sqrt(p_1), ..., sqrt(p_m))`` with every
``p_i = 1 (mod 4)`` come with the product integral basis
``e_S = prod_{i in S} (1 + sqrt(p_i))/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Mapping

from .numkernel import (
    is_prime,
    is_squarefree,
    prime_factors,
    sqrt_fixed,
    squarefree_decompose,
)

__all__ = [
    "MultiQuadElem",
    "PrimeTower",
    "HalfCoords",
    "NotIntegral",
    "NotInTower",
    "mq_add",
    "mq_mul",
    "contains_sqrt",
    "normalized_trace",
    "is_totally_positive",
    "embeddings",
    "mq_norm",
    "min_poly",
    "format_poly",
    "to_half_coords",
    "from_half_coords",
    "witness_s",
    "greedy_prime_sequence",
    "growth_bound",
    "three_prime_trace_check",
    "ThreePrimeTraceReport",
    "two_square_unramified_rep",
    "divides_or_coprime_predicate",
]


class NotIntegral(ValueError):
    """Element lies in the tower field but is not an algebraic integer."""


class NotInTower(ValueError):
    """Element uses a radical that the tower does not generate."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


class MultiQuadElem:
    """Element ``sum c_d sqrt(d)`` of the compositum of real quadratic fields."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[int, object] | None = None):
        clean: dict[int, Fraction] = {}
        for d, c in (terms or {}).items():
            if not is_squarefree(d):
                raise ValueError(f"radicand {d} is not squarefree")
            c = _frac(c)
            if c:
                clean[d] = c
        self._terms = dict(sorted(clean.items()))
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict[int, Fraction]) -> "MultiQuadElem":
        obj = cls.__new__(cls)
        obj._terms = dict(sorted((d, c) for d, c in terms.items() if c))
        obj._hash = None
        return obj

    @classmethod
    def rational(cls, c) -> "MultiQuadElem":
        return cls._raw({1: _frac(c)})

    @classmethod
    def sqrt(cls, n: int, coeff=1) -> "MultiQuadElem":
        """``coeff * sqrt(n)`` for any positive integer ``n``."""
        c, d = squarefree_decompose(n)
        return cls._raw({d: _frac(coeff) * c})

    @classmethod
    def coerce(cls, x) -> "MultiQuadElem":
        if isinstance(x, MultiQuadElem):
            return x
        return cls.rational(x)

    # -- accessors -----------------------------------------------------
    @property
    def terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    def keys(self) -> list[int]:
        return list(self._terms)

    def coefficient(self, d: int) -> Fraction:
        return self._terms.get(d, Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def is_rational(self) -> bool:
        return all(d == 1 for d in self._terms)

    def rational_value(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.coefficient(1)

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        try:
            other = MultiQuadElem.coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for d, c in other._terms.items():
            out[d] = out.get(d, 0) + c
        return MultiQuadElem._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return MultiQuadElem._raw({d: -c for d, c in self._terms.items()})

    def __sub__(self, other):
        try:
            other = MultiQuadElem.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return MultiQuadElem.coerce(other) - self

    def __mul__(self, other):
        try:
            other = MultiQuadElem.coerce(other)
        except TypeError:
            return NotImplemented
        out: dict[int, Fraction] = {}
        for d1, c1 in self._terms.items():
            for d2, c2 in other._terms.items():
                g = gcd(d1, d2)
                d = (d1 // g) * (d2 // g)
                out[d] = out.get(d, 0) + c1 * c2 * g
        return MultiQuadElem._raw(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / _frac(other))
        return NotImplemented

    def __pow__(self, e: int):
        if not isinstance(e, int) or e < 0:
            raise ValueError("only nonnegative integer powers")
        result = MultiQuadElem.rational(1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MultiQuadElem.rational(other)
        if not isinstance(other, MultiQuadElem):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    def __repr__(self):
        return f"MultiQuadElem({str(self)!r})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for d, c in self._terms.items():
            mag = abs(c)
            if d == 1:
                body = str(mag)
            elif mag == 1:
                body = f"sqrt({d})"
            else:
                body = f"{mag}*sqrt({d})"
            parts.append(("-" if c < 0 else "+", body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    # -- conjugation ---------------------------------------------------
    def conjugate(self, signs: Mapping[int, int]) -> "MultiQuadElem":
        """Apply ``sqrt(q) -> signs[q]*sqrt(q)`` for primes ``q``."""
        out = {}
        for d, c in self._terms.items():
            s = 1
            for q in prime_factors(d):
                s *= signs.get(q, 1)
            out[d] = c * s
        return MultiQuadElem._raw(out)


def mq_add(a: MultiQuadElem, b: MultiQuadElem) -> MultiQuadElem:
    return a + b


def mq_mul(a: MultiQuadElem, b: MultiQuadElem) -> MultiQuadElem:
    return a * b


def contains_sqrt(a: MultiQuadElem, d: int) -> bool:
    if not is_squarefree(d):
        raise ValueError(f"{d} is not squarefree")
    return a.coefficient(d) != 0


def normalized_trace(a: MultiQuadElem) -> Fraction:
    """``Tr(a)/[L:Q]`` for any multiquadratic ``L`` containing ``a``."""
    return a.coefficient(1)


# --------------------------------------------------------------------------
# embeddings of the field generated by the radicals of an element


def _support_primes(keys: Iterable[int]) -> list[int]:
    ps: set[int] = set()
    for d in keys:
        ps.update(prime_factors(d))
    return sorted(ps)


def _generator_basis(keys: Iterable[int]) -> tuple[list[int], list[int]]:
    """F_2-basis of the square classes spanned by ``keys``.

    Returns ``(primes, basis_masks)``; masks are bit vectors over ``primes``.
    """
    keys = [d for d in keys if d != 1]
    primes = _support_primes(keys)
    index = {q: i for i, q in enumerate(primes)}
    basis: list[int] = []
    pivots: list[int] = []
    for d in keys:
        v = 0
        for q in prime_factors(d):
            v |= 1 << index[q]
        for b, piv in zip(basis, pivots):
            if v >> piv & 1:
                v ^= b
        if v:
            piv = v.bit_length() - 1
            # keep rows reduced so decomposition is a plain pivot lookup
            for i, (b, p) in enumerate(zip(basis, pivots)):
                if b >> piv & 1:
                    basis[i] = b ^ v
            basis.append(v)
            pivots.append(piv)
    return primes, list(zip(basis, pivots))


def _embedding_sign_tables(a: MultiQuadElem) -> list[dict[int, int]]:
    """One ``{key: sign}`` table per real embedding of ``Q(radicals of a)``."""
    keys = a.keys()
    primes, basis = _generator_basis(keys)
    index = {q: i for i, q in enumerate(primes)}
    decomp: dict[int, list[int]] = {}
    for d in keys:
        v = 0
        if d != 1:
            for q in prime_factors(d):
                v |= 1 << index[q]
        used = []
        for j, (b, piv) in enumerate(basis):
            if v >> piv & 1:
                v ^= b
                used.append(j)
        assert v == 0
        decomp[d] = used
    tables = []
    r = len(basis)
    for mask in range(1 << r):
        tables.append(
            {d: (-1) ** sum(mask >> j & 1 for j in used) for d, used in decomp.items()}
        )
    return tables


def embeddings(a: MultiQuadElem) -> list[MultiQuadElem]:
    """All conjugates of ``a`` over ``Q(radicals of a)``, identity first."""
    return [
        MultiQuadElem._raw({d: c * t[d] for d, c in a._terms.items()})
        for t in _embedding_sign_tables(a)
    ]


def _sign_fixed(terms: dict[int, Fraction]) -> int:
    """Exact sign of a real number ``sum c_d sqrt(d)`` (numerically evaluated)."""
    if not terms:
        return 0
    den = 1
    for c in terms.values():
        den = den * c.denominator // gcd(den, c.denominator)
    ints = {d: int(c * den) for d, c in terms.items()}
    bits = 64
    while True:
        lo = hi = 0
        for d, c in ints.items():
            slo, shi = sqrt_fixed(d, bits)
            if c >= 0:
                lo += c * slo
                hi += c * shi
            else:
                lo += c * shi
                hi += c * slo
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        if bits > 1 << 16:
            # a nonzero combination of independent radicals cannot vanish
            raise ArithmeticError("sign refinement did not terminate")
        bits *= 2


def is_totally_positive(a: MultiQuadElem) -> bool:
    if a.is_zero():
        return False
    for table in _embedding_sign_tables(a):
        conj = {d: c * table[d] for d, c in a._terms.items()}
        if _sign_fixed(conj) <= 0:
            return False
    return True


def embedding_floats(a: MultiQuadElem) -> list[float]:
    from math import sqrt

    return [
        sum(float(c) * t[d] * sqrt(d) for d, c in a._terms.items())
        for t in _embedding_sign_tables(a)
    ]


def mq_norm(a: MultiQuadElem) -> Fraction:
    """Norm from ``Q(radicals of a)`` to ``Q``."""
    primes, basis = _generator_basis(a.keys())
    index = {q: i for i, q in enumerate(primes)}
    x = a
    # x <- x * sigma_j(x) for each generator j; the result ends up in Q
    for j in range(len(basis)):
        x = x * _flip_generator(x, index, basis, j)
    return x.rational_value()


def _flip_generator(x: MultiQuadElem, index, basis, j: int) -> MultiQuadElem:
    b_j, piv_j = basis[j]
    out = {}
    for d, c in x._terms.items():
        v = 0
        if d != 1:
            for q in prime_factors(d):
                v |= 1 << index[q]
        # rows are fully reduced, so sqrt(d) uses generator j iff its pivot is set
        out[d] = -c if v >> piv_j & 1 else c
    return MultiQuadElem._raw(out)


# --------------------------------------------------------------------------
# polynomials over Q, coefficient lists low degree first


def _poly_trim(p: list[Fraction]) -> list[Fraction]:
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_divmod(a: list[Fraction], b: list[Fraction]):
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    while len(_poly_trim(a)) >= len(b):
        shift = len(a) - len(b)
        f = a[-1] / b[-1]
        q[shift] = f
        for i, c in enumerate(b):
            a[i + shift] -= f * c
    return _poly_trim(q), a


def _poly_gcd(a, b):
    a, b = _poly_trim(list(a)), _poly_trim(list(b))
    while b:
        a, b = b, _poly_divmod(a, b)[1]
    return [c / a[-1] for c in a]


def min_poly(a: MultiQuadElem) -> list[Fraction]:
    """Monic minimal polynomial of ``a``, coefficients highest degree first.

    Computed as the squarefree part of ``prod (x - sigma(a))``.
    """
    _, basis = _generator_basis(a.keys())
    if len(basis) > 3:
        raise ValueError("min_poly supports at most 3 independent radicals")
    poly: list[MultiQuadElem] = [MultiQuadElem.rational(1)]
    for conj in embeddings(a):
        nxt = [MultiQuadElem()] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i + 1] = nxt[i + 1] + c
            nxt[i] = nxt[i] - c * conj
        poly = nxt
    char = [c.rational_value() for c in poly]
    deriv = [i * c for i, c in enumerate(char)][1:]
    g = _poly_gcd(char, deriv)
    minimal, rem = _poly_divmod(char, g)
    assert not rem
    lead = minimal[-1]
    return [c / lead for c in reversed(minimal)]


def format_poly(coeffs: list[Fraction], var: str = "x") -> str:
    deg = len(coeffs) - 1
    parts = []
    for i, c in enumerate(coeffs):
        e = deg - i
        if c == 0:
            continue
        mag = abs(c)
        mono = "" if e == 0 else (var if e == 1 else f"{var}^{e}")
        body = str(mag) if (mag != 1 or not mono) else ""
        if body and mono:
            body += "*"
        parts.append(("-" if c < 0 else "+", body + mono))
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for s, b in parts[1:]:
        out += f" {s} {b}"
    return out


# --------------------------------------------------------------------------
# prime towers


@dataclass(frozen=True)
class PrimeTower:
    """``Q(sqrt(p_1), ..., sqrt(p_m))`` with primes ``p_i = 1 (mod 4)``."""

    primes: tuple[int, ...]

    def __post_init__(self):
        ps = tuple(int(p) for p in self.primes)
        object.__setattr__(self, "primes", ps)
        for p in ps:
            if not is_prime(p) or p % 4 != 1:
                raise ValueError(f"tower prime {p} is not a prime = 1 (mod 4)")
        if any(a >= b for a, b in zip(ps, ps[1:])):
            raise ValueError("tower primes must be strictly increasing")

    @property
    def m(self) -> int:
        return len(self.primes)

    @property
    def degree(self) -> int:
        return 1 << self.m

    def subset_product(self, mask: int) -> int:
        out = 1
        for i, p in enumerate(self.primes):
            if mask >> i & 1:
                out *= p
        return out

    def basis_element(self, mask: int) -> MultiQuadElem:
        """``e_S = prod_{i in S} (1 + sqrt(p_i))/2``; ``S`` given as bit mask."""
        out = MultiQuadElem.rational(1)
        for i, p in enumerate(self.primes):
            if mask >> i & 1:
                out = out * MultiQuadElem({1: Fraction(1, 2), p: Fraction(1, 2)})
        return out

    def basis(self) -> list[MultiQuadElem]:
        return [self.basis_element(s) for s in range(self.degree)]

    def mask_of(self, d: int) -> int:
        """Subset mask for a squarefree radicand built from tower primes."""
        mask = 0
        rest = d
        for i, p in enumerate(self.primes):
            if rest % p == 0:
                mask |= 1 << i
                rest //= p
        if rest != 1:
            raise NotInTower(f"sqrt({d}) is not in Q(sqrt(p) : p in {list(self.primes)})")
        return mask


@dataclass(frozen=True)
class HalfCoords:
    tower: PrimeTower
    coords: tuple[int, ...]

    def __getitem__(self, mask: int) -> int:
        return self.coords[mask]


def to_half_coords(a: MultiQuadElem, tower: PrimeTower) -> HalfCoords:
    """Integer coordinates of ``a`` over the product half-basis of ``tower``.

    Raises :class:`NotInTower` or :class:`NotIntegral`.
    """
    m = tower.m
    c = [Fraction(0)] * (1 << m)
    for d, coeff in a.terms.items():
        c[tower.mask_of(d)] = coeff
    # e_S = 2^-|S| sum_{T <= S} sqrt(p_T); invert by superset Moebius
    y = list(c)
    for i in range(m):
        bit = 1 << i
        for s in range(1 << m):
            if not s & bit:
                y[s] -= y[s | bit]
    out = []
    for s, v in enumerate(y):
        x = v * (1 << bin(s).count("1"))
        if x.denominator != 1:
            raise NotIntegral(f"{a} is not integral over tower {list(tower.primes)}")
        out.append(int(x))
    return HalfCoords(tower, tuple(out))


def from_half_coords(h: HalfCoords) -> MultiQuadElem:
    m = h.tower.m
    terms: dict[int, Fraction] = {}
    for s, x in enumerate(h.coords):
        if not x:
            continue
        scale = Fraction(x, 1 << bin(s).count("1"))
        t = s
        # all subsets T of S contribute sqrt(p_T)
        while True:
            d = h.tower.subset_product(t)
            terms[d] = terms.get(d, 0) + scale
            if t == 0:
                break
            t = (t - 1) & s
    del m
    return MultiQuadElem._raw(terms)


# --------------------------------------------------------------------------
# witnesses and growth sequences


def _half_square(p: int) -> MultiQuadElem:
    # ((1 + sqrt p)/2)^2 = (1 + p)/4 + sqrt(p)/2
    return MultiQuadElem._raw({1: Fraction(1 + p, 4), p: Fraction(1, 2)})


def witness_s(tower: PrimeTower, n: int) -> MultiQuadElem:
    """``s_n = sum_{i <= n} ((1 + sqrt(p_i))/2)^2``."""
    if not 1 <= n <= tower.m:
        raise ValueError(f"n must lie in 1..{tower.m}")
    out = MultiQuadElem()
    for p in tower.primes[:n]:
        out = out + _half_square(p)
    return out


def growth_bound(primes: Iterable[int]) -> int:
    """``2 + 2*sum(1 + p_i)``; the next prime must exceed this."""
    return 2 + 2 * sum(1 + p for p in primes)


def greedy_prime_sequence(start: int, count: int) -> list[int]:
    if count < 1:
        raise ValueError("count must be >= 1")

    def least_from(lower: int) -> int:
        q = max(lower, 2)
        while not (q % 4 == 1 and is_prime(q)):
            q += 1
        return q

    seq = [least_from(start)]
    while len(seq) < count:
        seq.append(least_from(growth_bound(seq) + 1))
    return seq


@dataclass(frozen=True)
class ThreePrimeTraceReport:
    primes: tuple[int, int, int]
    alpha: MultiQuadElem
    alpha_min_poly: list[Fraction]
    alpha_integral: bool
    target_radicand: int
    contains_target: bool
    target_coefficient: Fraction
    field_degree: int
    trace_lhs: Fraction
    trace_rhs: Fraction
    inequality_holds: bool
    trace_gap: Fraction
    trace_gap_threshold: Fraction

    def as_dict(self) -> dict:
        return {
            "primes": list(self.primes),
            "alpha": str(self.alpha),
            "alpha_min_poly": format_poly(self.alpha_min_poly),
            "alpha_integral": self.alpha_integral,
            "target_radicand": self.target_radicand,
            "contains_target": self.contains_target,
            "target_coefficient": str(self.target_coefficient),
            "field_degree": self.field_degree,
            "trace_lhs": str(self.trace_lhs),
            "trace_rhs": str(self.trace_rhs),
            "inequality_holds": self.inequality_holds,
            "trace_gap": str(self.trace_gap),
            "trace_gap_threshold": str(self.trace_gap_threshold),
        }


def three_prime_trace_check(p1: int, p2: int, p3: int) -> ThreePrimeTraceReport:
    ps = (p1, p2, p3)
    for p in ps:
        if not is_prime(p) or p % 4 != 1:
            raise ValueError(f"{p} is not a prime = 1 (mod 4)")
    if not p1 < p2 < p3:
        raise ValueError("primes must satisfy p1 < p2 < p3")
    alpha = (
        MultiQuadElem.sqrt(p1 * p2)
        + MultiQuadElem.sqrt(p1 * p3)
        + MultiQuadElem.sqrt(p2 * p3)
        + 1
    ) / 4
    poly = min_poly(alpha)
    integral = all(c.denominator == 1 for c in poly)
    sq = alpha * alpha
    target = p1 * p3
    degree = len(poly) - 1
    comparison = _half_square(target)
    lhs = degree * normalized_trace(sq)
    rhs = degree * normalized_trace(comparison)
    return ThreePrimeTraceReport(
        primes=ps,
        alpha=alpha,
        alpha_min_poly=poly,
        alpha_integral=integral,
        target_radicand=target,
        contains_target=contains_sqrt(sq, target),
        target_coefficient=sq.coefficient(target),
        field_degree=degree,
        trace_lhs=lhs,
        trace_rhs=rhs,
        inequality_holds=lhs < rhs,
        trace_gap=normalized_trace(sq) - normalized_trace(comparison),
        trace_gap_threshold=Fraction(target - 2, 8),
    )


def two_square_unramified_rep(p: int) -> tuple[MultiQuadElem, MultiQuadElem]:
    """``p = 1^2 + sqrt(p-1)^2`` with ``sqrt(p-1)`` written as ``c*sqrt(d)``."""
    if p % 2 == 0 or not is_prime(p):
        raise ValueError(f"{p} is not an odd prime")
    one = MultiQuadElem.rational(1)
    root = MultiQuadElem.sqrt(p - 1)
    assert one * one + root * root == MultiQuadElem.rational(p)
    return one, root


def divides_or_coprime_predicate(values: Iterable[int]) -> bool:
    """Some ``n = 1 (mod 4)`` in the set divides or is coprime to every member."""
    vals = sorted(set(values))
    for n in vals:
        if n % 4 != 1:
            continue
        if all(m % n == 0 or gcd(m, n) == 1 for m in vals):
            return True
    return False
