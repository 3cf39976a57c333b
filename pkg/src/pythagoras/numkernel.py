"""Exact integer support and certified rational enclosures.

Rationals are plain :class:`fractions.Fraction` values.  Real numbers that
show up in embeddings (square roots and ``2cos(2*pi*k/N)``) are enclosed in
rational intervals that can be refined on demand, which is enough to decide
signs of nonzero algebraic numbers exactly.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

import numpy as np

__all__ = [
    "Interval",
    "squarefree_decompose",
    "squarefree_kernel",
    "is_squarefree",
    "is_prime",
    "prime_factors",
    "primes_up_to",
    "next_prime",
    "sqrt_interval",
    "cos2pi_interval",
    "pi_fixed",
    "sqrt_fixed",
    "cos2pi_fixed",
]

_SIEVE_LIMIT = 10**6
_sieve_lock = threading.Lock()
_sieve: np.ndarray | None = None
_prime_list: list[int] | None = None


def _ensure_sieve(limit: int = _SIEVE_LIMIT) -> None:
    global _sieve, _prime_list
    if _sieve is not None and len(_sieve) > limit:
        return
    with _sieve_lock:
        if _sieve is not None and len(_sieve) > limit:
            return
        size = max(limit, _SIEVE_LIMIT) + 1
        flags = np.ones(size, dtype=bool)
        flags[:2] = False
        for q in range(2, isqrt(size - 1) + 1):
            if flags[q]:
                flags[q * q :: q] = False
        _prime_list = np.flatnonzero(flags).tolist()
        _sieve = flags


def primes_up_to(n: int) -> list[int]:
    """All primes ``<= n`` (sieve grows on demand)."""
    _ensure_sieve(n)
    assert _prime_list is not None
    if n >= _prime_list[-1]:
        return list(_prime_list)
    lo, hi = 0, len(_prime_list)
    while lo < hi:
        mid = (lo + hi) // 2
        if _prime_list[mid] <= n:
            lo = mid + 1
        else:
            hi = mid
    return _prime_list[:lo]


def _miller_rabin(n: int) -> bool:
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # deterministic for n < 3.3e24
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    _ensure_sieve()
    assert _sieve is not None and _prime_list is not None
    if n < len(_sieve):
        return bool(_sieve[n])
    if n < _SIEVE_LIMIT**2:
        r = isqrt(n)
        for q in _prime_list:
            if q > r:
                return True
            if n % q == 0:
                return False
        return True
    return _miller_rabin(n)


def next_prime(n: int) -> int:
    """Least prime strictly greater than ``n``."""
    m = max(n + 1, 2)
    while not is_prime(m):
        m += 1
    return m


def prime_factors(n: int) -> dict[int, int]:
    """Factor ``n >= 1`` by trial division against the prime table."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    _ensure_sieve()
    assert _prime_list is not None
    out: dict[int, int] = {}
    for q in _prime_list:
        if q * q > n:
            break
        while n % q == 0:
            out[q] = out.get(q, 0) + 1
            n //= q
    if n > 1:
        if n > _SIEVE_LIMIT**2 and not is_prime(n):
            raise ValueError("integer too large for trial-division factoring")
        out[n] = out.get(n, 0) + 1
    return out


def squarefree_decompose(n: int) -> tuple[int, int]:
    """Return ``(c, d)`` with ``n == c*c*d`` and ``d`` squarefree.

    >>> squarefree_decompose(12)
    (2, 3)
    """
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"squarefree_decompose needs a positive integer, got {n!r}")
    c = d = 1
    for q, e in prime_factors(n).items():
        c *= q ** (e // 2)
        if e % 2:
            d *= q
    return c, d


def squarefree_kernel(n: int) -> int:
    return squarefree_decompose(n)[1]


def is_squarefree(n: int) -> bool:
    return n >= 1 and squarefree_decompose(n)[0] == 1


@dataclass(frozen=True)
class Interval:
    """Closed rational interval ``[lo, hi]``."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def scale(self, c) -> "Interval":
        c = Fraction(c)
        if c >= 0:
            return Interval(c * self.lo, c * self.hi)
        return Interval(c * self.hi, c * self.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        ps = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(ps), max(ps))

    def sign(self) -> int | None:
        """+1 / -1 when the interval excludes zero, 0 for [0, 0], else None."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        if self.lo == self.hi == 0:
            return 0
        return None


# --------------------------------------------------------------------------
# square roots


def sqrt_interval(d: int, eps) -> Interval:
    """Enclosure of ``sqrt(d)`` of width ``<= eps`` with decimal endpoints."""
    if d < 0:
        raise ValueError("sqrt_interval needs d >= 0")
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    r = isqrt(d)
    if r * r == d:
        return Interval(Fraction(r), Fraction(r))
    scale = 1
    while Fraction(1, scale) > eps:
        scale *= 10
    lo = isqrt(d * scale * scale)
    return Interval(Fraction(lo, scale), Fraction(lo + 1, scale))


def sqrt_fixed(d: int, bits: int) -> tuple[int, int]:
    """``(lo, hi)`` with ``lo <= sqrt(d)*2**bits <= hi``."""
    lo = isqrt(d << (2 * bits))
    return lo, lo if lo * lo == d << (2 * bits) else lo + 1


# --------------------------------------------------------------------------
# pi and cosine


def _atan_inv_fixed(x: int, bits: int) -> tuple[int, int]:
    # atan(1/x) * 2**bits as (value, error bound in ulps)
    one = 1 << bits
    total = 0
    power = one // x
    x2 = x * x
    k = 0
    terms = 0
    while power:
        term = power // (2 * k + 1)
        total += -term if k % 2 else term
        power //= x2
        k += 1
        terms += 1
    return total, 2 * terms + 2


@lru_cache(maxsize=64)
def pi_fixed(bits: int) -> tuple[int, int]:
    """``(lo, hi)`` with ``lo <= pi*2**bits <= hi`` (Machin's formula)."""
    guard = 16
    a, ea = _atan_inv_fixed(5, bits + guard)
    b, eb = _atan_inv_fixed(239, bits + guard)
    val = 16 * a - 4 * b
    err = 16 * ea + 4 * eb
    return (val - err) >> guard, -((-(val + err)) >> guard)


def _cos_fixed(x: int, bits: int) -> tuple[int, int]:
    # enclosure of cos(x / 2**bits) * 2**bits for 0 <= x/2**bits <= 2
    one = 1 << bits
    term = one
    total = one
    i = 1
    x2 = x * x
    denom_shift = 2 * bits
    while term:
        term = (term * x2 >> denom_shift) // ((2 * i - 1) * (2 * i))
        total += -term if i % 2 else term
        i += 1
    err = 8 * (i + 2)
    return total - err, total + err


def _reduce_angle(k: int, n: int) -> tuple[Fraction, int]:
    # 2cos(2*pi*k/n) == sign * 2cos(2*pi*r) with r in [0, 1/4]
    r = Fraction(k % n, n)
    if r > Fraction(1, 2):
        r = 1 - r
    sign = 1
    if r > Fraction(1, 4):
        r = Fraction(1, 2) - r
        sign = -1
    return r, sign


_EXACT_COS = {Fraction(0): 2, Fraction(1, 6): 1, Fraction(1, 4): 0}


@lru_cache(maxsize=1 << 16)
def cos2pi_fixed(k: int, n: int, bits: int) -> tuple[int, int]:
    """``(lo, hi)`` enclosing ``2cos(2*pi*k/n) * 2**bits``."""
    if n < 1:
        raise ValueError("n must be positive")
    r, sign = _reduce_angle(k, n)
    if r in _EXACT_COS:
        v = sign * _EXACT_COS[r] << bits
        return v, v
    work = bits + 8
    plo, phi = pi_fixed(work)
    a, b = r.numerator, r.denominator
    t_lo = (2 * plo * a) // b
    t_hi = -((-2 * phi * a) // b)
    # cos is decreasing on [0, pi/2]
    c_lo = _cos_fixed(t_hi, work)[0]
    c_hi = _cos_fixed(t_lo, work)[1]
    lo = (2 * c_lo) >> 8
    hi = -((-2 * c_hi) >> 8)
    if sign < 0:
        lo, hi = -hi, -lo
    return lo, hi


def cos2pi_interval(k: int, n: int, eps) -> Interval:
    """Enclosure of ``2cos(2*pi*k/n)`` of width ``<= eps``."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    # intersect along a fixed precision ladder so that a smaller eps always
    # yields a sub-interval of the coarser answer
    bits = 16
    lo_q = hi_q = None
    while True:
        lo, hi = cos2pi_fixed(k, n, bits)
        lo_f, hi_f = Fraction(lo, 1 << bits), Fraction(hi, 1 << bits)
        lo_q = lo_f if lo_q is None else max(lo_q, lo_f)
        hi_q = hi_f if hi_q is None else min(hi_q, hi_f)
        if hi_q - lo_q <= eps:
            return Interval(lo_q, hi_q)
        bits *= 2


def common_denominator(values) -> int:
    den = 1
    for v in values:
        q = Fraction(v).denominator
        den = den * q // gcd(den, q)
    return den
