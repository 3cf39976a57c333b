"""Arithmetic in the ring of integers of the real cyclotomic field K+_{p^n}.

Elements are integer vectors over the basis ``1, w(1), ..., w(N-1)`` where
``w(k) = z^k + z^-k`` for a primitive ``p^n``-th root of unity ``z`` and
``N = (p-1) p^(n-1) / 2``.  Any ``w(k)`` is rewritten into this basis by
three rules: reflection ``w(p^n - k) = w(k)``, the decay formula for
``w(N)`` and the shifted formula for ``w(N + s)``.

Products go through the Laurent expansion in ``z`` (so that the product rule
``w(k) w(l) = w(k+l) + w(k-l)`` becomes a cyclic convolution) followed by a
vectorised application of the rewrite rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from math import isqrt, log2

import numpy as np

from .numkernel import cos2pi_fixed, is_prime

__all__ = [
    "CycloRing",
    "CycloElem",
    "OmegaCombo",
    "RingMismatch",
    "reduce_omega",
    "cyc_add",
    "cyc_mul",
    "c0_closed_form",
    "c0_split",
    "block_of",
    "parity_criterion",
    "witness_t",
    "cyc_is_totally_positive",
    "cyc_sqrt_exact",
    "embedding_floats",
    "embedding_exponents",
    "block_structure",
    "mod2_square_prediction",
    "cyc_min_poly",
]

_I64_SAFE = 1 << 62


class RingMismatch(ValueError):
    pass


@dataclass(frozen=True)
class CycloRing:
    """``O(K+_{p^n}) = Z[w(1)]`` for a prime ``p = 1 (mod 4)``."""

    p: int
    n: int

    def __post_init__(self):
        if not is_prime(self.p) or self.p % 4 != 1:
            raise ValueError(f"p = {self.p} must be a prime = 1 (mod 4)")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @cached_property
    def M(self) -> int:
        return self.p**self.n

    @cached_property
    def P(self) -> int:
        return self.p ** (self.n - 1)

    @cached_property
    def N(self) -> int:
        return (self.p - 1) * self.P // 2

    @property
    def rank(self) -> int:
        return self.N

    @cached_property
    def H(self) -> int:
        # number of half-Laurent slots: constant plus w(1..(M-1)/2)
        return (self.M + 1) // 2

    def __str__(self):
        return f"cyc:{self.p}^{self.n}"


@dataclass(frozen=True)
class OmegaCombo:
    """``constant + sum terms[i] * w(i)`` with ``1 <= i < N``."""

    constant: int
    terms: dict[int, int] = field(default_factory=dict)

    def vector(self, ring: CycloRing) -> np.ndarray:
        v = np.zeros(ring.N, dtype=np.int64)
        v[0] = self.constant
        for i, c in self.terms.items():
            v[i] += c
        return v


def reduce_omega(ring: CycloRing, k: int) -> OmegaCombo:
    """Rewrite ``w(k)`` for any integer ``k`` in the canonical basis."""
    M, N, P, p = ring.M, ring.N, ring.P, ring.p
    k %= M
    if k > M // 2:
        k = M - k
    if k == 0:
        return OmegaCombo(2, {})
    if k < N:
        return OmegaCombo(0, {k: 1})
    s = k - N
    terms: dict[int, int] = {}
    if s == 0:
        for l in range(1, (p - 3) // 2 + 1):
            terms[l * P] = terms.get(l * P, 0) - 1
        return OmegaCombo(-1, {i: c for i, c in sorted(terms.items()) if c})
    for l in range(0, (p - 3) // 2 + 1):
        terms[l * P + s] = terms.get(l * P + s, 0) - 1
    for l in range(1, (p - 1) // 2 + 1):
        terms[l * P - s] = terms.get(l * P - s, 0) - 1
    return OmegaCombo(0, {i: c for i, c in sorted(terms.items()) if c})


# --------------------------------------------------------------------------
# exact integer convolution


def _maxabs(x: np.ndarray) -> int:
    if x.size == 0:
        return 0
    if x.dtype == object:
        return max(abs(int(v)) for v in x)
    return int(np.max(np.abs(x)))


def _kronecker(x: np.ndarray, y: np.ndarray, bound: int) -> np.ndarray:
    # exact linear convolution via one big-integer product per sign pattern
    L = len(x) + len(y) - 1
    nbytes = max(1, ((2 * bound).bit_length() + 8) // 8)

    def pack(v: np.ndarray) -> int:
        v = v.astype("<u8")
        raw = v.view(np.uint8).reshape(-1, 8)
        if nbytes <= 8:
            raw = raw[:, :nbytes]
        else:
            raw = np.hstack([raw, np.zeros((len(v), nbytes - 8), dtype=np.uint8)])
        return int.from_bytes(np.ascontiguousarray(raw).tobytes(), "little")

    def unpack(z: int) -> np.ndarray:
        raw = np.frombuffer(z.to_bytes(L * nbytes, "little"), dtype=np.uint8).reshape(L, nbytes)
        if nbytes < 8:
            raw = np.hstack([raw, np.zeros((L, 8 - nbytes), dtype=np.uint8)])
        return np.ascontiguousarray(raw[:, :8]).view("<u8").reshape(L).astype(np.int64)

    xp, xn = pack(np.maximum(x, 0)), pack(np.maximum(-x, 0))
    yp, yn = pack(np.maximum(y, 0)), pack(np.maximum(-y, 0))
    return unpack(xp * yp + xn * yn) - unpack(xp * yn + xn * yp)


def exact_convolve(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact full linear convolution of integer vectors."""
    L = len(x) + len(y) - 1
    nx, ny = int(np.count_nonzero(x)), int(np.count_nonzero(y))
    if nx == 0 or ny == 0:
        return np.zeros(L, dtype=np.int64)
    if nx > ny:
        x, y, nx, ny = y, x, ny, nx
    bound = _maxabs(x) * _maxabs(y) * nx
    if bound >= _I64_SAFE:
        return np.convolve(x.astype(object), y.astype(object))
    xi, yi = x.astype(np.int64), y.astype(np.int64)
    if len(x) * len(y) <= 4_000_000:
        return np.convolve(xi, yi)
    if nx * 64 <= len(x):
        out = np.zeros(L, dtype=np.int64)
        for i in np.flatnonzero(xi):
            out[i : i + len(yi)] += xi[i] * yi
        return out
    xf, yf = xi.astype(np.float64), yi.astype(np.float64)
    err = 2.3e-16 * float(np.linalg.norm(xf)) * float(np.linalg.norm(yf)) * (4 * log2(L) + 16)
    if err < 0.05:
        size = 1 << (L - 1).bit_length()
        r = np.fft.irfft(np.fft.rfft(xf, size) * np.fft.rfft(yf, size), size)[:L]
        return np.rint(r).astype(np.int64)
    return _kronecker(xi, yi, bound)


# --------------------------------------------------------------------------
# reduction of half-Laurent vectors


def _reduce_half(ring: CycloRing, h: np.ndarray) -> np.ndarray:
    """Map ``h[0] + sum_{j>=1} h[j] w(j)`` (``j <= (M-1)/2``) to the basis."""
    N, P, p = ring.N, ring.P, ring.p
    if h.dtype != object and _maxabs(h) * p >= _I64_SAFE:
        h = h.astype(object)
    out = np.zeros(N, dtype=h.dtype)
    out[:N] += h[:N]
    top = h[N]
    if top:
        out[0] -= top
        for l in range(1, (p - 3) // 2 + 1):
            out[l * P] -= top
    S = (P - 1) // 2
    if S:
        vals = h[N + 1 : N + 1 + S]
        if np.any(vals):
            rev = vals[::-1]
            for l in range(0, (p - 3) // 2 + 1):
                out[l * P + 1 : l * P + 1 + S] -= vals
            for l in range(1, (p - 1) // 2 + 1):
                out[l * P - S : l * P] -= rev
    return out


def _laurent(ring: CycloRing, v: np.ndarray) -> np.ndarray:
    L = np.zeros(ring.M, dtype=v.dtype)
    L[0] = v[0]
    L[1 : ring.N] = v[1:]
    L[ring.M - ring.N + 1 :] = v[1:][::-1]
    return L


def _half_from_pairs(ring: CycloRing, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product rule applied term by term (for sparse operands)."""
    M, H = ring.M, ring.H
    dtype = object if a.dtype == object or b.dtype == object else np.int64
    h = np.zeros(H, dtype=dtype)
    ia, ib = np.flatnonzero(a), np.flatnonzero(b)
    if len(ia) > len(ib):
        a, b, ia, ib = b, a, ib, ia
    bl = ib[ib > 0]
    bv = b[bl]
    if b[0]:
        np.add.at(h, ia, a[ia] * b[0])
    for k in ia:
        ak = a[k]
        if k == 0:
            np.add.at(h, bl, ak * bv)
            continue
        s = k + bl
        s = np.where(s > M // 2, M - s, s)
        np.add.at(h, s, ak * bv)
        d = np.abs(k - bl)
        # w(0) = 2 lands in the constant slot with weight 2
        w = np.where(d == 0, 2, 1)
        np.add.at(h, d, ak * bv * w)
    return h


@lru_cache(maxsize=1 << 16)
def _reduced_terms(ring: CycloRing, j: int) -> tuple[tuple[int, int], ...]:
    combo = reduce_omega(ring, j)
    out = [(0, combo.constant)] if combo.constant else []
    return tuple(out + list(combo.terms.items()))


def _mul_tiny(ring: CycloRing, a: np.ndarray, b: np.ndarray, ia, ib) -> np.ndarray:
    """Product rule in pure Python, for operands with a handful of terms."""
    M, N = ring.M, ring.N
    acc: dict[int, int] = {}
    bt = [(int(l), int(b[l])) for l in ib]
    for k in ia:
        k, ak = int(k), int(a[k])
        for l, bl in bt:
            c = ak * bl
            if k == 0 or l == 0:
                acc[k + l] = acc.get(k + l, 0) + c
                continue
            s = k + l
            acc[s] = acc.get(s, 0) + c
            d = abs(k - l)
            acc[d] = acc.get(d, 0) + (2 * c if d == 0 else c)
    out = [0] * N
    for j, c in acc.items():
        if not c:
            continue
        if j < N:
            out[j] += c
        else:
            for i, v in _reduced_terms(ring, j if j <= M // 2 else M - j):
                out[i] += v * c
    big = max(map(abs, out)) >= _I64_SAFE
    return np.array(out, dtype=object if big else np.int64)


def _mul_vectors(ring: CycloRing, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ia, ib = np.flatnonzero(a), np.flatnonzero(b)
    na, nb = len(ia), len(ib)
    if na == 0 or nb == 0:
        return np.zeros(ring.N, dtype=np.int64)
    if na * nb <= 64:
        return _mul_tiny(ring, a, b, ia, ib)
    bound = _maxabs(a) * _maxabs(b) * min(na, nb) * 2
    if bound >= _I64_SAFE:
        a, b = a.astype(object), b.astype(object)
    if min(na, nb) <= 12:
        return _reduce_half(ring, _half_from_pairs(ring, a, b))
    full = exact_convolve(_laurent(ring, a), _laurent(ring, b))
    M = ring.M
    cyc = full[:M].copy()
    cyc[: M - 1] += full[M:]
    return _reduce_half(ring, cyc[: ring.H])


def _normalise(v: np.ndarray) -> np.ndarray:
    if v.dtype == object and (v.size == 0 or _maxabs(v) < _I64_SAFE):
        return v.astype(np.int64)
    if v.dtype != object:
        v = v.astype(np.int64, copy=False)
    return v


# --------------------------------------------------------------------------
# elements


class CycloElem:
    """Element ``a_0 + sum_{k=1}^{N-1} a_k w(k)`` of ``O(K+_{p^n})``."""

    __slots__ = ("ring", "_c")

    def __init__(self, ring: CycloRing, coeffs):
        v = np.asarray(coeffs)
        if v.dtype != object:
            v = v.astype(np.int64)
        if v.shape != (ring.N,):
            raise ValueError(f"expected {ring.N} coefficients, got {v.shape}")
        self.ring = ring
        self._c = _normalise(v.copy())
        self._c.flags.writeable = False

    @classmethod
    def zero(cls, ring: CycloRing) -> "CycloElem":
        return cls(ring, np.zeros(ring.N, dtype=np.int64))

    @classmethod
    def constant(cls, ring: CycloRing, c: int) -> "CycloElem":
        v = np.zeros(ring.N, dtype=np.int64)
        v[0] = c
        return cls(ring, v)

    @classmethod
    def omega(cls, ring: CycloRing, k: int, coeff: int = 1) -> "CycloElem":
        return cls(ring, reduce_omega(ring, k).vector(ring) * coeff)

    @classmethod
    def from_sparse(cls, ring: CycloRing, terms: dict[int, int]) -> "CycloElem":
        v = np.zeros(ring.N, dtype=np.int64)
        for i, c in terms.items():
            v[i] += c
        return cls(ring, v)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    def coeff_list(self) -> list[int]:
        return [int(c) for c in self._c]

    def __getitem__(self, k: int) -> int:
        return int(self._c[k])

    @property
    def c0(self) -> int:
        return int(self._c[0])

    def is_zero(self) -> bool:
        return not np.any(self._c)

    def nonzero(self) -> dict[int, int]:
        return {int(i): int(self._c[i]) for i in np.flatnonzero(self._c)}

    def _check(self, other: "CycloElem"):
        if not isinstance(other, CycloElem):
            raise TypeError(f"cannot combine CycloElem with {type(other).__name__}")
        if other.ring != self.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")

    def _coerce(self, other):
        if isinstance(other, int):
            return CycloElem.constant(self.ring, other)
        return other

    def __add__(self, other):
        other = self._coerce(other)
        self._check(other)
        a, b = self._c, other._c
        if a.dtype != object and _maxabs(a) + _maxabs(b) >= _I64_SAFE:
            a = a.astype(object)
        return CycloElem(self.ring, a + b)

    __radd__ = __add__

    def __neg__(self):
        return CycloElem(self.ring, -self._c)

    def __sub__(self, other):
        other = self._coerce(other)
        self._check(other)
        return self + (-other)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            a = self._c
            if a.dtype != object and _maxabs(a) * abs(other) >= _I64_SAFE:
                a = a.astype(object)
            return CycloElem(self.ring, a * other)
        self._check(other)
        return CycloElem(self.ring, _mul_vectors(self.ring, self._c, other._c))

    __rmul__ = __mul__

    def square(self) -> "CycloElem":
        return self * self

    def __pow__(self, e: int) -> "CycloElem":
        if e < 0:
            raise ValueError("negative powers are not supported")
        out = CycloElem.constant(self.ring, 1)
        base = self
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out

    def __eq__(self, other):
        if isinstance(other, int):
            other = CycloElem.constant(self.ring, other)
        if not isinstance(other, CycloElem):
            return NotImplemented
        return self.ring == other.ring and bool(np.all(self._c == other._c))

    def __hash__(self):
        return hash((self.ring, tuple(self.coeff_list())))

    def __repr__(self):
        return f"CycloElem({self.ring}, {str(self)!r})"

    def __str__(self):
        parts = []
        for i, c in self.nonzero().items():
            mag = abs(c)
            if i == 0:
                body = str(mag)
            elif mag == 1:
                body = f"w({i})"
            else:
                body = f"{mag}*w({i})"
            parts.append(("-" if c < 0 else "+", body))
        if not parts:
            return "0"
        out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for s, b in parts[1:]:
            out += f" {s} {b}"
        return out


def cyc_add(a: CycloElem, b: CycloElem) -> CycloElem:
    return a + b


def cyc_mul(a: CycloElem, b: CycloElem) -> CycloElem:
    return a * b


# --------------------------------------------------------------------------
# constant coefficient of squares


def _pairs(ring: CycloRing) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs ``k > l >= 1`` with ``k + l`` in ``{N, N + P}``."""
    N, P = ring.N, ring.P
    k1 = np.arange(N // 2 + 1, N)
    l1 = N - k1
    k2 = np.arange((N + P) // 2 + 1, N)
    l2 = N + P - k2
    return np.concatenate([k1, k2]), np.concatenate([l1, l2])


def block_of(ring: CycloRing, j):
    """Block index ``k`` in ``0..(P-1)/2`` with ``j = +-k (mod P)``."""
    r = np.asarray(j) % ring.P
    return np.minimum(r, ring.P - r) if ring.P > 1 else np.zeros_like(r)


def _as_int_vector(a: CycloElem) -> np.ndarray:
    c = a.coeffs
    if c.dtype != object and _maxabs(c) ** 2 * 4 * len(c) >= _I64_SAFE:
        c = c.astype(object)
    return c


def c0_closed_form(a: CycloElem) -> int:
    """``C_0(a^2)`` from the coordinates of ``a`` without multiplying."""
    ring = a.ring
    c = _as_int_vector(a)
    head = c[: min(ring.P, ring.N - 1) + 1]
    k, l = _pairs(ring)
    diff = c[k] - c[l]
    return int((head * head).sum()) + int((diff * diff).sum())


def c0_split(a: CycloElem) -> list[int]:
    """Blocks ``A_0, ..., A_{(P-1)/2}`` of ``C_0(a^2)``."""
    ring = a.ring
    c = _as_int_vector(a)
    nblocks = (ring.P - 1) // 2 + 1
    out = np.zeros(nblocks, dtype=object if c.dtype == object else np.int64)
    idx = np.arange(min(ring.P, ring.N - 1) + 1)
    np.add.at(out, block_of(ring, idx), c[idx] * c[idx])
    k, l = _pairs(ring)
    diff = c[k] - c[l]
    np.add.at(out, block_of(ring, k), diff * diff)
    return [int(v) for v in out]


@lru_cache(maxsize=32)
def block_structure(ring: CycloRing) -> list[tuple[tuple[int, ...], tuple[tuple[Fraction, ...], ...]]]:
    """Per block: its coordinate indices and the Gram matrix of ``x -> C_0(x^2)``.

    The form ``x -> C_0(x^2)`` is block diagonal with these blocks.
    """
    N, P = ring.N, ring.P
    nblocks = (P - 1) // 2 + 1
    members: list[list[int]] = [[] for _ in range(nblocks)]
    for j, b in enumerate(block_of(ring, np.arange(N)).tolist()):
        members[b].append(j)
    pos = {}
    for b, js in enumerate(members):
        for t, j in enumerate(js):
            pos[j] = (b, t)
    grams = [[[0] * len(js) for _ in js] for js in members]
    for j in range(min(P, N - 1) + 1):
        b, t = pos[j]
        grams[b][t][t] += 1
    ks, ls = _pairs(ring)
    for k, l in zip(ks.tolist(), ls.tolist()):
        b, t = pos[k]
        _, u = pos[l]
        g = grams[b]
        g[t][t] += 1
        g[u][u] += 1
        g[t][u] -= 1
        g[u][t] -= 1
    return [
        (tuple(js), tuple(tuple(Fraction(x) for x in row) for row in g))
        for js, g in zip(members, grams)
    ]


def mod2_square_prediction(a: CycloElem) -> CycloElem:
    """``a_0^2 + sum a_k^2 w(2k)`` reduced; congruent to ``a^2`` mod 2."""
    ring = a.ring
    c = _as_int_vector(a)
    h = np.zeros(ring.H, dtype=c.dtype)
    h[0] = c[0] * c[0]
    ks = np.arange(1, ring.N)
    s = 2 * ks
    s = np.where(s > ring.M // 2, ring.M - s, s)
    np.add.at(h, s, c[1:] * c[1:])
    return CycloElem(ring, _reduce_half(ring, h))


def parity_criterion(a: CycloElem, k: int) -> bool:
    """Exactly one of ``a_{p^k}`` and ``a_{(p-1)/4 p^(n-1) + p^k}`` is odd.

    This predicts the parity of ``C_{2p^k}(a^2)``.
    """
    ring = a.ring
    if k < 0 or 2 * ring.p**k >= ring.N:
        raise IndexError(f"2*p^{k} is not a basis index of {ring}")
    i = ring.p**k
    j = (ring.p - 1) // 4 * ring.P + i
    return (int(a.coeffs[i]) % 2) != (int(a.coeffs[j]) % 2)


def witness_t(ring: CycloRing, m: int) -> CycloElem:
    """``t_m = sum_{k=n-m}^{n-3} w(p^k)^2`` inside ``K+_{p^n}``."""
    if not 3 <= m <= ring.n:
        raise ValueError(f"need 3 <= m <= n = {ring.n}")
    out = np.zeros(ring.N, dtype=np.int64)
    for k in range(ring.n - m, ring.n - 2):
        # w(j)^2 = w(2j) + 2
        out += reduce_omega(ring, 2 * ring.p**k).vector(ring)
        out[0] += 2
    return CycloElem(ring, out)


# --------------------------------------------------------------------------
# embeddings and total positivity


@lru_cache(maxsize=32)
def embedding_exponents(ring: CycloRing) -> np.ndarray:
    """``j`` in ``1..(M-1)/2`` prime to ``p``; ``w(k) -> 2cos(2 pi j k / M)``."""
    j = np.arange(1, ring.M // 2 + 1)
    return j[j % ring.p != 0]


def embedding_floats(a: CycloElem) -> np.ndarray:
    ring = a.ring
    lv = _laurent(ring, a.coeffs.astype(np.float64))
    return np.fft.fft(lv).real[embedding_exponents(ring)]


@lru_cache(maxsize=8)
def _cos_table(M: int, bits: int) -> tuple[list[int], list[int]]:
    lo, hi = [], []
    for i in range(M // 2 + 1):
        a, b = cos2pi_fixed(i, M, bits)
        lo.append(a)
        hi.append(b)
    return lo, hi


def _embedding_sign(ring: CycloRing, terms: dict[int, int], j: int) -> int:
    M = ring.M
    bits = 64
    while True:
        lo_t, hi_t = _cos_table(M, bits)
        lo = hi = 0
        for k, c in terms.items():
            if k == 0:
                lo += c << bits
                hi += c << bits
                continue
            r = j * k % M
            r = min(r, M - r)
            if c > 0:
                lo += c * lo_t[r]
                hi += c * hi_t[r]
            else:
                lo += c * hi_t[r]
                hi += c * lo_t[r]
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        if bits > 4096:
            raise ArithmeticError("embedding sign not resolved")
        bits *= 2


def cyc_is_totally_positive(a: CycloElem) -> bool:
    if a.is_zero():
        return False
    ring = a.ring
    terms = a.nonzero()
    exps = embedding_exponents(ring)
    approx = embedding_floats(a)
    # look first where a float pass says negative; certify with intervals
    for idx in np.argsort(approx):
        if _embedding_sign(ring, terms, int(exps[idx])) < 0:
            return False
    return True


# --------------------------------------------------------------------------
# exact square roots


@lru_cache(maxsize=32)
def _split_prime_data(ring: CycloRing, count: int = 24):
    """Evaluation vectors of a few degree-one primes above ``l = 1 (mod M)``."""
    M, N = ring.M, ring.N
    ell = M + 1
    while not is_prime(ell):
        ell += M
    h = 2
    while True:
        g = pow(h, (ell - 1) // M, ell)
        if pow(g, M // ring.p, ell) != 1:
            break
        h += 1
    exps = [int(j) for j in embedding_exponents(ring)[:count]]
    rows = []
    ks = np.arange(N)
    for j in exps:
        gj = pow(g, j, ell)
        pw = [pow(gj, int(k), ell) for k in ks]
        row = [(x + pow(x, ell - 2, ell)) % ell if x else 0 for x in pw]
        row[0] = 1
        rows.append(row)
    return ell, np.array(rows, dtype=np.int64)


def _split_filter(a: CycloElem) -> bool:
    """False if ``a`` is certainly not a square (a residue symbol is -1)."""
    ell, rows = _split_prime_data(a.ring)
    c = a.coeffs
    if c.dtype == object:
        c = np.array([int(x) % ell for x in c], dtype=np.int64)
    else:
        c = c % ell
    if ell * ell * a.ring.N < _I64_SAFE:
        vals = (rows @ c) % ell
    else:
        vals = np.array([int(np.dot(r.astype(object), c.astype(object))) % ell for r in rows])
    return all(not v or pow(int(v), (ell - 1) // 2, ell) == 1 for v in vals.tolist())


@lru_cache(maxsize=32)
def _inert_prime(ring: CycloRing) -> int:
    """Least odd prime that generates ``(Z/M)^*``; it stays prime in ``O``."""
    p = ring.p
    q = 3
    while True:
        if q != p and is_prime(q) and _is_primitive_root(q, p, ring.n):
            return q
        q += 2


def _is_primitive_root(g: int, p: int, n: int) -> bool:
    phi = p - 1
    fac = set()
    m = phi
    d = 2
    while d * d <= m:
        while m % d == 0:
            fac.add(d)
            m //= d
        d += 1
    if m > 1:
        fac.add(m)
    if any(pow(g, phi // f, p) == 1 for f in fac):
        return False
    return n == 1 or pow(g, p - 1, p * p) != 1


@lru_cache(maxsize=32)
def _gram_inverse_diagonal(ring: CycloRing) -> np.ndarray:
    """Diagonal of the inverse Gram matrix, one entry per coordinate."""
    out = [Fraction(0)] * ring.N
    cache: dict = {}
    for js, g in block_structure(ring):
        if g not in cache:
            cache[g] = _inverse_diag(g)
        for j, v in zip(js, cache[g]):
            out[j] = v
    return np.array(out, dtype=object)


def _inverse_diag(g) -> list[Fraction]:
    n = len(g)
    a = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(g)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n + i] for i in range(n)]


def coefficient_bound(ring: CycloRing, c0: int) -> int:
    """Bound on ``|b_i|`` for any ``b`` with ``C_0(b^2) <= c0``."""
    best = max(_gram_inverse_diagonal(ring))
    return isqrt(int(best * c0))


def _mulmod(ring, x, y, mod):
    return _mul_vectors(ring, x, y) % mod


def _powmod(ring, x, e, mod, one):
    result = one
    base = x
    while e:
        if e & 1:
            result = _mulmod(ring, result, base, mod)
        e >>= 1
        if e:
            base = _mulmod(ring, base, base, mod)
    return result


def _fq_sqrt(ring: CycloRing, a: np.ndarray, q: int) -> np.ndarray | None:
    """Square root of ``a`` in ``O/q = F_{q^N}`` (Tonelli-Shanks)."""
    one = np.zeros(ring.N, dtype=np.int64)
    one[0] = 1
    Q = q**ring.N
    t, s = Q - 1, 0
    while t % 2 == 0:
        t //= 2
        s += 1

    def is_one(x):
        return bool(np.all(x == one))

    def sq_times(x, times):
        for _ in range(times):
            x = _mulmod(ring, x, x, q)
        return x

    at = _powmod(ring, a, t, q, one)
    if not is_one(sq_times(at, s - 1)):
        return None
    minus_one = (q - one) % q
    c = 0
    while True:
        z = one.copy()
        z[0] = c % q
        if ring.N > 1:
            z[1] = 1
        zt = _powmod(ring, z, t, q, one)
        if np.all(sq_times(zt, s - 1) == minus_one):
            break
        c += 1
    m, cc, tt = s, zt, at
    r = _powmod(ring, a, (t + 1) // 2, q, one)
    while not is_one(tt):
        i, t2 = 0, tt
        while not is_one(t2):
            t2 = _mulmod(ring, t2, t2, q)
            i += 1
        b = sq_times(cc, m - i - 1)
        m = i
        cc = _mulmod(ring, b, b, q)
        tt = _mulmod(ring, tt, cc, q)
        r = _mulmod(ring, r, b, q)
    return r


def _sign_normalise(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(v)
    if len(nz) and v[nz[0]] < 0:
        return -v
    return v


def cyc_sqrt_exact(a: CycloElem) -> CycloElem | None:
    """``b`` with ``b*b == a`` (first nonzero coefficient positive), or ``None``.

    Works modulo a prime ``q`` that stays inert in the ring: the square root
    in ``F_{q^N}`` is unique up to sign, is Hensel-lifted past the a-priori
    coefficient bound and then checked by exact squaring.
    """
    ring = a.ring
    if a.is_zero():
        return a
    if c0_value(a) <= 0 or not _split_filter(a):
        return None
    q = _inert_prime(ring)
    coeffs = np.array([int(x) for x in a.coeffs], dtype=object)
    scale = 1
    while all(int(x) % q == 0 for x in coeffs):
        if any(int(x) % (q * q) for x in coeffs):
            return None
        coeffs = coeffs // (q * q)
        scale *= q
    target = CycloElem(ring, coeffs)
    am = np.array([int(x) % q for x in coeffs], dtype=np.int64)
    r = _fq_sqrt(ring, am, q)
    if r is None:
        return None
    bound = coefficient_bound(ring, c0_value(target))
    e = 1
    while q**e <= 2 * bound:
        e += 1
    # Newton on x^2 = a together with inv ~ 1/(2x)
    one = np.zeros(ring.N, dtype=np.int64)
    one[0] = 1
    Q = q**ring.N
    x = r
    inv = _powmod(ring, (2 * x) % q, Q - 2, q, one)
    k = 1
    tv = target.coeffs
    while k < e:
        k2 = min(2 * k, e)
        mod = q**k2
        x = x.astype(object) if mod * mod * ring.M >= _I64_SAFE else x
        err = (_mul_vectors(ring, x, x) - tv) % mod
        x = (x - _mulmod(ring, err, inv, mod)) % mod
        two_x = (2 * x) % mod
        inv = (2 * inv - _mulmod(ring, inv, _mulmod(ring, two_x, inv, mod), mod)) % mod
        k = k2
    mod = q**e
    x = np.array([int(v) % mod for v in x], dtype=object)
    x = np.where(x > mod // 2, x - mod, x)
    cand = CycloElem(ring, x)
    if cand * cand != target:
        return None
    return CycloElem(ring, _sign_normalise(cand.coeffs * scale))


def c0_value(a: CycloElem) -> int:
    """The constant coordinate ``C_0(a)``."""
    return int(a.coeffs[0])


def cyc_min_poly(a: CycloElem) -> list[int]:
    """Monic minimal polynomial of ``a``, integer coefficients highest degree first.

    The distinct conjugates are read off the float embeddings; the rounded
    product is accepted only after checking ``f(a) = 0`` exactly.
    """
    vals = np.sort(embedding_floats(a))
    roots = [float(vals[0])]
    for v in vals[1:]:
        if v - roots[-1] > 1e-7 * max(1.0, abs(v)):
            roots.append(float(v))
    coeffs = np.poly(np.array(roots))
    if np.max(np.abs(coeffs)) > 2.0**50:
        raise ArithmeticError("minimal polynomial coefficients exceed double precision")
    poly = [int(round(c)) for c in coeffs]
    acc = CycloElem.zero(a.ring)
    for c in poly:
        acc = acc * a + c
    if not acc.is_zero():
        raise ArithmeticError("minimal polynomial could not be certified at double precision")
    return poly
