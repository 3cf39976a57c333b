"""Minimal sums of squares by exhaustive branch and bound.

Everything runs in integral coordinates over a ring adapter.  The positive
definite form ``q(x) = C0(x^2)`` bounds every square that can occur in a
representation of a target ``t``: ``q(a_i) <= C0(t)`` because ``C0`` is
additive and positive on nonzero squares.  Candidates below that bound come
from an exact Fincke-Pohst enumeration; the search then subtracts squares in
non-increasing ``q`` order with iterative deepening on the length.
"""

from __future__ import annotations

import bisect
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import Sequence

import numpy as np

from . import cyclo as cy
from . import multiquad as mq
from .numkernel import squarefree_kernel

__all__ = [
    "CapacityExceeded",
    "RingAdapter",
    "MultiQuadRing",
    "CycloAdapter",
    "integer_ring",
    "tower_ring",
    "quadratic_order",
    "fincke_pohst",
    "enumerate_bounded",
    "enumerate_coords",
    "SosQuery",
    "SosResult",
    "min_squares",
    "pythagoras_profile",
    "ProfileResult",
    "not_sum_of_two_squares_cyclo",
    "DEFAULT_LIMIT",
]

DEFAULT_LIMIT = 10**7


class CapacityExceeded(RuntimeError):
    pass


# --------------------------------------------------------------------------
# ring adapters


class RingAdapter:
    """Integral coordinates, the form ``q`` and total positivity for one ring."""

    name: str
    rank: int

    def blocks(self) -> list[tuple[tuple[int, ...], tuple[tuple[Fraction, ...], ...]]]:
        raise NotImplementedError

    def gram(self) -> list[list[Fraction]]:
        g = [[Fraction(0)] * self.rank for _ in range(self.rank)]
        for idx, block in self.blocks():
            for a, i in enumerate(idx):
                for b, j in enumerate(idx):
                    g[i][j] = block[a][b]
        return g

    def c0(self, x: np.ndarray) -> Fraction:
        raise NotImplementedError

    def square(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def tp_hint(self, x: np.ndarray) -> int:
        """+1 certainly totally positive, -1 certainly not, 0 undecided."""
        return 0

    def is_tp(self, x: np.ndarray) -> bool:
        raise NotImplementedError

    def sqrt_coords(self, x: np.ndarray):
        """Sign-normalised square root, ``None``, or ``NotImplemented`` (use a table)."""
        return NotImplemented

    def coords(self, elem) -> np.ndarray:
        raise NotImplementedError

    def element(self, x: np.ndarray):
        raise NotImplementedError

    def q(self, x: np.ndarray) -> Fraction:
        return self.c0(self.square(x))

    def totally_positive(self, x: np.ndarray) -> bool:
        h = self.tp_hint(x)
        return h > 0 if h else self.is_tp(x)

    def __getstate__(self):
        return self.__dict__

    def __setstate__(self, state):
        self.__dict__.update(state)


def _float_sign_hint(vals: np.ndarray, err: np.ndarray) -> int:
    if np.any(vals < -err):
        return -1
    if np.all(vals > err):
        return 1
    return 0


class MultiQuadRing(RingAdapter):
    """The order spanned by a list of multiquadratic basis elements.

    The span must be closed under multiplication; the structure constants
    are integral and computed once.
    """

    def __init__(self, basis: Sequence[mq.MultiQuadElem], name: str):
        self.name = name
        self.basis = list(basis)
        self.rank = len(self.basis)
        keys = sorted({d for b in self.basis for d in b.keys()} | {1})
        if len(keys) != self.rank:
            raise ValueError("basis does not span the multiquadratic field of its radicals")
        self.keys = keys
        A = [[b.coefficient(d) for d in keys] for b in self.basis]
        self._inv = _invert(A)
        r = self.rank
        T = np.zeros((r, r, r), dtype=np.int64)
        for i in range(r):
            for j in range(i, r):
                T[i, j] = T[j, i] = self._coords_exact(self.basis[i] * self.basis[j])
        self._T = T
        nts = [mq.normalized_trace(b) for b in self.basis]
        den = 1
        for v in nts:
            den = den * v.denominator // gcd(den, v.denominator)
        self._c0_den = den
        self._c0_num = np.array([int(v * den) for v in nts], dtype=np.int64)
        probe = mq.MultiQuadElem({d: 1 for d in keys})
        tables = mq._embedding_sign_tables(probe)
        E = np.array(
            [[sum(float(b.coefficient(d)) * t[d] * float(np.sqrt(d)) for d in keys) for t in tables] for b in self.basis]
        )
        self._E = E
        self._absE = np.abs(E)
        gram = [[mq.normalized_trace(bi * bj) for bj in self.basis] for bi in self.basis]
        self._blocks = [(tuple(range(r)), tuple(tuple(row) for row in gram))]

    def _coords_exact(self, x: mq.MultiQuadElem) -> list[int]:
        vec = [x.coefficient(d) for d in self.keys]
        if any(d not in self.keys for d in x.keys()):
            raise mq.NotInTower(f"{x} does not lie in {self.name}")
        out = []
        for j in range(self.rank):
            v = sum(vec[i] * self._inv[i][j] for i in range(self.rank))
            if v.denominator != 1:
                raise mq.NotIntegral(f"{x} is not in the order {self.name}")
            out.append(int(v))
        return out

    def blocks(self):
        return self._blocks

    def c0(self, x):
        return Fraction(int(x @ self._c0_num), self._c0_den)

    def square(self, x):
        return np.einsum("i,j,ijk->k", x, x, self._T)

    def tp_hint(self, x):
        xf = x.astype(np.float64)
        vals = xf @ self._E
        err = (np.abs(xf) @ self._absE) * 1e-12 + 1e-300
        return _float_sign_hint(vals, err)

    def is_tp(self, x):
        return mq.is_totally_positive(self.element(x))

    def coords(self, elem):
        return np.array(self._coords_exact(mq.MultiQuadElem.coerce(elem)), dtype=np.int64)

    def element(self, x):
        out = mq.MultiQuadElem()
        for c, b in zip(x.tolist(), self.basis):
            if c:
                out = out + b * c
        return out


def _invert(A: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(A)
    a = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular basis matrix")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [u - f * w for u, w in zip(a[r], a[col])]
    return [row[n:] for row in a]


def integer_ring() -> MultiQuadRing:
    return MultiQuadRing([mq.MultiQuadElem.rational(1)], "int")


def tower_ring(primes: Sequence[int]) -> MultiQuadRing:
    tower = mq.PrimeTower(tuple(primes))
    return MultiQuadRing(tower.basis(), "mq:" + ",".join(map(str, tower.primes)))


def quadratic_order(d: int) -> MultiQuadRing:
    """``Z[sqrt(d)]`` with basis ``1, sqrt(d)``."""
    if d < 2 or squarefree_kernel(d) != d:
        raise ValueError(f"quad:{d} needs a squarefree d >= 2")
    return MultiQuadRing([mq.MultiQuadElem.rational(1), mq.MultiQuadElem.sqrt(d)], f"quad:{d}")


class CycloAdapter(RingAdapter):
    def __init__(self, ring: cy.CycloRing):
        self.ring = ring
        self.name = str(ring)
        self.rank = ring.N

    def blocks(self):
        return cy.block_structure(self.ring)

    def c0(self, x):
        return Fraction(int(x[0]))

    def square(self, x):
        return cy.cyc_mul(cy.CycloElem(self.ring, x), cy.CycloElem(self.ring, x)).coeffs

    def tp_hint(self, x):
        vals = cy.embedding_floats(cy.CycloElem(self.ring, x))
        err = np.full(vals.shape, 1e-10 * (2.0 * float(np.abs(x.astype(np.float64)).sum()) + 1.0))
        return _float_sign_hint(vals, err)

    def is_tp(self, x):
        return cy.cyc_is_totally_positive(cy.CycloElem(self.ring, x))

    def sqrt_coords(self, x):
        root = cy.cyc_sqrt_exact(cy.CycloElem(self.ring, x))
        return None if root is None else np.asarray(root.coeffs, dtype=np.int64)

    def coords(self, elem):
        if not isinstance(elem, cy.CycloElem) or elem.ring != self.ring:
            raise cy.RingMismatch(f"expected an element of {self.ring}")
        return np.asarray(elem.coeffs)

    def element(self, x):
        return cy.CycloElem(self.ring, x)


# --------------------------------------------------------------------------
# enumeration


def _ldl(gram) -> tuple[list[Fraction], list[list[Fraction]]]:
    """``q(x) = sum_i d_i (x_i + sum_{j>i} mu_ij x_j)^2``."""
    n = len(gram)
    Q = [[Fraction(v) for v in row] for row in gram]
    d = [Fraction(0)] * n
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        d[i] = Q[i][i]
        if d[i] <= 0:
            raise ValueError("Gram matrix is not positive definite")
        for j in range(i + 1, n):
            mu[i][j] = Q[i][j] / d[i]
        for j in range(i + 1, n):
            for k in range(i + 1, n):
                Q[j][k] -= mu[i][j] * Q[i][k]
    return d, mu


def fincke_pohst(gram, B, limit: int = DEFAULT_LIMIT) -> list[tuple[tuple[int, ...], Fraction]]:
    """All nonzero integer ``x`` with ``x^T G x <= B`` (both signs), with ``q(x)``.

    Every range is computed exactly from the rational LDL^T factorisation.
    """
    B = Fraction(B)
    n = len(gram)
    if B < 0 or n == 0:
        return []
    d, mu = _ldl(gram)
    x = [0] * n
    out: list[tuple[tuple[int, ...], Fraction]] = []

    def rec(i: int, R: Fraction):
        c = -sum((mu[i][j] * x[j] for j in range(i + 1, n) if x[j]), Fraction(0))
        t = R / d[i]
        cn, cd = c.numerator, c.denominator
        S = isqrt(t.numerator * cd * cd // t.denominator)
        lo = -((S - cn) // cd)
        hi = (cn + S) // cd
        for v in range(lo, hi + 1):
            x[i] = v
            rem = R - d[i] * (v - c) ** 2
            if i == 0:
                if any(x):
                    out.append((tuple(x), B - rem))
                    if len(out) > limit:
                        raise CapacityExceeded(f"more than {limit} lattice points with q <= {B}")
            else:
                rec(i - 1, rem)
        x[i] = 0

    rec(n - 1, B)
    return out


def enumerate_coords(ring: RingAdapter, B, limit: int = DEFAULT_LIMIT) -> list[tuple[tuple[int, ...], Fraction]]:
    """One coordinate vector per +- pair with ``0 < q <= B``, sorted by (q, coords)."""
    B = Fraction(B)
    if B < 0:
        raise ValueError("B must be >= 0")
    blocks = ring.blocks()
    cache: dict = {}
    per_block = []
    for idx, g in blocks:
        key = g
        if key not in cache:
            pts = fincke_pohst(g, B, limit)
            pts.sort(key=lambda t: t[1])
            cache[key] = pts
        per_block.append((idx, cache[key]))
    if len(per_block) == 1:
        pts = [(x, q) for x, q in per_block[0][1] if _first_nonzero_positive(x)]
        pts.sort(key=lambda t: (t[1], t[0]))
        return pts
    # combine blocks: a vector (or zero) per block within the budget; every
    # combination is emitted once, at the node where its last block is chosen
    rank = ring.rank
    order = sorted(range(len(per_block)), key=lambda b: min(per_block[b][0]))
    # integer arithmetic on q * D inside the hot loop
    D = B.denominator
    for _, pts in per_block:
        for _, qv in pts:
            D = D * qv.denominator // gcd(D, qv.denominator)
    lists = []
    for b in order:
        idx = per_block[b][0]
        entries = []
        for vec, qv in per_block[b][1]:
            first = next(k for k, v in enumerate(vec) if v)
            entries.append((vec, int(qv * D), idx[first], vec[first] > 0))
        lists.append((idx, entries))
    qmins = [ent[0][1] if ent else None for _, ent in lists]
    out: list[tuple[tuple[int, ...], Fraction]] = []
    x = [0] * rank
    chosen: list[tuple[int, bool]] = []

    def rec(pos: int, budget: int, acc: int):
        if chosen and min(chosen)[1]:
            out.append((tuple(x), acc))
            if len(out) > limit:
                raise CapacityExceeded(f"more than {limit} lattice points with q <= {B}")
        for b in range(pos, len(lists)):
            qmin = qmins[b]
            if qmin is None or qmin > budget:
                continue
            idx, entries = lists[b]
            for vec, qv, first, positive in entries:
                if qv > budget:
                    break
                for i, v in zip(idx, vec):
                    x[i] = v
                chosen.append((first, positive))
                rec(b + 1, budget - qv, acc + qv)
                chosen.pop()
            for i in idx:
                x[i] = 0

    rec(0, int(B * D), 0)
    out = [(v, Fraction(a, D)) for v, a in out]
    out.sort(key=lambda t: (t[1], t[0]))
    return out


def _first_nonzero_positive(x) -> bool:
    for v in x:
        if v:
            return v > 0
    return False


def enumerate_bounded(ring: RingAdapter, B, limit: int = DEFAULT_LIMIT) -> list:
    """Elements with ``0 < C0(x^2) <= B``, one per sign, by increasing ``q``."""
    return [ring.element(np.array(x, dtype=np.int64)) for x, _ in enumerate_coords(ring, B, limit)]


# --------------------------------------------------------------------------
# branch and bound


@dataclass(frozen=True)
class SosQuery:
    ring: RingAdapter
    target: object
    cap: int


@dataclass
class SosResult:
    found: bool
    length: int | None
    certificate: list = field(default_factory=list)
    cap: int = 0
    nodes: int = 0
    candidates: int = 0
    ms: float = 0.0

    @property
    def status(self) -> str:
        return "found" if self.found else "not_representable"


class _Search:
    def __init__(self, ring: RingAdapter, target: np.ndarray, cands, node_limit: int):
        self.ring = ring
        self.target = target
        # non-increasing q, ties by coordinates
        cands = sorted(cands, key=lambda t: (-t[1], t[0]))
        X = np.array([x for x, _ in cands], dtype=np.int64).reshape(len(cands), ring.rank)
        self.X = X.astype(np.int8) if X.size and np.abs(X).max() < 128 else X
        self.qs = [q for _, q in cands]
        self.neg_qs = [-q for q in self.qs]
        self.qmin = min(self.qs) if self.qs else None
        self.node_limit = node_limit
        self._sq: dict[int, np.ndarray] = {}
        self._sqmap: dict[bytes, int] | None = None

    def root_coords(self, i: int) -> np.ndarray:
        return self.X[i].astype(np.int64)

    def square(self, i: int) -> np.ndarray:
        s = self._sq.get(i)
        if s is None:
            if len(self._sq) > 200_000:
                self._sq.clear()
            s = self._sq[i] = self.ring.square(self.root_coords(i))
        return s

    def index_of(self, x: np.ndarray) -> int | None:
        key = (-self.ring.q(x), tuple(int(v) for v in x))
        n = len(self.qs)
        i = bisect.bisect_left(range(n), key, key=lambda j: (self.neg_qs[j], tuple(int(v) for v in self.X[j])))
        if i < n and np.array_equal(self.X[i], x):
            return i
        return None

    def square_index(self, r: np.ndarray) -> int | None:
        """Index of the candidate whose square is ``r``."""
        root = self.ring.sqrt_coords(r)
        if root is not NotImplemented:
            return None if root is None else self.index_of(root)
        if self._sqmap is None:
            self._sqmap = {self.square(i).tobytes(): i for i in range(len(self.qs))}
        return self._sqmap.get(r.tobytes())

    def window(self, c: Fraction, L: int, start: int) -> range:
        """Candidate indices ``i >= start`` with ``c/L <= q_i <= c - (L-1) qmin``."""
        top = c - (L - 1) * self.qmin
        lo = bisect.bisect_left(self.neg_qs, -top)
        hi = bisect.bisect_right(self.neg_qs, -(c / L))
        return range(max(lo, start), hi)

    def dfs(self, r: np.ndarray, L: int, start: int, memo: dict, stats: list) -> list[int] | None:
        stats[0] += 1
        if stats[0] > self.node_limit:
            raise CapacityExceeded(f"search exceeded {self.node_limit} nodes")
        if not r.any():
            return [] if L == 0 else None
        if L == 0:
            return None
        if L == 1:
            j = self.square_index(r)
            return [j] if j is not None and j >= start else None
        key = (r.tobytes(), L)
        seen = memo.get(key)
        if seen is not None and seen <= start:
            return None
        c = self.ring.c0(r)
        idx = self.window(c, L, start)
        if len(idx) and self.ring.totally_positive(r):
            for i in idx:
                res = self.dfs(r - self.square(i), L - 1, i, memo, stats)
                if res is not None:
                    return [i] + res
        memo[key] = start if seen is None else min(seen, start)
        return None

    def root(self, i: int, L: int) -> tuple[list[int] | None, int]:
        stats = [1]
        res = self.dfs(self.target - self.square(i), L - 1, i, {}, stats)
        return (None if res is None else [i] + res), stats[0]

    def root_indices(self, L: int) -> range:
        c = self.ring.c0(self.target)
        return self.window(c, L, 0)


_WORKER: _Search | None = None


def _init_worker(search: _Search):
    global _WORKER
    _WORKER = search


def _run_root(args):
    i, L = args
    assert _WORKER is not None
    return _WORKER.root(i, L)


def min_squares(
    query: SosQuery, workers: int = 1, limit: int = DEFAULT_LIMIT, node_limit: int = DEFAULT_LIMIT
) -> SosResult:
    """Least number of nonzero squares summing to ``query.target`` (up to ``cap``).

    The certificate lists the square roots by non-increasing ``C0`` of their
    squares.  Output (including node counts) does not depend on ``workers``.
    """
    t0 = time.perf_counter()
    ring, cap = query.ring, query.cap
    if cap < 0:
        raise ValueError("cap must be >= 0")
    t = ring.coords(query.target)

    def done(found, length, cert, nodes, ncands):
        return SosResult(found, length, cert, cap, nodes, ncands, (time.perf_counter() - t0) * 1000)

    if not t.any():
        return done(True, 0, [], 1, 0)
    if not ring.totally_positive(t):
        return done(False, None, [], 1, 0)
    cands = enumerate_coords(ring, ring.c0(t), limit)
    search = _Search(ring, t, cands, node_limit)
    nodes = 1
    pool = None
    try:
        if workers > 1:
            pool = ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(search,))
        for L in range(1, cap + 1):
            roots = list(search.root_indices(L))
            if not roots:
                continue
            if pool is None:
                results = (search.root(i, L) for i in roots)
            else:
                chunk = max(1, len(roots) // (8 * workers))
                results = pool.map(_run_root, [(i, L) for i in roots], chunksize=chunk)
            for res, n in results:
                nodes += n
                if nodes > node_limit:
                    raise CapacityExceeded(f"search exceeded {node_limit} nodes")
                if res is not None:
                    cert = [ring.element(search.root_coords(i)) for i in res]
                    return done(True, L, cert, nodes, len(cands))
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return done(False, None, [], nodes, len(cands))


# --------------------------------------------------------------------------
# profiles


@dataclass
class ProfileResult:
    rows: list[tuple[object, int]]
    max_length: int
    argmax: list
    candidates: int


def pythagoras_profile(ring: RingAdapter, B, cap: int, limit: int = DEFAULT_LIMIT) -> ProfileResult:
    """Minimal length of every nonzero sum of at most ``cap`` squares with ``C0 <= B``.

    Rows are sorted by ``C0`` and then coordinates.
    """
    B = Fraction(B)
    cands = enumerate_coords(ring, B, limit)
    sq = [(ring.square(np.array(x, dtype=np.int64)), q) for x, q in cands]
    best: dict[bytes, tuple[int, np.ndarray, Fraction]] = {}
    frontier: dict[bytes, tuple[np.ndarray, Fraction]] = {}
    for s, q in sq:
        k = s.tobytes()
        if k not in best:
            best[k] = (1, s, q)
            frontier[k] = (s, q)
    for L in range(2, cap + 1):
        nxt: dict[bytes, tuple[np.ndarray, Fraction]] = {}
        for v, qv in frontier.values():
            for s, q in sq:
                if qv + q > B:
                    continue
                w = v + s
                k = w.tobytes()
                if k in best:
                    continue
                best[k] = (L, w, qv + q)
                nxt[k] = (w, qv + q)
                if len(best) > limit:
                    raise CapacityExceeded(f"profile exceeded {limit} elements")
        frontier = nxt
        if not frontier:
            break
    rows = sorted(best.values(), key=lambda t: (t[2], t[1].tolist()))
    table = [(ring.element(w), L) for L, w, _ in rows]
    mx = max((L for _, L in table), default=0)
    return ProfileResult(table, mx, [e for e, L in table if L == mx], len(cands))


# --------------------------------------------------------------------------
# two squares in real cyclotomic rings


def not_sum_of_two_squares_cyclo(
    ring: cy.CycloRing | CycloAdapter, target: cy.CycloElem, limit: int = DEFAULT_LIMIT
) -> bool:
    """True iff ``target`` is neither a square nor ``a^2 + b^2`` with ``a, b`` nonzero.

    ``C0`` is additive, so the smaller square of a pair has
    ``q(b) <= C0(t)/2``.  Every such ``b`` comes from the block enumeration
    and ``t - b^2`` is tested with an exact square root.
    """
    adapter = ring if isinstance(ring, CycloAdapter) else CycloAdapter(ring)
    t = adapter.coords(target)
    if not adapter.totally_positive(t):
        raise ValueError("target must be totally positive")
    if cy.cyc_sqrt_exact(target) is not None:
        return False
    c = adapter.c0(t)
    for x, _ in enumerate_coords(adapter, c / 2, limit):
        b = cy.CycloElem(adapter.ring, np.array(x, dtype=np.int64))
        if cy.cyc_sqrt_exact(target - b * b) is not None:
            return False
    return True
