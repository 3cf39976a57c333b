"""Independent brute-force oracles shared by the test modules."""

from functools import lru_cache


@lru_cache(maxsize=None)
def primitive_sums(k, p, mod):
    """Residues mod ``mod`` of y_1^2 + ... + y_k^2 with some y_i a p-adic unit."""
    squares = {(y * y % mod, y % p != 0) for y in range(mod)}
    reach = {(0, False)}
    for _ in range(k):
        reach = {((r + s) % mod, f or g) for r, f in reach for s, g in squares}
    return frozenset(r for r, f in reach if f)


def brute_sum_k(x, k, p):
    """Is the positive integer ``x`` a sum of ``k`` squares in Q_p?"""
    while x % (p * p) == 0:
        x //= p * p
    # a primitive solution mod p^3 (mod 2^7 for p = 2) lifts by Hensel in the unit coordinate
    mod = 2**7 if p == 2 else p**3
    return any((p ** (2 * j) * x) % mod in primitive_sums(k, p, mod) for j in range(3))
