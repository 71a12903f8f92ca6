"""Quadratic residues modulo an odd prime."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

# below this, square tests hit the precomputed table; above, Euler's criterion
TABLE_LIMIT = 1 << 16


class ResidueError(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_factors(n: int) -> list[int]:
    out, f = [], 2
    while f * f <= n:
        while n % f == 0:
            out.append(f)
            n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def primitive_root(p: int) -> int:
    """Smallest generator of the multiplicative group mod prime p."""
    qs = set(prime_factors(p - 1))
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in qs):
            return g
    if p == 2:
        return 1
    raise ResidueError(f"no primitive root mod {p}")


@dataclass(frozen=True)
class ResidueTables:
    p: int
    omega: int
    squares: frozenset[int]
    nonsquares: frozenset[int]
    xi: int

    def is_square(self, x: int) -> bool:
        return is_square(self, x)

    @property
    def theta(self) -> int:
        return find_theta(self)


@lru_cache(maxsize=None)
def build_tables(p: int) -> ResidueTables:
    if p < 3 or not is_prime(p):
        raise ResidueError(f"{p} is not an odd prime")
    omega = primitive_root(p)
    sq, nsq = set(), set()
    x = 1
    for i in range(p - 1):
        (sq if i % 2 == 0 else nsq).add(x)
        x = x * omega % p
    return ResidueTables(p, omega, frozenset(sq), frozenset(nsq), min(nsq))


def is_square(t: ResidueTables, x: int) -> bool:
    x %= t.p
    if x == 0:
        raise ResidueError("0 is neither a square nor a non-square")
    if t.p < TABLE_LIMIT:
        return x in t.squares
    return pow(x, (t.p - 1) // 2, t.p) == 1


@lru_cache(maxsize=None)
def _theta(p: int) -> int:
    t = build_tables(p)
    if p < 5:
        raise ResidueError("theta needs p >= 5")
    y = next(y for y in range(1, p - 1) if y in t.nonsquares and y + 1 in t.nonsquares)
    z = next((z for z in range(y + 2, p) if z in t.squares), None)
    if z is None:
        # only p = 7 below 10^4: the nonsquares 3, 5, 6 admit no such theta
        raise ResidueError(f"no theta exists for p={p}")
    return z - 1


def find_theta(t: ResidueTables) -> int:
    """A non-square theta with theta-1 a non-square and theta+1 a square.

    Taken as z-1, where (y, y+1) is the smallest pair of consecutive
    non-squares and z the first square after y+1.
    """
    return _theta(t.p)


def square_representatives_mod_sign(t: ResidueTables) -> frozenset[int]:
    """One square out of each pair {s, -s}: the squares in [1, (p-1)/2]."""
    if t.p % 4 != 1:
        raise ResidueError(f"p={t.p} is not 1 mod 4, squares do not pair under negation")
    half = (t.p - 1) // 2
    return frozenset(s for s in t.squares if s <= half)
