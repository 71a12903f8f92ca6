"""Finite abelian groups Z_m1 x ... x Z_mr.

Elements are plain tuples of reduced residues.  Everything here is a pure
function on immutable values.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator, Sequence

import numpy as np

Elem = tuple[int, ...]


class GroupError(ValueError):
    """Structural misuse: arity mismatch, bad modulus, invalid relabel."""


@dataclass(frozen=True)
class Group:
    moduli: tuple[int, ...]

    def __post_init__(self) -> None:
        mods = tuple(int(m) for m in self.moduli)
        if not mods:
            raise GroupError("a group needs at least one modulus")
        if any(m < 1 for m in mods):
            raise GroupError(f"moduli must be >= 1, got {mods}")
        object.__setattr__(self, "moduli", mods)

    @classmethod
    def of(cls, *moduli: int) -> "Group":
        return cls(tuple(moduli))

    @property
    def arity(self) -> int:
        return len(self.moduli)

    @cached_property
    def order(self) -> int:
        return math.prod(self.moduli)

    @property
    def zero(self) -> Elem:
        return (0,) * self.arity

    @cached_property
    def _radix(self) -> np.ndarray:
        # mixed-radix place values, last coordinate fastest
        out = np.ones(self.arity, dtype=np.int64)
        for i in range(self.arity - 2, -1, -1):
            out[i] = out[i + 1] * self.moduli[i + 1]
        return out

    @cached_property
    def mod_array(self) -> np.ndarray:
        return np.array(self.moduli, dtype=np.int64)

    def __str__(self) -> str:
        return "x".join(f"Z{m}" for m in self.moduli)

    def label(self) -> str:
        return "x".join(str(m) for m in self.moduli)

    def elements(self) -> Iterator[Elem]:
        return itertools.product(*(range(m) for m in self.moduli))

    def reduce(self, coords: Sequence[int]) -> Elem:
        if len(coords) != self.arity:
            raise GroupError(f"element {tuple(coords)} has arity {len(coords)}, group {self} has {self.arity}")
        return tuple(int(c) % m for c, m in zip(coords, self.moduli))

    def contains(self, x: Sequence[int]) -> bool:
        return len(x) == self.arity and all(0 <= c < m for c, m in zip(x, self.moduli))

    def check(self, x: Sequence[int]) -> Elem:
        if not self.contains(x):
            raise GroupError(f"{tuple(x)} is not a reduced element of {self}")
        return tuple(x)

    def rank(self, x: Elem) -> int:
        r = 0
        for c, m in zip(x, self.moduli):
            r = r * m + c
        return r

    def unrank(self, r: int) -> Elem:
        out = []
        for m in reversed(self.moduli):
            r, c = divmod(r, m)
            out.append(c)
        return tuple(reversed(out))

    def rank_array(self, coords: np.ndarray) -> np.ndarray:
        """Ranks of an (..., arity) array of reduced coordinates."""
        return coords @ self._radix

    def unrank_array(self, ranks: np.ndarray) -> np.ndarray:
        ranks = np.asarray(ranks, dtype=np.int64)
        return (ranks[..., None] // self._radix) % self.mod_array

    def add(self, x: Elem, y: Elem) -> Elem:
        self._same_arity(x, y)
        return tuple((a + b) % m for a, b, m in zip(x, y, self.moduli))

    def neg(self, x: Elem) -> Elem:
        return tuple((-a) % m for a, m in zip(x, self.moduli))

    def _same_arity(self, *xs: Sequence[int]) -> None:
        for x in xs:
            if len(x) != self.arity:
                raise GroupError(f"element {tuple(x)} does not match arity of {self}")


def difference(g: Group, x: Elem, y: Elem) -> Elem:
    g._same_arity(x, y)
    return tuple((a - b) % m for a, b, m in zip(x, y, g.moduli))


def scale(g: Group, s: Sequence[int], x: Elem) -> Elem:
    """Coordinatewise multiplication by the integer vector ``s``."""
    g._same_arity(s, x)
    return tuple((c * a) % m for c, a, m in zip(s, x, g.moduli))


def involution_closure(g: Group) -> frozenset[Elem]:
    """I(G): the identity together with all involutions, i.e. {x : 2x = 0}."""
    per_coord = []
    for m in g.moduli:
        per_coord.append((0, m // 2) if m % 2 == 0 else (0,))
    return frozenset(itertools.product(*per_coord))


def crt(residues: Sequence[int], moduli: Sequence[int]) -> int:
    """Unique x mod prod(moduli) with x = r_i (mod m_i); moduli pairwise coprime."""
    x, m = 0, 1
    for r, mi in zip(residues, moduli):
        if math.gcd(m, mi) != 1:
            raise GroupError(f"moduli {tuple(moduli)} are not pairwise coprime")
        # x + m*t = r (mod mi)
        t = ((r - x) * pow(m, -1, mi)) % mi if mi > 1 else 0
        x += m * t
        m *= mi
    return x % m


@dataclass(frozen=True)
class Relabel:
    """A group isomorphism between two product-of-cyclic labellings.

    ``forward_array`` / ``inverse_array`` act on (N, arity) integer arrays and
    are what compositions use; ``__call__`` is the per-element convenience.
    """

    source: Group
    target: Group
    forward_array: Callable[[np.ndarray], np.ndarray]
    inverse_array: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    def __call__(self, x: Elem) -> Elem:
        arr = self.forward_array(np.array([x], dtype=np.int64))
        return tuple(int(c) for c in arr[0])

    def inverse(self, y: Elem) -> Elem:
        arr = self.inverse_array(np.array([y], dtype=np.int64))
        return tuple(int(c) for c in arr[0])

    def inverted(self) -> "Relabel":
        return Relabel(self.target, self.source, self.inverse_array, self.forward_array,
                       f"inverse of {self.description}")

    def then(self, other: "Relabel") -> "Relabel":
        if other.source != self.target:
            raise GroupError(f"cannot compose {self.target} -> {other.source}")
        f1, f2, i1, i2 = self.forward_array, other.forward_array, self.inverse_array, other.inverse_array
        return Relabel(self.source, other.target, lambda a: f2(f1(a)), lambda a: i1(i2(a)),
                       f"{self.description}; {other.description}")


def crt_relabel(g: Group, i: int, j: int) -> Relabel:
    """Merge coordinates i and j (coprime moduli) into one coordinate mod m_i*m_j.

    The merged coordinate takes the place of ``min(i, j)``; the other one is
    dropped.  The merged value x satisfies x = c_i (mod m_i), x = c_j (mod m_j).
    """
    if i == j or not (0 <= i < g.arity and 0 <= j < g.arity):
        raise GroupError(f"bad coordinate pair ({i}, {j}) for {g}")
    mi, mj = g.moduli[i], g.moduli[j]
    if math.gcd(mi, mj) != 1:
        raise GroupError(f"cannot merge Z{mi} and Z{mj}: moduli not coprime")
    lo, hi = min(i, j), max(i, j)
    mods = list(g.moduli)
    mods[lo] = mi * mj
    del mods[hi]
    target = Group(tuple(mods))
    # x = c_i * e_i + c_j * e_j with idempotents e_i = 1 mod m_i, 0 mod m_j
    e_i = crt((1, 0), (mi, mj))
    e_j = crt((0, 1), (mi, mj))
    mm = mi * mj

    def fwd(a: np.ndarray) -> np.ndarray:
        merged = (a[:, i] * e_i + a[:, j] * e_j) % mm
        out = np.delete(a, hi, axis=1)
        out[:, lo] = merged
        return out

    def inv(b: np.ndarray) -> np.ndarray:
        merged = b[:, lo]
        out = np.insert(b, hi, 0, axis=1)
        out[:, i] = merged % mi
        out[:, j] = merged % mj
        return out

    return Relabel(g, target, fwd, inv, f"merge coords {i},{j} of {g} into Z{mm}")


def crt_split(g: Group, i: int, factor: int) -> Relabel:
    """Split coordinate i (modulus m) into Z_{m/factor} x Z_factor, appended as a new last coordinate."""
    m = g.moduli[i]
    if factor < 1 or m % factor or math.gcd(factor, m // factor) != 1:
        raise GroupError(f"cannot split Z{m} off a coprime factor {factor}")
    rest = m // factor
    mods = list(g.moduli)
    mods[i] = rest
    mods.append(factor)
    split_group = Group(tuple(mods))
    merge = crt_relabel(split_group, i, split_group.arity - 1)
    # merge maps the split group back onto g; splitting is its inverse
    if merge.target != g:
        raise GroupError("internal: split/merge mismatch")
    return merge.inverted()


def transfer_factor(g: Group, src: int, dst: int, factor: int) -> Relabel:
    """Move a coprime factor of coordinate ``src`` onto coordinate ``dst``.

    E.g. Z_12 x Z_8 -> Z_4 x Z_24 moves the factor 3.  Requires the factor to be
    coprime to the rest of ``src`` and to the modulus of ``dst``.
    """
    if factor == 1:
        return identity_relabel(g)
    if math.gcd(factor, g.moduli[dst]) != 1:
        raise GroupError(f"factor {factor} is not coprime to Z{g.moduli[dst]}")
    split = crt_split(g, src, factor)
    merge = crt_relabel(split.target, dst, split.target.arity - 1)
    out = split.then(merge)
    return Relabel(out.source, out.target, out.forward_array, out.inverse_array,
                   f"move factor {factor} from coord {src} to coord {dst}: {g} -> {out.target}")


def identity_relabel(g: Group) -> Relabel:
    return Relabel(g, g, lambda a: a, lambda a: a, f"identity on {g}")


@dataclass(frozen=True)
class Embedding:
    inner: Group
    outer: Group
    multipliers: tuple[int, ...]

    def __call__(self, x: Elem) -> Elem:
        return tuple((c * a) % m for c, a, m in zip(self.multipliers, x, self.outer.moduli))

    def apply_array(self, a: np.ndarray) -> np.ndarray:
        return (a * np.array(self.multipliers, dtype=np.int64)) % self.outer.mod_array


def scale_embed(inner: Group, outer: Group) -> Embedding:
    """Embed Z_g x Z_h as the subgroup (u/g)Z_u x (v/h)Z_v of Z_u x Z_v."""
    if inner.arity != outer.arity:
        raise GroupError(f"arity mismatch: {inner} into {outer}")
    mults = []
    for gi, ui in zip(inner.moduli, outer.moduli):
        if ui % gi:
            raise GroupError(f"Z{gi} does not divide Z{ui}")
        mults.append(ui // gi)
    return Embedding(inner, outer, tuple(mults))


def subgroup(g: Group, orders: Sequence[int]) -> frozenset[Elem]:
    """The subgroup (m_i/s_i) Z_{m_i} x ..., i.e. order s_i in each coordinate."""
    if len(orders) != g.arity:
        raise GroupError("subgroup orders must match group arity")
    per = []
    for s, m in zip(orders, g.moduli):
        if s < 1 or m % s:
            raise GroupError(f"{s} does not divide {m}")
        step = m // s
        per.append(range(0, m, step))
    return frozenset(itertools.product(*per))


def _prime_powers(m: int) -> list[tuple[int, int]]:
    out = []
    q = 2
    while q * q <= m:
        if m % q == 0:
            pp = 1
            while m % q == 0:
                m //= q
                pp *= q
            out.append((q, pp))
        q += 1
    if m > 1:
        out.append((m, m))
    return out


def primary_relabel(g: Group) -> Relabel:
    """Isomorphism onto the primary form: cyclic prime-power factors sorted by (prime, power).

    The trivial group maps onto Z_1.  Two groups are isomorphic iff their
    primary forms agree, which is how ``iso_relabel`` is built.
    """
    comps = []  # (prime, power, source coordinate)
    for i, m in enumerate(g.moduli):
        for p, q in _prime_powers(m):
            comps.append((p, q, i))
    comps.sort(key=lambda c: (c[0], c[1]))
    if not comps:
        target = Group((1,))
    else:
        target = Group(tuple(q for _, q, _ in comps))
    # CRT idempotents per component within its source modulus
    idem = [crt([1 if cc is c else 0 for cc in comps if cc[2] == c[2]],
                [cc[1] for cc in comps if cc[2] == c[2]]) for c in comps]

    def fwd(a: np.ndarray) -> np.ndarray:
        if not comps:
            return np.zeros((a.shape[0], 1), dtype=np.int64)
        return np.stack([a[:, i] % q for _, q, i in comps], axis=1).astype(np.int64)

    def inv(b: np.ndarray) -> np.ndarray:
        out = np.zeros((b.shape[0], g.arity), dtype=np.int64)
        for col, ((_, q, i), e) in enumerate(zip(comps, idem)):
            out[:, i] += b[:, col] * e
        return out % g.mod_array

    return Relabel(g, target, fwd, inv, f"primary form of {g}: {target}")


def iso_relabel(g: Group, h: Group) -> Relabel:
    """An explicit isomorphism g -> h through the common primary form."""
    pg, ph = primary_relabel(g), primary_relabel(h)
    if pg.target != ph.target:
        raise GroupError(f"{g} and {h} are not isomorphic")
    return pg.then(ph.inverted())
