"""Regular BDPs over Z_4 x Z_8 x Z_p and Z_4 x Z_24 x Z_p by lifting base blocks.

A base block B over Z_a x Z_b x Z_p is lifted to the family (1,1,c).B for c in a
multiplier set (the squares, the squares modulo sign, or all units).  The
square-class conditions that make the lift a packing are checked when the
blocks are built; nothing in the parameter tables is taken on trust.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Sequence

from . import catalog
from .abelian import Elem, Group, crt_split
from .catalog import SQUARES, SQUARES_MOD_SIGN, UNITS, LemmaTemplate
from .packing import Packing
from .residues import ResidueTables, build_tables, find_theta, is_prime, square_representatives_mod_sign

__all__ = ["ConstructionError", "LiftSpec", "lift", "multiplier_set", "instantiate",
           "check_c1", "check_c2", "check_lift_cover", "check_sdf_projection",
           "base_blocks_4x8p", "bdp_4x8p", "bdp_4x24p"]


class ConstructionError(ValueError):
    """A construction precondition failed; ``witness`` says where."""

    def __init__(self, msg: str, witness: dict | None = None):
        super().__init__(msg)
        self.witness = witness or {}


@dataclass(frozen=True)
class LiftSpec:
    group: Group  # Z_a x Z_b x Z_p
    blocks: tuple[tuple[Elem, ...], ...]
    multipliers: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if len(self.blocks) != len(self.multipliers):
            raise ValueError("one multiplier set per base block")
        p = self.group.moduli[-1]
        for s in self.multipliers:
            if not s or any(c % p == 0 for c in s):
                raise ValueError("multiplier sets must be nonempty subsets of the units mod p")


def multiplier_set(kind: str, t: ResidueTables) -> frozenset[int]:
    if kind == SQUARES:
        return t.squares
    if kind == SQUARES_MOD_SIGN:
        return square_representatives_mod_sign(t)
    if kind == UNITS:
        return frozenset(range(1, t.p))
    raise ValueError(f"unknown multiplier set {kind!r}")


def lift(spec: LiftSpec, name: str = "", claimed_leave: tuple[int, ...] | None = None) -> Packing:
    g = spec.group
    p = g.moduli[-1]
    out = []
    for b, mults in zip(spec.blocks, spec.multipliers):
        for c in sorted(mults):
            blk = tuple(x[:-1] + ((c * x[-1]) % p,) for x in b)
            if len(set(blk)) != len(blk):
                raise ConstructionError(f"block {b} collapses under multiplier {c}",
                                        {"block": [list(x) for x in b], "multiplier": c})
            out.append(blk)
    return Packing(g, tuple(out), claimed_leave=claimed_leave, name=name)


# ---------------------------------------------------------------- templates

def _token(tok: str, p: int, params: dict[str, int], theta: int | None) -> int:
    neg = tok.startswith("-")
    body = tok[1:] if neg else tok
    if body.lstrip("+").isdigit():
        val = int(body)
    elif body == "t":
        if theta is None:
            raise ConstructionError("template uses theta but none was supplied")
        val = theta
    elif body in params:
        val = params[body]
    else:
        raise ConstructionError(f"unknown template token {tok!r}")
    return (-val if neg else val) % p


def instantiate(tpl: LemmaTemplate, p: int, params: dict[str, int] | None = None,
                theta: int | None = None) -> list[tuple[Elem, ...]]:
    """Base blocks of ``tpl`` over Z_a x Z_b x Z_p (derived blocks expanded)."""
    a, b = tpl.base
    params = params or {}
    done: dict[str, tuple[Elem, ...]] = {}
    out = []
    for tb in tpl.blocks:
        if tb.negate_of is not None:
            blk = tuple((i, j, (-z) % p) for i, j, z in done[tb.negate_of])
        else:
            blk = tuple((i % a, j % b, _token(z, p, params, theta)) for i, j, z in tb.elements)
        done[tb.name] = blk
        out.append(blk)
    return out


# ---------------------------------------------------------------- square-class checks

def _diff_table(blocks: Sequence[Sequence[Elem]], a: int, b: int, p: int) -> dict[tuple[int, int], list[tuple[int, int]]]:
    # (i,j) -> list of (Z_p part, block index)
    L: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
    for bi, blk in enumerate(blocks):
        for x in blk:
            for y in blk:
                if x is y:
                    continue
                L[(x[0] - y[0]) % a, (x[1] - y[1]) % b].append(((x[2] - y[2]) % p, bi))
    return L


def check_c1(blocks: Sequence[Sequence[Elem]], base: tuple[int, int], t: ResidueTables) -> None:
    """p = 3 mod 4, lift by squares: each L_z is {l, l'} with l*l' a non-square."""
    a, b = base
    L = _diff_table(blocks, a, b, t.p)
    for i in range(a):
        for j in range(b):
            vals = [z for z, _ in L.get((i, j), [])]
            if len(vals) != 2 or 0 in vals or t.is_square(vals[0] * vals[1] % t.p):
                raise ConstructionError(f"square-class condition fails at ({i},{j}) for p={t.p}",
                                        {"position": [i, j], "values": vals})


def check_c2(blocks: Sequence[Sequence[Elem]], base: tuple[int, int], t: ResidueTables) -> None:
    """p = 1 mod 4, lift by squares mod sign: L_z = {1,-1}.{l, l'} with l*l' a non-square."""
    a, b = base
    p = t.p
    L = _diff_table(blocks, a, b, p)
    for i in range(a):
        for j in range(b):
            vals = sorted(z for z, _ in L.get((i, j), []))
            ok = len(vals) == 4 and 0 not in vals and Counter(vals) == Counter((-z) % p for z in vals)
            if ok:
                rest = list(vals)
                l1 = rest[0]
                rest.remove(l1)
                rest.remove((-l1) % p)
                ok = len(rest) == 2 and not t.is_square(l1 * rest[0] % p)
            if not ok:
                raise ConstructionError(f"square-class condition fails at ({i},{j}) for p={p}",
                                        {"position": [i, j], "values": vals})


def check_lift_cover(blocks: Sequence[Sequence[Elem]], mults: Sequence[frozenset[int]],
                     base: tuple[int, int], p: int) -> None:
    """Generic form: for each (i,j), the lifted Z_p parts hit every unit exactly once."""
    a, b = base
    L = _diff_table(blocks, a, b, p)
    for i in range(a):
        for j in range(b):
            hits = Counter()
            for z, bi in L.get((i, j), []):
                for c in mults[bi]:
                    hits[c * z % p] += 1
            if hits.get(0) or len(hits) != p - 1 or any(v != 1 for v in hits.values()):
                bad = next((z for z in range(p) if hits.get(z, 0) != (0 if z == 0 else 1)), None)
                raise ConstructionError(f"lifted differences at ({i},{j}) do not cover Z_{p}* once",
                                        {"position": [i, j], "element": bad, "count": hits.get(bad, 0)})


def _multiset_family(blocks: Sequence[Sequence[Elem]]) -> Counter:
    return Counter(tuple(sorted(b)) for b in blocks)


def check_sdf_projection(blocks: Sequence[Sequence[Elem]], lam: int) -> None:
    proj = [tuple(x[:2] for x in b) for b in blocks]
    if _multiset_family(proj) != _multiset_family(catalog.sdf_4x8(lam)):
        raise ConstructionError(f"base blocks do not project onto the lambda={lam} strong difference family")


# ---------------------------------------------------------------- constructors

def _require_prime(p: int, lo: int) -> None:
    if not isinstance(p, int) or not is_prime(p) or p < lo:
        raise ConstructionError(f"p must be a prime >= {lo}, got {p}")


def base_blocks_4x8p(p: int) -> tuple[LemmaTemplate, list[tuple[Elem, ...]], list[frozenset[int]]]:
    name = "4x8p_3mod4" if p % 4 == 3 else "4x8p_1mod4"
    tpl = catalog.template(name)
    t = build_tables(p)
    theta = find_theta(t) if p % 4 == 1 else None
    blocks = instantiate(tpl, p, catalog.lemma_params(name, p), theta)
    return tpl, blocks, [multiplier_set(k, t) for k in tpl.multipliers]


def bdp_4x8p(p: int) -> Packing:
    """Regular (4 x 8)-leave BDP over Z_4 x Z_8 x Z_p with p-1 blocks of each size."""
    _require_prime(p, 5)
    grp = Group.of(4, 8, p)
    if p == 5:
        base = catalog.base_4x40()
        split = crt_split(base.group, 1, 5)
        blocks = tuple(tuple(split(x) for x in b) for b in base.blocks)
        return Packing(grp, blocks, claimed_leave=(4, 8, 1), name="4x8p p=5")
    tpl, blocks, mults = base_blocks_4x8p(p)
    t = build_tables(p)
    if p % 4 == 3:
        check_c1(blocks, tpl.base, t)
        check_sdf_projection(blocks, 2)
    else:
        check_c2(blocks, tpl.base, t)
        check_sdf_projection(blocks, 4)
    check_lift_cover(blocks, mults, tpl.base, p)
    spec = LiftSpec(grp, tuple(blocks), tuple(mults))
    return lift(spec, name=f"4x8p p={p}", claimed_leave=(4, 8, 1))


def bdp_4x24p(p: int) -> Packing:
    """Regular (4 x 24)-leave BDP over Z_4 x Z_24 x Z_p with 3(p-1) blocks of each size."""
    _require_prime(p, 7)
    name = "4x24p_3mod4" if p % 4 == 3 else "4x24p_1mod4"
    tpl = catalog.template(name)
    t = build_tables(p)
    theta = find_theta(t) if p % 4 == 1 else None
    blocks = instantiate(tpl, p, catalog.lemma_params(name, p), theta)
    mults = [multiplier_set(k, t) for k in tpl.multipliers]
    if p % 4 == 3:
        check_c1(blocks, tpl.base, t)
    check_lift_cover(blocks, mults, tpl.base, p)
    spec = LiftSpec(Group.of(4, 24, p), tuple(blocks), tuple(mults))
    return lift(spec, name=f"4x24p p={p}", claimed_leave=(4, 24, 1))
