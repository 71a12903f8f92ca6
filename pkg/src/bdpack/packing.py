"""Difference packings, strong difference families and their certificates."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import kernels
from .abelian import Elem, Group, GroupError, involution_closure, subgroup

# dense counters up to this group order, a sparse map above
DENSE_LIMIT = 1 << 22

Block = tuple[Elem, ...]


class PackingError(ValueError):
    pass


def _block_arrays(group: Group, blocks: Sequence[Sequence[Elem]]) -> tuple[np.ndarray, np.ndarray]:
    sizes = [len(b) for b in blocks]
    offsets = np.zeros(len(blocks) + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    if not blocks:
        return np.zeros((0, group.arity), dtype=np.int64), offsets
    coords = np.array([x for b in blocks for x in b], dtype=np.int64).reshape(-1, group.arity)
    return np.ascontiguousarray(coords), offsets


@dataclass(frozen=True)
class Packing:
    group: Group
    blocks: tuple[Block, ...]
    sizes: frozenset[int] = frozenset({4, 5})
    claimed_leave: tuple[int, ...] | None = None
    name: str = ""

    def __post_init__(self) -> None:
        blocks = tuple(tuple(self.group.check(tuple(x)) for x in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "sizes", frozenset(self.sizes))
        if self.claimed_leave is not None:
            object.__setattr__(self, "claimed_leave", tuple(self.claimed_leave))
        for b in blocks:
            if len(b) not in self.sizes:
                raise PackingError(f"block of size {len(b)} not in K={sorted(self.sizes)}: {b}")

    def __len__(self) -> int:
        return len(self.blocks)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(coords, offsets) for the kernels; coords has one row per block element."""
        return _block_arrays(self.group, self.blocks)

    def size_counts(self) -> dict[int, int]:
        c = Counter(len(b) for b in self.blocks)
        return {k: c.get(k, 0) for k in sorted(self.sizes)}

    def with_blocks(self, blocks: Iterable[Block], **changes: Any) -> "Packing":
        fields = dict(group=self.group, blocks=tuple(blocks), sizes=self.sizes,
                      claimed_leave=self.claimed_leave, name=self.name)
        fields.update(changes)
        return Packing(**fields)


def empty_packing(group: Group, sizes: Iterable[int] = (4, 5), name: str = "") -> Packing:
    """The packing with no blocks; its leave is the whole group."""
    return Packing(group, (), frozenset(sizes), group.moduli, name or f"empty {group.label()}")


class DiffCount:
    """Multiplicity of every group element in a list of differences."""

    def __init__(self, group: Group, counts: np.ndarray | dict[int, int]):
        self.group = group
        self._counts = counts

    @property
    def dense(self) -> bool:
        return isinstance(self._counts, np.ndarray)

    def __getitem__(self, x: Elem) -> int:
        r = self.group.rank(self.group.check(x))
        if self.dense:
            return int(self._counts[r])
        return self._counts.get(r, 0)

    @property
    def total(self) -> int:
        if self.dense:
            return int(self._counts.sum())
        return sum(self._counts.values())

    def array(self) -> np.ndarray:
        if self.dense:
            return self._counts
        out = np.zeros(self.group.order, dtype=np.int64)
        for r, c in self._counts.items():
            out[r] = c
        return out

    def items(self) -> Iterable[tuple[Elem, int]]:
        if self.dense:
            for r in np.flatnonzero(self._counts):
                yield self.group.unrank(int(r)), int(self._counts[r])
        else:
            for r, c in sorted(self._counts.items()):
                if c:
                    yield self.group.unrank(r), c

    def as_dict(self) -> dict[Elem, int]:
        return dict(self.items())

    def uncovered(self) -> frozenset[Elem]:
        arr = self.array()
        return frozenset(self.group.unrank(int(r)) for r in np.flatnonzero(arr == 0))


def _sparse_counts(group: Group, coords: np.ndarray, offsets: np.ndarray) -> dict[int, int]:
    out: Counter[int] = Counter()
    mods = group.mod_array
    for b in range(len(offsets) - 1):
        blk = coords[offsets[b]:offsets[b + 1]]
        k = len(blk)
        if k < 2:
            continue
        diff = (blk[:, None, :] - blk[None, :, :]) % mods
        ranks = group.rank_array(diff)[~np.eye(k, dtype=bool)]
        out.update(int(r) for r in ranks)
    return dict(out)


def delta(group: Group, blocks: Sequence[Sequence[Elem]]) -> DiffCount:
    """Count x - y over ordered pairs of distinct positions within each block.

    Repeated elements of a multiset block contribute the identity.
    """
    for b in blocks:
        for x in b:
            if not group.contains(x):
                raise GroupError(f"element {tuple(x)} is not in {group} (mixed groups?)")
    coords, offsets = _block_arrays(group, blocks)
    return _delta_arrays(group, coords, offsets)


def _delta_arrays(group: Group, coords: np.ndarray, offsets: np.ndarray) -> DiffCount:
    if group.order <= DENSE_LIMIT:
        counts = kernels.count_differences(group.mod_array, coords, offsets, group.order)
        return DiffCount(group, counts)
    return DiffCount(group, _sparse_counts(group, coords, offsets))


def packing_delta(p: Packing) -> DiffCount:
    coords, offsets = p.arrays
    return _delta_arrays(p.group, coords, offsets)


@dataclass
class Certificate:
    kind: str
    ok: bool
    group: tuple[int, ...]
    reason: str = ""
    n_blocks: int = 0
    size_counts: dict[int, int] = field(default_factory=dict)
    balanced: bool | None = None
    max_multiplicity: int = 0
    identity_count: int = 0
    total_differences: int = 0
    leave: frozenset[Elem] = frozenset()
    bound: int | None = None
    regular: tuple[int, ...] | None = None
    lam: int | None = None
    witness: dict[str, Any] | None = None
    derivation: Any = None
    info: dict[str, Any] | None = None

    def __bool__(self) -> bool:
        return self.ok

    @property
    def leave_size(self) -> int:
        return len(self.leave)

    def to_dict(self, include_leave: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {
            "kind": self.kind,
            "ok": self.ok,
            "group": list(self.group),
            "reason": self.reason,
            "n_blocks": self.n_blocks,
            "size_counts": {str(k): v for k, v in self.size_counts.items()},
            "balanced": self.balanced,
            "max_multiplicity": self.max_multiplicity,
            "identity_count": self.identity_count,
            "total_differences": self.total_differences,
            "leave_size": self.leave_size,
            "bound": self.bound,
            "regular": list(self.regular) if self.regular else None,
            "lambda": self.lam,
            "witness": self.witness,
        }
        if include_leave:
            out["leave"] = [list(x) for x in sorted(self.leave)]
        if self.info:
            out["info"] = self.info
        if self.derivation is not None:
            out["derivation"] = self.derivation
        return out


def verify_dp(p: Packing) -> Certificate:
    """Certify that every nonzero element is covered at most once and 0 never."""
    g = p.group
    counts = packing_delta(p).array()
    zero = g.rank(g.zero)
    ident = int(counts[zero])
    nz = counts.copy()
    nz[zero] = 0
    worst = int(nz.argmax()) if g.order > 1 else zero
    max_mult = int(nz[worst])
    leave = frozenset(g.unrank(int(r)) for r in np.flatnonzero(counts == 0))
    sc = p.size_counts()
    cert = Certificate(
        kind="DP", ok=True, group=g.moduli, n_blocks=len(p), size_counts=sc,
        balanced=len(set(sc.values())) <= 1, max_multiplicity=max_mult,
        identity_count=ident, total_differences=int(counts.sum()), leave=leave,
    )
    if ident:
        cert.ok = False
        cert.reason = "a block repeats an element (identity covered)"
        cert.witness = {"element": list(g.zero), "multiplicity": ident}
    elif max_mult > 1:
        cert.ok = False
        cert.reason = "an element is covered more than once"
        cert.witness = {"element": list(g.unrank(worst)), "multiplicity": max_mult}
    return cert


def verify_regular(p: Packing, *orders: int) -> Certificate:
    """DP whose leave is exactly the subgroup (u/s)Z_u x (v/t)Z_v, and balanced.

    ``orders`` gives the subgroup order per coordinate, so split labellings
    such as Z_4 x Z_8 x Z_p with orders (4, 8, 1) are accepted too.
    """
    g = p.group
    if len(orders) != g.arity:
        raise GroupError(f"need {g.arity} subgroup orders for {g}, got {orders}")
    for s, m in zip(orders, g.moduli):
        if s < 1 or m % s:
            raise GroupError(f"{tuple(orders)} does not divide {g.moduli}")
    cert = verify_dp(p)
    cert.kind = "regular-BDP"
    cert.regular = tuple(orders)
    if not cert.ok:
        return cert
    want = subgroup(g, orders)
    if cert.leave != want:
        cert.ok = False
        extra = sorted(cert.leave - want)
        missing = sorted(want - cert.leave)
        cert.reason = "leave is not the required subgroup"
        cert.witness = {
            "uncovered_outside_subgroup": [list(x) for x in extra[:5]],
            "covered_inside_subgroup": [list(x) for x in missing[:5]],
        }
    elif not cert.balanced:
        cert.ok = False
        cert.reason = "not balanced"
        cert.witness = {"size_counts": cert.size_counts}
    return cert


def verify_balanced(p: Packing) -> tuple[dict[int, int], bool]:
    sc = p.size_counts()
    return sc, len(set(sc.values())) <= 1


def optimality_bound(g: Group, sizes: Iterable[int]) -> int:
    """floor(|G \\ I(G)| / sum_k (k^2 - k)), the per-size block count ceiling."""
    sizes = list(sizes)
    if not sizes:
        raise PackingError("K is empty")
    denom = sum(k * k - k for k in sizes)
    if denom <= 0:
        raise PackingError(f"sum of k(k-1) over K={sizes} must be positive")
    return (g.order - len(involution_closure(g))) // denom


def verify_optimal_bdp(p: Packing) -> Certificate:
    cert = verify_dp(p)
    cert.kind = "optimal-BDP"
    cert.bound = optimality_bound(p.group, p.sizes)
    if not cert.ok:
        return cert
    if not cert.balanced:
        cert.ok = False
        cert.reason = "not balanced"
        cert.witness = {"size_counts": cert.size_counts}
        return cert
    short = {k: c for k, c in cert.size_counts.items() if c != cert.bound}
    if short:
        cert.ok = False
        cert.reason = f"per-size count differs from the bound {cert.bound}"
        cert.witness = {"size_counts": cert.size_counts, "bound": cert.bound}
    return cert


def verify_sdf(group: Group, blocks: Sequence[Sequence[Elem]], lam: int) -> Certificate:
    """Every element, identity included, is covered exactly ``lam`` times."""
    counts = delta(group, blocks).array()
    bad = np.flatnonzero(counts != lam)
    cert = Certificate(
        kind="SDF", ok=not len(bad), group=group.moduli, n_blocks=len(blocks),
        size_counts=dict(sorted(Counter(len(b) for b in blocks).items())),
        max_multiplicity=int(counts.max()) if len(counts) else 0,
        identity_count=int(counts[0]), total_differences=int(counts.sum()),
        leave=frozenset(group.unrank(int(r)) for r in np.flatnonzero(counts == 0)), lam=lam,
    )
    if len(bad):
        r = int(bad[0])
        cert.reason = f"an element is not covered exactly {lam} times"
        cert.witness = {"element": list(group.unrank(r)), "multiplicity": int(counts[r])}
    return cert


# interchange format

def packing_to_dict(p: Packing, certificate: Certificate | None = None) -> dict[str, Any]:
    out: dict[str, Any] = {
        "group": list(p.group.moduli),
        "K": sorted(p.sizes),
        "blocks": [[list(x) for x in b] for b in p.blocks],
    }
    if p.claimed_leave is not None:
        out["claimed_leave"] = list(p.claimed_leave)
    if p.name:
        out["name"] = p.name
    if certificate is not None:
        out["certificate"] = certificate.to_dict()
    return out


def packing_from_dict(doc: dict[str, Any]) -> Packing:
    try:
        group = Group(tuple(doc["group"]))
        blocks = tuple(tuple(tuple(x) for x in b) for b in doc["blocks"])
        sizes = frozenset(doc.get("K", (4, 5)))
    except (KeyError, TypeError) as exc:
        raise PackingError(f"malformed packing document: {exc}") from exc
    leave = doc.get("claimed_leave")
    return Packing(group, blocks, sizes, tuple(leave) if leave else None, doc.get("name", ""))


def write_packing(path: str | Path, p: Packing, certificate: Certificate | None = None) -> None:
    Path(path).write_text(json.dumps(packing_to_dict(p, certificate)) + "\n", encoding="utf-8")


def read_packing(path: str | Path) -> Packing:
    return packing_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def certify(p: Packing) -> Certificate:
    """Pick the strongest applicable check: regular if a leave is claimed, else optimal."""
    if p.claimed_leave is not None:
        return verify_regular(p, *p.claimed_leave)
    return verify_optimal_bdp(p)
