"""Difference matrices over finite abelian groups.

A (G,k;1)-DM is a k x |G| table in which, for every pair of rows, the
column-wise differences run through G exactly once.  Sources, in the order
``dm_get`` tries them: a verified registry on disk, the multiplication table
(cyclic groups with gcd(m,(k-1)!) = 1), the direct product of smaller DMs,
and a seeded backtracking search.  Every matrix handed out is re-verified.
"""
from __future__ import annotations

import json
import logging
import math
import os
import random
import tempfile
import time
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from . import kernels
from .abelian import Group, GroupError, Relabel, iso_relabel, primary_relabel
from .packing import Certificate

log = logging.getLogger(__name__)

__all__ = [
    "DMError", "NoAlgebraicConstruction", "DMUnavailable", "DiffMatrix", "verify_dm",
    "cdm_multiplication", "dm_product", "relabel_dm", "trivial_dm", "SearchResult", "dm_search",
    "Registry", "default_registry", "dm_get", "DEFAULT_SEED", "DEFAULT_BUDGET", "RESTART_BUDGET",
    "REGISTRY_ENV",
]

DEFAULT_SEED = 0
DEFAULT_BUDGET = 5_000_000  # total search nodes across restarts
RESTART_BUDGET = 300_000  # nodes per restart
REGISTRY_ENV = "BDPACK_DM_REGISTRY"


class DMError(ValueError):
    pass


class NoAlgebraicConstruction(DMError):
    """The multiplication-table construction does not apply."""


class DMUnavailable(DMError):
    """No DM could be produced; ``instance`` names the missing (group, k)."""

    def __init__(self, group: Group, k: int, detail: str = ""):
        self.group = group
        self.k = k
        self.instance = f"({group},{k};1)-DM"
        super().__init__(f"{self.instance} unavailable" + (f": {detail}" if detail else ""))


@dataclass(frozen=True, eq=False)
class DiffMatrix:
    """``rows[i, l]`` is the entry in row i, column l, as a coordinate vector."""
    group: Group
    rows: np.ndarray  # (k, |G|, arity) int64
    generator: str = ""
    seed: int | None = None
    note: str = ""

    def __post_init__(self) -> None:
        arr = np.asarray(self.rows, dtype=np.int64)
        if arr.ndim == 2:  # (k, |G|) over a cyclic group
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] != self.group.arity:
            raise DMError(f"entries must have shape (k, {self.group.order}, {self.group.arity}), got {arr.shape}")
        arr = arr % self.group.mod_array
        arr.setflags(write=False)
        object.__setattr__(self, "rows", arr)

    @property
    def k(self) -> int:
        return self.rows.shape[0]

    @property
    def n_columns(self) -> int:
        return self.rows.shape[1]

    def entry(self, i: int, l: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self.rows[i, l])

    def column(self, l: int) -> list[tuple[int, ...]]:
        return [self.entry(i, l) for i in range(self.k)]

    def take(self, k: int) -> "DiffMatrix":
        if k > self.k:
            raise DMError(f"need {k} rows, matrix has {self.k}")
        return DiffMatrix(self.group, self.rows[:k], self.generator, self.seed, self.note)

    def same_entries(self, other: "DiffMatrix") -> bool:
        return self.group == other.group and np.array_equal(self.rows, other.rows)

    def to_dict(self) -> dict[str, Any]:
        return {
            "moduli": list(self.group.moduli),
            "k": self.k,
            "rows": self.rows.tolist(),
            "seed": self.seed,
            "generator": self.generator,
            "key": list(primary_relabel(self.group).target.moduli),
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "DiffMatrix":
        try:
            g = Group(tuple(doc["moduli"]))
            rows = np.array(doc["rows"], dtype=np.int64)
            k = int(doc["k"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DMError(f"malformed DM document: {exc}") from exc
        if rows.ndim == 2:
            rows = rows[:, :, None]
        if rows.shape[0] != k:
            raise DMError(f"document says k={k} but has {rows.shape[0]} rows")
        return cls(g, rows, doc.get("generator", ""), doc.get("seed"), doc.get("note", ""))


# ---------------------------------------------------------------- verification

def verify_dm(d: DiffMatrix) -> Certificate:
    g = d.group
    k, ncol = d.rows.shape[:2]
    if ncol != g.order:
        raise DMError(f"{k} x {ncol} table over {g} needs {g.order} columns")
    cert = Certificate(kind="DM", ok=True, group=g.moduli, n_blocks=k)
    for i in range(k):
        for j in range(i + 1, k):
            diff = g.rank_array((d.rows[i] - d.rows[j]) % g.mod_array)
            counts = np.bincount(diff, minlength=g.order)
            if (counts != 1).any():
                bad = int(np.flatnonzero(counts != 1)[0])
                cols = np.flatnonzero(diff == bad).tolist()
                cert.ok = False
                cert.reason = f"rows {i},{j}: difference {g.unrank(bad)} occurs {int(counts[bad])} times"
                cert.witness = {"rows": [i, j], "element": list(g.unrank(bad)),
                                "count": int(counts[bad]), "columns": cols[:4]}
                return cert
    return cert


# ---------------------------------------------------------------- algebraic constructions

def trivial_dm(k: int) -> DiffMatrix:
    """The 1-column DM over the trivial group (identity of the product)."""
    return DiffMatrix(Group((1,)), np.zeros((k, 1, 1), dtype=np.int64), "algebraic")


def cdm_multiplication(m: int, k: int) -> DiffMatrix:
    """d[i][l] = i*l mod m; a DM whenever every i-j (0 <= j < i < k) is a unit mod m."""
    if m < 1 or k < 1:
        raise DMError(f"bad parameters m={m}, k={k}")
    if math.gcd(m, math.factorial(k - 1)) != 1:
        raise NoAlgebraicConstruction(f"gcd({m}, {k - 1}!) != 1: no multiplication-table ({m},{k};1)-CDM")
    i = np.arange(k, dtype=np.int64)[:, None]
    l = np.arange(m, dtype=np.int64)[None, :]
    return DiffMatrix(Group((m,)), (i * l) % m, "algebraic")


def dm_product(d1: DiffMatrix, d2: DiffMatrix, k: int | None = None) -> DiffMatrix:
    """DM over G x G': column (l1, l2) holds (d1[i][l1], d2[i][l2]), l1 major."""
    k = min(d1.k, d2.k) if k is None else k
    if d1.k < k or d2.k < k:
        raise DMError(f"product needs {k} rows; factors have {d1.k} and {d2.k}")
    a, b = d1.rows[:k], d2.rows[:k]
    n1, n2 = a.shape[1], b.shape[1]
    left = np.repeat(a, n2, axis=1)
    right = np.tile(b, (1, n1, 1))
    g = Group(d1.group.moduli + d2.group.moduli)
    return DiffMatrix(g, np.concatenate([left, right], axis=2), "product")


def relabel_dm(d: DiffMatrix, r: Relabel) -> DiffMatrix:
    """Image of d under a group isomorphism (differences map bijectively, so it stays a DM)."""
    if r.source != d.group:
        raise GroupError(f"relabel source {r.source} is not {d.group}")
    k, n, _ = d.rows.shape
    flat = r.forward_array(d.rows.reshape(k * n, -1))
    return DiffMatrix(r.target, flat.reshape(k, n, -1), d.generator, d.seed, d.note)


# ---------------------------------------------------------------- search

@dataclass
class SearchResult:
    status: str  # found | exhausted | budget
    dm: DiffMatrix | None
    nodes: int
    seed: int
    restarts: int
    strategy: str = ""
    elapsed: float = 0.0
    log: list[tuple[str, int, str, int]] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.status == "found"


@dataclass
class _Problem:
    group: Group
    k: int
    sub: np.ndarray
    neg: np.ndarray

    @cached_property
    def n(self) -> int:
        return self.group.order


def _problem(g: Group, k: int) -> _Problem:
    els = np.array(list(g.elements()), dtype=np.int64).reshape(g.order, g.arity)
    diff = (els[:, None, :] - els[None, :, :]) % g.mod_array
    sub = g.rank_array(diff.reshape(-1, g.arity)).astype(np.int32)
    neg = g.rank_array((-els) % g.mod_array).astype(np.int32)
    return _Problem(g, k, np.ascontiguousarray(sub), neg)


def _scalar_row(g: Group) -> int | None:
    """Smallest c >= 2 with c and c-1 units mod the exponent; x -> c*x is then an orthomorphism."""
    e = math.lcm(*g.moduli)
    for c in range(2, e):
        if math.gcd(c, e) == 1 and math.gcd(c - 1, e) == 1:
            return c
    return None


def _strategies(g: Group) -> list[str]:
    # 'plain' is complete (its exhaustion proves non-existence); the other two
    # impose x -> -x invariance of the column set, and optionally fix row 2 = c*x
    if g.order % 2 == 0 or g.order < 3:
        return ["plain"]
    out = ["negation"]
    if _scalar_row(g) is not None:
        out.append("negation+scalar")
    out.append("plain")
    return out


def _kernel_args(pb: _Problem, strategy: str, seed: int) -> tuple:
    n, k = pb.n, pb.k
    if strategy == "plain":
        orb = np.arange(n, dtype=np.int32)
    else:
        orb = np.minimum(np.arange(n), pb.neg).astype(np.int32)
    # compact orbit ids
    _, orb = np.unique(orb, return_inverse=True)
    orb = orb.astype(np.int32)
    norb = int(orb.max()) + 1
    osz = np.bincount(orb)[orb].astype(np.int32)
    reps = np.array([x for x in range(1, n) if orb[x] != orb[0] and
                     x == min(np.flatnonzero(orb == orb[x]))], dtype=np.int32)
    rng = random.Random(seed)
    order: list[int] = []
    for _ in range(k):
        o = list(range(1, n))
        rng.shuffle(o)
        order += o + [0]
    fixed = np.full(len(reps) * k, -1, dtype=np.int32)
    c = _scalar_row(pb.group) if strategy == "negation+scalar" else None
    els = np.array(list(pb.group.elements()), dtype=np.int64).reshape(n, -1)
    for t, x in enumerate(reps):
        fixed[t * k] = 0
        if k > 1:
            fixed[t * k + 1] = x
        if c is not None and k > 2:
            fixed[t * k + 2] = pb.group.rank(tuple(int(v) for v in (c * els[x]) % pb.group.mod_array))
    return (n, k, pb.sub.ravel(), orb, osz, norb, reps, np.array(order, dtype=np.int32), fixed)


def _expand(pb: _Problem, strategy: str, reps: np.ndarray, vals: np.ndarray) -> DiffMatrix:
    n, k, g = pb.n, pb.k, pb.group
    table = np.zeros((k, n), dtype=np.int64)
    for t, x in enumerate(reps):
        col = vals[t * k:(t + 1) * k]
        table[:, x] = col
        if strategy != "plain":
            table[:, pb.neg[x]] = pb.neg[col]
    els = np.array(list(g.elements()), dtype=np.int64).reshape(n, -1)
    return DiffMatrix(g, els[table], "search")


def dm_search(g: Group, k: int, budget: int = DEFAULT_BUDGET, seed: int = DEFAULT_SEED,
              restart_budget: int = RESTART_BUDGET, strategies: list[str] | None = None,
              backend: Any = None) -> SearchResult:
    """Seeded backtracking search for a (g,k;1)-DM.

    Normalized form: row 0 and column 0 are zero and row 1 lists the group in
    order, so columns are indexed by their row-1 entry.  Each restart uses a
    fresh value order drawn from ``random.Random(seed + restart)``; within a
    round the strategies of ``_strategies(g)`` run in turn, each capped at
    ``restart_budget`` nodes.  A complete ('plain') run that finishes without a
    solution proves there is none.
    """
    impl = backend or kernels
    t0 = time.perf_counter()
    if k < 1 or (g.order > 1 and k > g.order):
        return SearchResult("exhausted", None, 0, seed, 0, "bounds", 0.0)
    if g.order == 1 or k <= 2:
        els = np.array(list(g.elements()), dtype=np.int64).reshape(g.order, -1)
        rows = np.stack([np.zeros_like(els)] + [els] * (k - 1))[:k]
        d = DiffMatrix(g, rows, "search", seed)
        ok = verify_dm(d).ok
        return SearchResult("found" if ok else "exhausted", d if ok else None, 0, seed, 0, "direct")
    pb = _problem(g, k)
    active = list(strategies or _strategies(g))
    nodes_total = 0
    trail: list[tuple[str, int, str, int]] = []
    restart = 0
    while active and nodes_total < budget:
        for strat in list(active):
            left = budget - nodes_total
            if left <= 0:
                break
            s = seed + restart
            args = _kernel_args(pb, strat, s)
            status, nodes, vals = impl.dm_search_kernel(*args, min(restart_budget, left))
            nodes = min(int(nodes), min(restart_budget, left))
            nodes_total += nodes
            trail.append((strat, s, status, nodes))
            if status == "found":
                d = _expand(pb, strat, args[6], np.asarray(vals))
                d = DiffMatrix(g, d.rows, "search", s, f"strategy={strat}")
                cert = verify_dm(d)
                if not cert.ok:  # pragma: no cover - kernel bug guard
                    raise DMError(f"search produced an invalid DM: {cert.reason}")
                return SearchResult("found", d, nodes_total, s, restart, strat,
                                    time.perf_counter() - t0, trail)
            if status in ("exhausted", "infeasible"):
                if strat == "plain":
                    return SearchResult("exhausted", None, nodes_total, seed, restart, strat,
                                        time.perf_counter() - t0, trail)
                active.remove(strat)
        restart += 1
    return SearchResult("budget", None, nodes_total, seed, restart, "", time.perf_counter() - t0, trail)


# ---------------------------------------------------------------- registry

def _key(g: Group, k: int) -> tuple[tuple[int, ...], int]:
    return primary_relabel(g).target.moduli, k


class Registry:
    """A directory of verified DM documents, one JSON file per matrix.

    Entries are keyed by the primary form of the group (so Z_3 x Z_9, Z_9 x Z_3
    and Z_27 never collide, while Z_3 x Z_9 and Z_9 x Z_3 share an entry) and the
    stored labelling is mapped onto the requested one by an explicit isomorphism.
    A ``fallback`` registry (normally the shipped one) is consulted for keys
    this one lacks.
    """

    def __init__(self, path: str | Path | None = None, readonly: bool = False,
                 fallback: "Registry | None" = None):
        self.path = Path(path) if path is not None else None
        self.readonly = readonly
        self.fallback = fallback
        self._cache: dict[tuple, DiffMatrix] | None = None

    def _files(self) -> Iterator[Path]:
        if self.path is None or not self.path.is_dir():
            return iter(())
        return iter(sorted(self.path.glob("*.json")))

    def load(self) -> dict[tuple, DiffMatrix]:
        if self._cache is None:
            self._cache = dict(self.fallback.load()) if self.fallback is not None else {}
            for f in self._files():
                try:
                    doc = json.loads(f.read_text(encoding="utf-8"))
                    d = DiffMatrix.from_dict(doc)
                except (OSError, ValueError) as exc:
                    log.warning("skipping unreadable registry entry %s: %s", f, exc)
                    continue
                if not doc.get("verified") or not verify_dm(d).ok:
                    log.warning("skipping registry entry %s: does not verify", f)
                    continue
                d = DiffMatrix(d.group, d.rows, d.generator or "registry", d.seed, f"registry:{f.name}")
                self._cache[_key(d.group, d.k)] = d
        return self._cache

    def lookup(self, g: Group, k: int) -> DiffMatrix | None:
        entries = self.load()
        target = primary_relabel(g).target.moduli
        best = entries.get((target, k))
        if best is None:
            more = [d for (key, kk), d in entries.items() if key == target and kk > k]
            best = min(more, key=lambda d: d.k) if more else None
        if best is None:
            return None
        d = best.take(k)
        if d.group != g:
            d = relabel_dm(d, primary_relabel(d.group).then(primary_relabel(g).inverted()))
        return d

    def add(self, d: DiffMatrix) -> Path:
        if self.path is None or self.readonly:
            raise DMError("registry is read-only")
        cert = verify_dm(d)
        if not cert.ok:
            raise DMError(f"refusing to store an unverified DM: {cert.reason}")
        self.path.mkdir(parents=True, exist_ok=True)
        doc = d.to_dict()
        doc["verified"] = True
        name = f"dm_{d.group.label()}_k{d.k}.json"
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".json", dir=self.path)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(doc, fh)
                fh.write("\n")
            os.chmod(tmp, 0o644)
            os.replace(tmp, self.path / name)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self._cache = None
        return self.path / name


def _shipped_path() -> Path:
    return Path(str(resources.files("bdpack").joinpath("data/dm")))


def default_registry() -> Registry:
    shipped = Registry(_shipped_path(), readonly=True)
    env = os.environ.get(REGISTRY_ENV)
    if env:
        return Registry(env, fallback=shipped)
    return shipped


_memo: dict[tuple, DiffMatrix] = {}


def dm_get(g: Group, k: int, registry: Registry | None = None, search: bool = True,
           budget: int = DEFAULT_BUDGET, seed: int = DEFAULT_SEED) -> DiffMatrix:
    """A verified (g,k;1)-DM from the registry, algebra, products, or search.

    The group is split into its primary components; components whose prime is
    >= k use multiplication tables, the rest (the 'small-prime part') come from
    the registry or from search.  The pieces are multiplied and mapped back
    onto the requested labelling.
    """
    reg = registry if registry is not None else default_registry()
    memo_key = (g.moduli, k, str(reg.path), str(reg.fallback.path if reg.fallback else None), search)
    if memo_key in _memo:
        return _memo[memo_key]
    d = _dm_get(g, k, reg, search, budget, seed)
    cert = verify_dm(d)
    if not cert.ok:  # enforced, never assumed
        raise DMError(f"internal: produced DM over {g} fails verification: {cert.reason}")
    _memo[memo_key] = d
    return d


def _multiset_le(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    ca, cb = Counter(a), Counter(b)
    return all(cb[x] >= c for x, c in ca.items())


def _minus(b: tuple[int, ...], a: tuple[int, ...]) -> tuple[int, ...]:
    left = Counter(b)
    left.subtract(Counter(a))
    return tuple(sorted(left.elements()))


def _assemble(g: Group, k: int, core: DiffMatrix | None, large: tuple[int, ...]) -> DiffMatrix:
    parts = ([core] if core is not None else []) + [cdm_multiplication(q, k) for q in large]
    prod = parts[0]
    for d in parts[1:]:
        prod = dm_product(prod, d, k)
    gen = prod.generator if len(parts) == 1 else "product"
    out = relabel_dm(prod, iso_relabel(prod.group, g))
    return DiffMatrix(g, out.rows, gen, prod.seed, prod.note)


def _dm_get(g: Group, k: int, reg: Registry, search: bool, budget: int, seed: int) -> DiffMatrix:
    hit = reg.lookup(g, k)
    if hit is not None:
        return hit
    p_mods = primary_relabel(g).target.moduli
    if g.order == 1:
        return DiffMatrix(g, np.zeros((k, 1, g.arity), dtype=np.int64), "algebraic")
    fact = math.factorial(k - 1)
    small = tuple(q for q in p_mods if math.gcd(q, fact) != 1)
    large = tuple(q for q in p_mods if math.gcd(q, fact) == 1)
    if not small:
        return _assemble(g, k, None, large)
    # a stored DM over a subproduct that absorbs every small-prime component
    cands = []
    for (key, kk) in reg.load():
        if kk >= k and _multiset_le(small, key) and _multiset_le(key, p_mods):
            rest = _minus(p_mods, key)
            if all(math.gcd(q, fact) == 1 for q in rest):
                cands.append((math.prod(key), key))
    if cands:
        _, key = min(cands)
        core = reg.lookup(Group(key), k)
        return _assemble(g, k, core, _minus(p_mods, key))
    if not search:
        raise DMUnavailable(Group(small), k, "not in registry and search disabled")
    # search the small-prime part, then that part times the smallest large factor
    tries = [small] + ([small + large[:1]] if large else [])
    status = ""
    for core_mods in tries:
        res = dm_search(Group(core_mods), k, budget=budget, seed=seed)
        if res.found:
            return _assemble(g, k, res.dm, _minus(p_mods, core_mods))
        status = f"search {res.status} after {res.nodes} nodes"
    raise DMUnavailable(Group(small), k, status)
