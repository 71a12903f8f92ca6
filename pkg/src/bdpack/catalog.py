"""Static block lists and parameter tables, parsed from ``data/tables.txt``.

The data file keeps every literal exactly as printed (negative entries
included); reduction mod p or mod a coordinate modulus happens on use.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterator

from .abelian import Elem, Group
from .packing import Packing
from .residues import build_tables, is_prime

__all__ = [
    "CatalogError", "CoverageError", "ParamExpr", "ResidueClass", "TemplateBlock", "LemmaTemplate",
    "APPENDIX_A_KEYS", "appendix_a", "appendix_b", "optimal_4x24", "base_4x40", "sdf_4x8",
    "template", "template_names", "lemma_params", "param_class", "matching_classes", "catalog_ids", "catalog_entry",
]


class CatalogError(KeyError):
    """Requested entry is not in the catalog."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else "not in catalog"


class CoverageError(ValueError):
    """A prime is outside a table's domain or matches no listed residue class."""


# ---------------------------------------------------------------- expressions

_TERM = re.compile(r"([+-]?)(\d*)(x(?:\^(\d+))?)?")


@dataclass(frozen=True)
class ParamExpr:
    """c0 + c1*x + c2*x^2 + c3*x^3, with x the smallest non-residue mod p."""
    coeffs: tuple[int, int, int, int]

    @classmethod
    def parse(cls, text: str) -> "ParamExpr":
        s = text.replace(" ", "")
        if not s:
            raise ValueError("empty parameter expression")
        c = [0, 0, 0, 0]
        pos = 0
        while pos < len(s):
            m = _TERM.match(s, pos)
            if m is None or m.end() == pos or (pos > 0 and not m.group(1)):
                raise ValueError(f"cannot parse parameter expression {text!r}")
            sign = -1 if m.group(1) == "-" else 1
            if m.group(3):
                deg = int(m.group(4) or 1)
                coef = int(m.group(2)) if m.group(2) else 1
            else:
                if not m.group(2):
                    raise ValueError(f"cannot parse parameter expression {text!r}")
                deg, coef = 0, int(m.group(2))
            if deg > 3:
                raise ValueError(f"degree {deg} too large in {text!r}")
            c[deg] += sign * coef
            pos = m.end()
        return cls(tuple(c))  # type: ignore[arg-type]

    @property
    def is_integer(self) -> bool:
        return not any(self.coeffs[1:])

    def evaluate(self, p: int, xi: int) -> int:
        c0, c1, c2, c3 = self.coeffs
        return (c0 + c1 * xi + c2 * xi * xi + c3 * xi ** 3) % p

    def __str__(self) -> str:
        parts = []
        for deg, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if deg == 0 else ("x" if deg == 1 else f"x^{deg}")
            num = str(abs(c)) if (abs(c) != 1 or deg == 0) else ""
            parts.append(("-" if c < 0 else "+") + num + mono)
        out = "".join(parts) or "0"
        return out[1:] if out.startswith("+") else out


@dataclass(frozen=True)
class ResidueClass:
    residues: tuple[int, ...]
    modulus: int

    def matches(self, p: int) -> bool:
        return p % self.modulus in self.residues

    def __str__(self) -> str:
        return f"{','.join(map(str, self.residues))} mod {self.modulus}"


# ---------------------------------------------------------------- templates

@dataclass(frozen=True)
class TemplateBlock:
    """Either explicit elements (i, j, token) or a negated copy of another block."""
    name: str
    elements: tuple[tuple[int, int, str], ...] = ()
    negate_of: str | None = None


# multiplier selector names understood by ``direct``
SQUARES = "squares"
SQUARES_MOD_SIGN = "squares_mod_sign"
UNITS = "units"


@dataclass(frozen=True)
class LemmaTemplate:
    name: str
    base: tuple[int, int]
    blocks: tuple[TemplateBlock, ...]
    multipliers: tuple[str, ...]
    param_names: tuple[str, ...]
    classes: tuple[tuple[ResidueClass, tuple[ParamExpr, ...]], ...]
    domain: str

    def in_domain(self, p: int) -> bool:
        if not is_prime(p):
            return False
        if self.name.endswith("3mod4"):
            return p % 4 == 3 and p >= 7
        return p % 4 == 1 and p > 5


# per-template multiplier sets, in block order; the data file lists the blocks
_MULTIPLIERS = {
    "4x8p_3mod4": (SQUARES,) * 4,
    "4x8p_1mod4": (SQUARES_MOD_SIGN,) * 8,
    "4x24p_3mod4": (SQUARES,) * 12,
    "4x24p_1mod4": (SQUARES_MOD_SIGN,) * 2 + (UNITS,) * 2 + (SQUARES,) * 7,
}

_DOMAINS = {
    "4x8p_3mod4": "p = 3 (mod 4), p >= 7",
    "4x8p_1mod4": "p = 1 (mod 4), p > 5",
    "4x24p_3mod4": "p = 3 (mod 4), p >= 7",
    "4x24p_1mod4": "p = 1 (mod 4), p > 5",
}


# ---------------------------------------------------------------- parsing

_ELEM = re.compile(r"\(([^()]*)\)")


def _parse_block(line: str) -> list[tuple[str, ...]]:
    body = line.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise ValueError(f"malformed block line {line!r}")
    return [tuple(t.strip() for t in m.group(1).split(",")) for m in _ELEM.finditer(body)]


def _parse_class(spec: str) -> ResidueClass:
    res, _, mod = spec.partition("mod")
    return ResidueClass(tuple(int(r) for r in res.split(",")), int(mod))


@dataclass
class _Raw:
    packings: dict[tuple, list[list[tuple[int, ...]]]]
    templates: dict[str, tuple[tuple[int, int], list[TemplateBlock]]]
    params: dict[str, tuple[tuple[str, ...], list[tuple[ResidueClass, tuple[ParamExpr, ...]]]]]


def _sections(text: str) -> Iterator[tuple[list[str], list[str]]]:
    head: list[str] | None = None
    body: list[str] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if head is not None:
                yield head, body
            head, body = line.strip("[]").split(), []
        else:
            body.append(line)
    if head is not None:
        yield head, body


@lru_cache(maxsize=1)
def _raw() -> _Raw:
    text = resources.files("bdpack").joinpath("data/tables.txt").read_text(encoding="utf-8")
    out = _Raw({}, {}, {})
    for head, body in _sections(text):
        kind = head[0]
        if kind == "template":
            blocks = []
            for line in body:
                name, rest = line.split(None, 1)
                if rest.startswith("neg"):
                    blocks.append(TemplateBlock(name, negate_of=rest.split()[1]))
                else:
                    elems = tuple((int(a), int(b), c) for a, b, c in _parse_block(rest))
                    blocks.append(TemplateBlock(name, elems))
            out.templates[head[1]] = ((int(head[2]), int(head[3])), blocks)
        elif kind == "params":
            names = tuple(head[2:])
            rows = []
            for line in body:
                spec, _, entries = line.partition(":")
                exprs = tuple(ParamExpr.parse(e) for e in entries.split(","))
                if len(exprs) != len(names):
                    raise ValueError(f"{head[1]}: row {spec.strip()!r} has {len(exprs)} entries, want {len(names)}")
                rows.append((_parse_class(spec), exprs))
            out.params[head[1]] = (names, rows)
        else:
            key = (kind,) + tuple(int(a) for a in head[1:])
            out.packings[key] = [[tuple(int(c) for c in e) for e in _parse_block(l)] for l in body]
    return out


# ---------------------------------------------------------------- packings

APPENDIX_A_KEYS: tuple[tuple[int, int, int, int], ...] = (
    (2, 36, 2, 4), (2, 72, 2, 8), (2, 108, 2, 12), (4, 72, 4, 8), (6, 12, 2, 4),
    (6, 36, 2, 12), (12, 24, 4, 8), (18, 4, 2, 4), (18, 12, 2, 12),
)


def _blocks(key: tuple) -> list[list[tuple[int, ...]]]:
    try:
        return _raw().packings[key]
    except KeyError:
        raise CatalogError(f"{' '.join(map(str, key))} is not in the catalog") from None


def appendix_a(u: int, v: int, g: int, h: int) -> Packing:
    """Regular (g x h)-leave BDP over Z_u x Z_v from the small-case table."""
    key = (u, v, g, h)
    if key not in APPENDIX_A_KEYS:
        raise CatalogError(f"({u},{v},{g},{h}) is not in the catalog")
    grp = Group.of(u, v)
    blocks = [tuple(grp.reduce(e) for e in b) for b in _blocks(("appendix_a",) + key)]
    return Packing(grp, tuple(blocks), claimed_leave=(g, h), name=f"table {u}x{v} leave {g}x{h}")


def appendix_b() -> Packing:
    """Optimal balanced BDP over Z_4 x Z_120 (14 blocks of each size)."""
    grp = Group.of(4, 120)
    blocks = [tuple(grp.reduce(e) for e in b) for b in _blocks(("appendix_b",))]
    return Packing(grp, tuple(blocks), name="optimal 4x120 table")


def optimal_4x24() -> Packing:
    grp = Group.of(4, 24)
    blocks = [tuple(grp.reduce(e) for e in b) for b in _blocks(("optimal_4x24",))]
    return Packing(grp, tuple(blocks), name="optimal 4x24 table")


def base_4x40() -> Packing:
    """Regular (4 x 8)-leave BDP over Z_4 x Z_40, the p = 5 case of the 4x8p family."""
    grp = Group.of(4, 40)
    blocks = [tuple(grp.reduce(e) for e in b) for b in _blocks(("base_4x40",))]
    return Packing(grp, tuple(blocks), claimed_leave=(4, 8), name="table 4x40 leave 4x8")


def sdf_4x8(lam: int) -> list[tuple[Elem, ...]]:
    """Strong difference family over Z_4 x Z_8 as multiset blocks (repeats kept)."""
    if lam not in (2, 4):
        raise CatalogError(f"no strong difference family with lambda={lam} in the catalog")
    grp = Group.of(4, 8)
    return [tuple(grp.reduce(e) for e in b) for b in _blocks(("sdf_4x8", lam))]


# ---------------------------------------------------------------- parameter tables

@lru_cache(maxsize=None)
def template(name: str) -> LemmaTemplate:
    raw = _raw()
    if name not in raw.templates:
        raise CatalogError(f"unknown template {name!r}; have {sorted(raw.templates)}")
    base, blocks = raw.templates[name]
    names, rows = raw.params.get(name, ((), []))
    mult = _MULTIPLIERS[name]
    if len(mult) != len(blocks):
        raise ValueError(f"{name}: {len(blocks)} blocks but {len(mult)} multiplier sets")
    return LemmaTemplate(name, base, tuple(blocks), mult, names, tuple(rows), _DOMAINS[name])


def template_names() -> list[str]:
    return sorted(_raw().templates)


def matching_classes(name: str, p: int) -> list[ResidueClass]:
    """Every residue class of ``template(name)`` containing p (coverage checks want exactly one)."""
    return [cls for cls, _ in template(name).classes if cls.matches(p)]


def param_class(name: str, p: int) -> ResidueClass:
    """The unique residue class of ``template(name)`` that contains p."""
    t = template(name)
    if not t.in_domain(p):
        raise CoverageError(f"p={p} is outside the domain of {name} ({t.domain})")
    hits = matching_classes(name, p)
    if not hits:
        raise CoverageError(f"p={p} lies in no residue class of {name}")
    # first listed class wins; the coverage tests check there is never more than one
    return hits[0]


def lemma_params(name: str, p: int) -> dict[str, int]:
    """Parameter assignment for prime p, with x := smallest non-residue, reduced mod p."""
    t = template(name)
    cls = param_class(name, p)
    xi = build_tables(p).xi
    exprs = dict(t.classes)[cls]
    return {n: e.evaluate(p, xi) for n, e in zip(t.param_names, exprs)}


# ---------------------------------------------------------------- browsing

def catalog_ids() -> list[str]:
    ids = ["appendix_b", "optimal_4x24", "base_4x40"]
    ids += ["appendix_a:{}x{}:{}x{}".format(*k) for k in APPENDIX_A_KEYS]
    return ids


def catalog_entry(ident: str) -> Packing:
    if ident == "appendix_b":
        return appendix_b()
    if ident == "optimal_4x24":
        return optimal_4x24()
    if ident == "base_4x40":
        return base_4x40()
    m = re.fullmatch(r"appendix_a:(\d+)x(\d+):(\d+)x(\d+)", ident)
    if m:
        return appendix_a(*(int(a) for a in m.groups()))
    raise CatalogError(f"unknown catalog id {ident!r}")
