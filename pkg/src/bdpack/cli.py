"""Command-line interface.

Exit codes: 0 success or positive certificate, 1 negative certificate (or
no DM found), 2 usage error, 3 blocked plan.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from . import catalog
from .abelian import Group
from .diffmat import (DEFAULT_BUDGET, DEFAULT_SEED, REGISTRY_ENV, DiffMatrix, DMError, Registry,
                      default_registry, dm_search, verify_dm)
from .engine import PlanError, execute, plan
from .kernels import BACKEND
from .oospc import OOSPCError, code_from_dict, to_patterns, verify_oospc, write_code
from .packing import Certificate, PackingError, certify, packing_from_dict, verify_dp, write_packing

EXIT_OK, EXIT_NEG, EXIT_USAGE, EXIT_BLOCKED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _parse_group(text: str) -> Group:
    try:
        mods = tuple(int(x) for x in text.lower().replace("z", "").split("x"))
    except ValueError:
        raise UsageError(f"bad group {text!r}; use e.g. 2x6 or 27") from None
    if not mods or any(m < 1 for m in mods):
        raise UsageError(f"bad group {text!r}")
    return Group(mods)


def _registry(path: str | None) -> Registry:
    if path:
        shipped = default_registry()
        return Registry(path, fallback=shipped if shipped.path != Path(path) else None)
    return default_registry()


def _load_json(path: str) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not JSON: {exc}") from None


def _report(cert: Certificate, label: str) -> int:
    counts = ", ".join(f"{k}: {v}" for k, v in cert.size_counts.items())
    status = "POSITIVE" if cert.ok else "NEGATIVE"
    print(f"{label}: {status} ({cert.kind}) over {'x'.join(map(str, cert.group))}")
    if counts:
        print(f"  per-size counts {{{counts}}}")
    if cert.bound is not None:
        print(f"  bound {cert.bound} per size")
    if cert.regular:
        print(f"  regular with leave {'x'.join(map(str, cert.regular))}")
    if cert.info:
        print("  " + ", ".join(f"{k} {v}" for k, v in cert.info.items()))
    if not cert.ok:
        print(f"  reason: {cert.reason}")
        if cert.witness:
            print(f"  witness: {json.dumps(cert.witness)}")
    return EXIT_OK if cert.ok else EXIT_NEG


# ---------------------------------------------------------------- commands

def cmd_construct(args: argparse.Namespace) -> int:
    u, v = args.u, args.v
    if u < 1 or v < 1 or u % 2 == 0 or v % 2 == 0:
        raise UsageError(f"u and v must be odd positive integers (got {u}, {v})")
    print(f"# bdpack construct {u} {v} seed={args.seed} budget={args.budget} "
          f"search={'on' if args.search else 'off'} backend={BACKEND}")
    p = plan(u, v, registry=_registry(args.registry), allow_search=args.search,
             budget=args.budget, seed=args.seed)
    if args.explain:
        print(p.explain())
    if p.blocked:
        print(f"blocked: missing {', '.join(p.missing)}", file=sys.stderr)
        return EXIT_BLOCKED
    packing, cert = execute(p, recertify=not args.no_recertify)
    out = Path(args.out or f"bdp_{4 * u}x{8 * v}.json")
    write_packing(out, packing, cert)
    rc = _report(cert, f"optimal BDP over Z{4 * u} x Z{8 * v}")
    print(f"  {len(packing.blocks)} blocks written to {out}")
    return rc


def cmd_verify(args: argparse.Namespace) -> int:
    doc = _load_json(args.file)
    if "codewords" in doc:
        return _report(verify_oospc(code_from_dict(doc)), f"OOSPC {args.file}")
    if "rows" in doc and "moduli" in doc:
        return _report(verify_dm(DiffMatrix.from_dict(doc)), f"DM {args.file}")
    if "blocks" in doc:
        p = packing_from_dict(doc)
        cert = verify_dp(p) if args.dp else certify(p)
        return _report(cert, f"packing {args.file}")
    raise UsageError(f"{args.file}: not a packing, DM or OOSPC document")


def cmd_dm_find(args: argparse.Namespace) -> int:
    g = _parse_group(args.group)
    print(f"# bdpack dm find --group {args.group} --k {args.k} seed={args.seed} budget={args.budget} backend={BACKEND}")
    res = dm_search(g, args.k, budget=args.budget, seed=args.seed)
    print(f"status {res.status} after {res.nodes} nodes, {res.restarts} restart(s), "
          f"strategy {res.strategy or '-'}, seed {res.seed}, {res.elapsed:.2f}s")
    if not res.found:
        return EXIT_NEG
    assert res.dm is not None
    cert = verify_dm(res.dm)
    rc = _report(cert, f"DM over {g.label()}")
    if args.out:
        doc = res.dm.to_dict()
        Path(args.out).write_text(json.dumps(doc) + "\n", encoding="utf-8")
        print(f"  written to {args.out}")
    reg_path = args.registry or os.environ.get(REGISTRY_ENV) or None
    if reg_path and cert.ok:
        print(f"  stored in registry: {Registry(reg_path).add(res.dm)}")
    return rc


def cmd_dm_verify(args: argparse.Namespace) -> int:
    doc = _load_json(args.file)
    try:
        d = DiffMatrix.from_dict(doc)
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"{args.file}: not a DM document ({exc})") from None
    return _report(verify_dm(d), f"DM {args.file}")


def cmd_catalog_list(args: argparse.Namespace) -> int:
    for ident in catalog.catalog_ids():
        p = catalog.catalog_entry(ident)
        leave = "optimal" if p.claimed_leave is None else "leave " + "x".join(map(str, p.claimed_leave))
        print(f"{ident:28s} {p.group.label():10s} {len(p.blocks):4d} blocks  {leave}")
    for name in catalog.template_names():
        print(f"template:{name}")
    return EXIT_OK


def cmd_catalog_show(args: argparse.Namespace) -> int:
    if args.id.startswith("template:"):
        t = catalog.template(args.id.split(":", 1)[1])
        print(f"{t.name}: base {t.base}, {len(t.blocks)} blocks, parameters {', '.join(t.param_names)}")
        for b in t.blocks:
            print(f"  {b.name}: " + (f"negation of {b.negate_of}" if b.negate_of else str(b.elements)))
        return EXIT_OK
    p = catalog.catalog_entry(args.id)
    cert = certify(p)
    if args.out:
        write_packing(args.out, p, cert)
    for b in p.blocks:
        print("{" + ", ".join("(" + ",".join(map(str, x)) + ")" for x in b) + "}")
    return _report(cert, args.id)


def cmd_oospc_export(args: argparse.Namespace) -> int:
    p = packing_from_dict(_load_json(args.file))
    ps = to_patterns(p)
    cert = verify_oospc(ps)
    out = Path(args.out or Path(args.file).with_suffix(".oospc.json"))
    write_code(out, ps)
    rc = _report(cert, f"OOSPC from {args.file}")
    print(f"  {len(ps)} codewords written to {out}")
    return rc


def cmd_oospc_check(args: argparse.Namespace) -> int:
    return _report(verify_oospc(code_from_dict(_load_json(args.file))), f"OOSPC {args.file}")


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bdpack", description="Optimal balanced {4,5} difference packings: "
                                 "construction, certification, DM search and OOSPC export.")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build a certified optimal BDP over Z_4u x Z_8v")
    c.add_argument("u", type=int)
    c.add_argument("v", type=int)
    c.add_argument("--out", help="output file (default bdp_<4u>x<8v>.json)")
    c.add_argument("--explain", action="store_true", help="print the derivation tree")
    c.add_argument("--no-recertify", action="store_true", help="certify only the final packing")
    c.add_argument("--registry", help=f"DM registry directory (default: ${REGISTRY_ENV} or the shipped one)")
    c.add_argument("--search", action="store_true", help="search for DMs missing from the registry")
    c.add_argument("--seed", type=int, default=DEFAULT_SEED)
    c.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    c.set_defaults(func=cmd_construct)

    vf = sub.add_parser("verify", help="re-certify a packing, DM or OOSPC file")
    vf.add_argument("file")
    vf.add_argument("--dp", action="store_true", help="for packings: only check the DP property")
    vf.set_defaults(func=cmd_verify)

    dm = sub.add_parser("dm", help="difference matrices")
    dsub = dm.add_subparsers(dest="dm_command", required=True)
    f = dsub.add_parser("find", help="seeded backtracking search")
    f.add_argument("--group", required=True, help="e.g. 2x6, 3x9, 27")
    f.add_argument("--k", type=int, default=5)
    f.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    f.add_argument("--seed", type=int, default=DEFAULT_SEED)
    f.add_argument("--registry", help="store the result in this registry directory")
    f.add_argument("--out", help="also write the DM to this file")
    f.set_defaults(func=cmd_dm_find)
    dv = dsub.add_parser("verify", help="verify a DM file")
    dv.add_argument("file")
    dv.set_defaults(func=cmd_dm_verify)

    cat = sub.add_parser("catalog", help="browse the tabulated data")
    csub = cat.add_subparsers(dest="catalog_command", required=True)
    csub.add_parser("list").set_defaults(func=cmd_catalog_list)
    cs = csub.add_parser("show")
    cs.add_argument("id")
    cs.add_argument("--out", help="write the entry as a packing file")
    cs.set_defaults(func=cmd_catalog_show)

    oo = sub.add_parser("oospc", help="optical orthogonal signature pattern codes")
    osub = oo.add_subparsers(dest="oospc_command", required=True)
    oe = osub.add_parser("export", help="packing file -> code file")
    oe.add_argument("file")
    oe.add_argument("--out")
    oe.set_defaults(func=cmd_oospc_export)
    oc = osub.add_parser("check", help="verify a code file")
    oc.add_argument("file")
    oc.set_defaults(func=cmd_oospc_check)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (catalog.CatalogError, PackingError, OOSPCError, DMError, PlanError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEG if isinstance(exc, (PackingError, OOSPCError)) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
