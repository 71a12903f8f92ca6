"""Regenerate the shipped DM registry from fixed seeds.

    python tools/build_registry.py [--out DIR] [--budget N] [--extra 3x27]
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

from bdpack.abelian import Group
from bdpack.diffmat import DEFAULT_BUDGET, DEFAULT_SEED, Registry, dm_search

SHIPPED = [(2, 6), (3, 3), (3, 5), (3, 9), (27,)]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/bdpack/data/dm"))
    ap.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--extra", nargs="*", default=[], help="additional groups, e.g. 3x27")
    args = ap.parse_args()
    reg = Registry(args.out)
    groups = SHIPPED + [tuple(int(m) for m in e.split("x")) for e in args.extra]
    for mods in groups:
        t0 = time.perf_counter()
        res = dm_search(Group(mods), 5, budget=args.budget, seed=args.seed)
        took = time.perf_counter() - t0
        print(f"{'x'.join(map(str, mods))}: {res.status} nodes={res.nodes} seed={res.seed} "
              f"strategy={res.strategy} {took:.1f}s", flush=True)
        if res.found:
            reg.add(res.dm)


if __name__ == "__main__":
    main()
