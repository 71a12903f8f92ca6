"""Compare the compiled and pure-Python kernels.

Runs both backends on the same inputs, checks they agree, and prints the
median wall time of each together with the speedup.

    python benchmarks/bench_kernels.py [--repeat N] [--quick]
"""
from __future__ import annotations

import argparse
import statistics
import sys
from time import perf_counter

import numpy as np

from bdpack import engine
from bdpack.abelian import Group
from bdpack.diffmat import dm_search
from bdpack.kernels import backends


def _time(fn, repeat: int):
    times, out = [], None
    for _ in range(repeat):
        t0 = perf_counter()
        out = fn()
        times.append(perf_counter() - t0)
    return statistics.median(times), out


def bench_count(packings, impls, repeat):
    rows = []
    for label, p in packings:
        coords, offsets = p.arrays
        g = p.group
        res = {}
        for name, mod in impls.items():
            res[name] = _time(lambda: mod.count_differences(g.mod_array, coords, offsets, g.order), repeat)
        ref = next(iter(res.values()))[1]
        assert all(np.array_equal(r[1], ref) for r in res.values()), f"backends disagree on {label}"
        rows.append((f"count_differences {label}", {k: v[0] for k, v in res.items()}))
    return rows


def bench_search(groups, impls, repeat):
    rows = []
    for mods in groups:
        res = {}
        for name, mod in impls.items():
            res[name] = _time(lambda: dm_search(Group(mods), 5, backend=mod), repeat)
        nodes = {r[1].nodes for r in res.values()}
        assert len(nodes) == 1, f"backends disagree on {mods}"
        label = f"dm_search Z{'xZ'.join(map(str, mods))} ({nodes.pop()} nodes)"
        rows.append((label, {k: v[0] for k, v in res.items()}))
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="skip the larger inputs")
    args = ap.parse_args(argv)

    impls = backends()
    if "cython" not in impls:
        print("compiled extension not available; only the fallback will be timed", file=sys.stderr)

    sizes = [(3, 3), (7, 7)] if args.quick else [(3, 3), (7, 7), (15, 15), (25, 25)]
    packings = [(f"{4 * u}x{8 * v}", engine.construct_optimal(u, v)[0]) for u, v in sizes]
    groups = [(2, 6), (3, 5)] if args.quick else [(2, 6), (3, 3), (3, 5)]

    rows = bench_count(packings, impls, args.repeat) + bench_search(groups, impls, args.repeat)
    names = list(impls)
    print(f"{'kernel':48s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, t in rows:
        line = f"{label:48s}" + "".join(f"{t[n] * 1e3:10.2f}ms" for n in names)
        if len(names) > 1:
            line += f"{t['python'] / t['cython']:11.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
