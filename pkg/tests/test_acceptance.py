"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed as they complete and again in the terminal summary.
"""
import random
from contextlib import contextmanager
from time import perf_counter

import pytest

from bdpack import catalog, engine
from bdpack.abelian import Group, crt_relabel
from bdpack.catalog import matching_classes, template, template_names
from bdpack.compose import fill, inflate, inflate_axis, relabel
from bdpack.diffmat import cdm_multiplication, default_registry, dm_get, dm_search, verify_dm
from bdpack.direct import bdp_4x8p, bdp_4x24p
from bdpack.oospc import to_patterns, verify_oospc
from bdpack.packing import certify, empty_packing, packing_delta, verify_sdf
from bdpack.residues import ResidueError, build_tables, find_theta, is_prime

import oracles
from conftest import ACCEPTANCE


@contextmanager
def record(n, title):
    state = {"detail": ""}
    t0 = perf_counter()
    ok = False
    try:
        yield state
        ok = True
    finally:
        detail = f"{state['detail']} [{perf_counter() - t0:.2f}s]".strip()
        ACCEPTANCE[n] = (title, ok, detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {title}: {detail}")


def _merged(p):
    return relabel(p, crt_relabel(p.group, 1, 2), recertify=False)


def test_c01_appendix_b():
    with record(1, "4x120 list is an optimal balanced BDP") as st:
        t0 = perf_counter()
        p = catalog.appendix_b()
        cert = certify(p)
        dc = packing_delta(p)
        elapsed = perf_counter() - t0
        assert cert.ok and cert.balanced and cert.size_counts == {4: 14, 5: 14}
        assert cert.bound == (4 * 120 - 4) // 32 == 14
        counts = dc.array()
        assert counts[0] == 0
        assert int(counts.sum()) == 448 and int(counts.max()) == 1
        leave = oracles.leave((4, 120), p.blocks)
        assert len(leave) == 32 and set(oracles.involutions((4, 120))) <= leave
        assert oracles.is_optimal((4, 120), p.blocks)
        assert elapsed < 1.0
        st["detail"] = f"14+14 blocks, 448 distinct differences, |leave|=32, {elapsed:.3f}s"


def test_c02_appendix_a():
    with record(2, "nine small base families are regular BDPs") as st:
        t0 = perf_counter()
        certs = []
        for key in catalog.APPENDIX_A_KEYS:
            u, v, g, h = key
            p = catalog.appendix_a(*key)
            cert = certify(p)
            per = (u * v - g * h) // 32
            certs.append(cert.ok and cert.regular == (g, h) and cert.size_counts == {4: per, 5: per})
        elapsed = perf_counter() - t0
        for key in catalog.APPENDIX_A_KEYS:
            assert oracles.is_regular(key[:2], catalog.appendix_a(*key).blocks, key[2:])
        assert len(certs) == 9 and all(certs)
        assert certify(catalog.appendix_a(12, 24, 4, 8)).size_counts == {4: 8, 5: 8}
        assert elapsed < 1.0
        st["detail"] = f"9/9 certified, {elapsed:.3f}s"


def test_c03_small_lists_and_sdfs():
    with record(3, "optimal 4x24 list and the two 4x8 SDFs") as st:
        o = catalog.optimal_4x24()
        cert = certify(o)
        assert cert.ok and cert.size_counts == {4: 2, 5: 2} and oracles.is_optimal((4, 24), o.blocks)
        for lam in (2, 4):
            fam = catalog.sdf_4x8(lam)
            assert verify_sdf(Group.of(4, 8), fam, lam).ok
            counts = oracles.diffs((4, 8), fam)
            assert all(counts[x] == lam for x in oracles.all_elements((4, 8)))
        st["detail"] = "4x24 optimal (2 per size); SDFs exact with lambda 2 and 4 on all 32 elements"


def test_c04_bdp_4x8p():
    with record(4, "bdp_4x8p regular for primes 5..97") as st:
        primes = [p for p in oracles.primes_below(98) if p >= 5]
        t0 = perf_counter()
        bad = []
        for p in primes:
            cert = certify(_merged(bdp_4x8p(p)))
            if not (cert.ok and cert.regular == (4, 8) and cert.size_counts == {4: p - 1, 5: p - 1}):
                bad.append(p)
        elapsed = perf_counter() - t0
        classes = {str(c) for p in primes if p > 5 for name in template_names()
                   if name.startswith("4x8p") and template(name).in_domain(p)
                   for c in matching_classes(name, p)}
        assert not bad, f"failed for {bad}"
        assert elapsed < 5.0
        st["detail"] = f"{len(primes)} primes, {len(classes)} parameter classes, {elapsed:.2f}s"


def test_c05_bdp_4x24p():
    with record(5, "bdp_4x24p regular for primes 7..97") as st:
        primes = [p for p in oracles.primes_below(98) if p >= 7]
        t0 = perf_counter()
        bad = []
        for p in primes:
            cert = certify(_merged(bdp_4x24p(p)))
            n = 3 * (p - 1)
            if not (cert.ok and cert.regular == (4, 24) and cert.size_counts == {4: n, 5: n}):
                bad.append(p)
        elapsed = perf_counter() - t0
        classes = {str(c) for p in primes for name in template_names()
                   if name.startswith("4x24p") and template(name).in_domain(p)
                   for c in matching_classes(name, p)}
        assert not bad, f"failed for {bad}"
        assert elapsed < 10.0
        st["detail"] = f"{len(primes)} primes, {len(classes)} parameter classes, {elapsed:.2f}s"


def test_c06_dm_search():
    with record(6, "DM search finds the small ingredients from seed 0") as st:
        found = []
        for mods in [(2, 6), (3, 5), (3, 9), (27,)]:
            r = dm_search(Group(mods), 5)
            assert r.found, f"{mods}: {r.status}"
            assert verify_dm(r.dm).ok
            rows = [[tuple(int(c) for c in r.dm.rows[i, j]) for j in range(r.dm.n_columns)] for i in range(5)]
            assert oracles.is_dm(mods, rows)
            found.append(f"{'x'.join(map(str, mods))}:{r.nodes}")
        st["detail"] = "nodes " + ", ".join(found)


def test_c07_construct_all_small():
    with record(7, "optimal BDPs for all odd 3 <= u, v <= 25") as st:
        engine.clear_cache()
        reg = default_registry()
        pairs = [(u, v) for u in range(3, 26, 2) for v in range(3, 26, 2)]
        t0 = perf_counter()
        blocked = [uv for uv in pairs if engine.plan(*uv, registry=reg).blocked]
        bad = []
        for u, v in pairs:
            if (u, v) in blocked:
                continue
            packing, cert = engine.construct_optimal(u, v, registry=reg)
            n = u * v - 1
            if not (cert.ok and cert.balanced and cert.size_counts == {4: n, 5: n}
                    and packing.group.moduli == (4 * u, 8 * v)):
                bad.append((u, v))
        elapsed = perf_counter() - t0
        assert not blocked, f"blocked: {blocked}"
        assert not bad, f"failed: {bad}"
        assert elapsed < 60.0
        st["detail"] = f"{len(pairs)} pairs, none blocked, {elapsed:.1f}s"


def test_c08_coverage():
    with record(8, "residue classes partition each domain below 1e5") as st:
        primes = oracles.primes_below(100_000)
        counts = {}
        for name in template_names():
            tpl = template(name)
            dom = [p for p in primes if tpl.in_domain(p)]
            bad = [p for p in dom if len(matching_classes(name, p)) != 1]
            assert not bad, f"{name}: {bad[:5]}"
            counts[name] = len(dom)
        st["detail"] = ", ".join(f"{k} {v}" for k, v in counts.items())


def test_c09_quadratic_toolkit():
    with record(9, "quadratic residue facts and theta for odd p < 1e4") as st:
        primes = [p for p in oracles.primes_below(10_000) if p > 2]
        no_theta = []
        for p in primes:
            t = build_tables(p)
            sq = t.squares
            assert ((p - 1) in sq) == (p % 4 == 1)
            assert (2 in sq) == (p % 8 in (1, 7))
            if p != 3:
                assert ((3 % p) in sq) == (p % 12 in (1, 11))
            if p != 5:
                assert ((5 % p) in sq) == (p % 10 in (1, 9))
            assert is_prime(t.xi) and t.xi == min(set(range(1, p)) - oracles.squares(p))
            if p % 8 in (1, 7):
                assert {t.xi - 2, t.xi - 1, t.xi + 1} <= sq
            if p >= 5:
                exists = any(x in t.nonsquares and (x - 1) % p in t.nonsquares and (x + 1) % p in sq
                             for x in range(1, p))
                if not exists:
                    no_theta.append(p)
                    with pytest.raises(ResidueError):
                        find_theta(t)
                    continue
                th = find_theta(t)
                assert th in t.nonsquares and (th - 1) % p in t.nonsquares and (th + 1) % p in sq
        assert no_theta == [7]
        st["detail"] = f"{len(primes)} primes; theta exists for all 5 <= p < 1e4 except p=7 (none exists there)"


def test_c10_oospc():
    with record(10, "OOSPC export verifies and single-bit mutations are caught") as st:
        spot = [("4x120 list", catalog.appendix_b())]
        for u, v in [(3, 3), (3, 5), (5, 7)]:
            spot.append((f"{u},{v}", engine.construct_optimal(u, v)[0]))
        for label, p in spot:
            cert = verify_oospc(to_patterns(p))
            assert cert.ok and cert.balanced and cert.info["optimal"], label
        ps = to_patterns(spot[1][1])
        neg = weight = 0
        for i in (0, len(ps) - 1):
            for r in range(ps.dims[0]):
                for c in range(ps.dims[1]):
                    m = ps.with_bit_flipped(i, r, c)
                    cert = verify_oospc(m)
                    if not cert.ok:
                        neg += 1
                    else:
                        # a surviving code must have changed a weight
                        assert m.weights[i] != ps.weights[i] and not cert.info["optimal"]
                        weight += 1
        assert neg + weight == 2 * 12 * 24
        st["detail"] = f"4 codes optimal; {neg} negative, {weight} weight changes out of {neg + weight} flips"


# building blocks for the randomized composition check
def _bases():
    yield from (catalog.appendix_a(*k) for k in catalog.APPENDIX_A_KEYS)
    yield catalog.base_4x40()
    for p in (7, 11, 13):
        yield _merged(bdp_4x8p(p))
        yield _merged(bdp_4x24p(p))


_INNER = {(4, 8): lambda: empty_packing(Group.of(4, 8)).with_blocks((), claimed_leave=None),
          (4, 24): catalog.optimal_4x24,
          (4, 120): catalog.appendix_b}


def test_c11_composition():
    with record(11, "10 seeded inflate/fill pairs match their predicted contracts") as st:
        rng = random.Random(2024)
        bases = list(_bases())
        dms = [("both", (3, 3)), ("both", (2, 6)), ("both", (3, 5)), ("both", (5, 7)),
               ("v", (5,)), ("v", (7,)), ("u", (5,)), ("v", (11,)), ("u", (7,))]
        done = []
        for _ in range(10):
            base = rng.choice(bases)
            mode, mods = rng.choice(dms)
            (u, v), (g, h) = base.group.moduli, base.claimed_leave
            if mode == "both":
                if mods == (2, 6) and (u % 2 or v % 2):
                    mods = (3, 3)
                out = inflate(base, dm_get(Group(mods), 5))
                m, n = mods
            else:
                out = inflate_axis(base, mode, cdm_multiplication(mods[0], 5))
                m, n = (mods[0], 1) if mode == "u" else (1, mods[0])
            assert out.group.moduli == (u * m, v * n)
            assert out.claimed_leave == (g * m, h * n)
            assert len(out.blocks) == len(base.blocks) * m * n
            cert = certify(out)
            assert cert.ok and cert.regular == (g * m, h * n) and cert.balanced
            done.append(f"{u}x{v}*{'x'.join(map(str, mods))}")
            # fill contract: the leave of the base (and of the output, when small) takes an optimal inner
            for outer in (base, out):
                key = outer.claimed_leave
                if key in _INNER:
                    inner = _INNER[key]()
                    filled = fill(outer, inner)
                    c2 = certify(filled)
                    assert filled.claimed_leave is None and c2.ok and c2.balanced
                    assert len(filled.blocks) == len(outer.blocks) + len(inner.blocks)
                    assert oracles.is_optimal(filled.group.moduli, filled.blocks)
        assert len(done) == 10
        st["detail"] = "; ".join(done)
