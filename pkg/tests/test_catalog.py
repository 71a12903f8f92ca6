import pytest

from bdpack.abelian import Group
from bdpack.catalog import (APPENDIX_A_KEYS, CatalogError, CoverageError, ParamExpr, appendix_a, appendix_b,
                            base_4x40, catalog_entry, catalog_ids, lemma_params, matching_classes, optimal_4x24,
                            param_class, sdf_4x8, template, template_names)
from bdpack.packing import certify, verify_sdf

import oracles

KEYS = [(2, 36, 2, 4), (2, 72, 2, 8), (2, 108, 2, 12), (4, 72, 4, 8), (6, 12, 2, 4), (6, 36, 2, 12),
        (12, 24, 4, 8), (18, 4, 2, 4), (18, 12, 2, 12)]


def test_appendix_a_keys():
    assert sorted(APPENDIX_A_KEYS) == sorted(KEYS)


@pytest.mark.parametrize("key", KEYS)
def test_appendix_a_transcription(key):
    u, v, g, h = key
    p = appendix_a(*key)
    assert p.group == Group.of(u, v) and p.claimed_leave == (g, h)
    per = (u * v - g * h) // 32
    assert sum(len(b) == 4 for b in p.blocks) == per == sum(len(b) == 5 for b in p.blocks)
    for b in p.blocks:
        assert len(set(b)) == len(b)
        assert all(0 <= x < u and 0 <= y < v for x, y in b)
    assert certify(p).ok
    assert oracles.is_regular((u, v), p.blocks, (g, h))


def test_appendix_a_examples():
    assert appendix_a(2, 36, 2, 4).blocks[0] == ((0, 0), (1, 14), (1, 15), (1, 26))
    assert len(appendix_a(18, 4, 2, 4).blocks) == 4
    with pytest.raises(CatalogError):
        appendix_a(3, 3, 1, 1)


def test_fixed_lists():
    b = appendix_b()
    assert b.group == Group.of(4, 120) and len(b.blocks) == 28
    assert certify(b).ok and oracles.is_optimal((4, 120), b.blocks)
    o = optimal_4x24()
    assert len(o.blocks) == 4 and o.blocks[0] == ((0, 0), (0, 1), (0, 3), (0, 7), (1, 0))
    assert certify(o).ok and oracles.is_optimal((4, 24), o.blocks)
    base = base_4x40()
    assert len(base.blocks) == 8 and base.claimed_leave == (4, 8)
    assert ((0, 0), (0, 7), (0, 21), (2, 8)) in base.blocks
    assert oracles.is_regular((4, 40), base.blocks, (4, 8))


def test_sdfs():
    s2, s4 = sdf_4x8(2), sdf_4x8(4)
    assert len(s2) == 4 and len(s4) == 8
    assert s2[0] == ((0, 0), (0, 5), (2, 1), (3, 1))
    assert s4[0] == ((0, 0), (0, 0), (0, 1), (0, 1))
    for fam, lam in ((s2, 2), (s4, 4)):
        assert verify_sdf(Group.of(4, 8), fam, lam).ok
        c = oracles.diffs((4, 8), fam)
        assert all(c[x] == lam for x in oracles.all_elements((4, 8)))
    with pytest.raises(CatalogError):
        sdf_4x8(3)


def test_lemma_params_examples():
    want = [3, -2, 1, -1, 3, 1, 1, 2, 3, -1, 2, 1, 3, -1]
    assert list(lemma_params("4x8p_3mod4", 7).values()) == [w % 7 for w in want]
    assert list(lemma_params("4x24p_3mod4", 11).values()) == [2, 1, 4, 1, 3, 2]
    got = list(lemma_params("4x24p_1mod4", 17).values())
    assert got[:3] == [9, 12, 1]
    assert len(got) == 26 and len(lemma_params("4x8p_1mod4", 13)) == 14


def test_lemma_params_domain():
    with pytest.raises(CoverageError):
        lemma_params("4x24p_1mod4", 5)
    with pytest.raises(CoverageError):
        lemma_params("4x8p_3mod4", 13)
    with pytest.raises(CoverageError):
        param_class("4x24p_3mod4", 21)


def test_dispatch_order():
    # 13 mod 24 only applies once neither 1 mod 8 nor a mod-120 class does
    assert str(param_class("4x8p_1mod4", 37)) == "13 mod 24"
    assert str(param_class("4x8p_1mod4", 29)) == "29,101 mod 120"
    assert str(param_class("4x8p_1mod4", 17)) == "1 mod 8"


def test_templates_shape():
    assert template_names() == sorted(["4x8p_3mod4", "4x8p_1mod4", "4x24p_3mod4", "4x24p_1mod4"])
    assert len(template("4x8p_3mod4").blocks) == 4
    assert len(template("4x8p_1mod4").blocks) == 8
    assert len(template("4x24p_3mod4").blocks) == 12
    assert len(template("4x24p_1mod4").blocks) == 11


def test_param_expr():
    e = ParamExpr.parse("x+x^2")
    assert e.evaluate(17, 3) == 12
    assert ParamExpr.parse("-2").evaluate(7, 3) == 5
    assert ParamExpr.parse("2x^2").evaluate(17, 3) == 1
    assert ParamExpr.parse("5").is_integer


@pytest.mark.parametrize("name", ["4x8p_3mod4", "4x8p_1mod4", "4x24p_3mod4", "4x24p_1mod4"])
def test_coverage_small(name):
    for p in oracles.primes_below(3000):
        if template(name).in_domain(p):
            assert len(matching_classes(name, p)) == 1


def test_catalog_ids():
    ids = catalog_ids()
    assert len(ids) == 12
    for i in ids:
        assert certify(catalog_entry(i)).ok
    with pytest.raises(CatalogError):
        catalog_entry("nope")
