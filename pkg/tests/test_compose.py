import itertools

import pytest

from bdpack import catalog
from bdpack.abelian import Group, crt_relabel, transfer_factor
from bdpack.compose import CompositionError, fill, inflate, inflate_axis, leave_image, relabel
from bdpack.diffmat import cdm_multiplication, dm_get, trivial_dm
from bdpack.direct import bdp_4x8p, bdp_4x24p
from bdpack.packing import Packing, certify, empty_packing

import oracles


def _optimal_empty_4x8():
    return empty_packing(Group.of(4, 8)).with_blocks((), claimed_leave=None)


def _merged(p):
    return relabel(p, crt_relabel(p.group, 1, 2))


def test_fill_with_empty_optimal():
    out = fill(catalog.appendix_a(4, 72, 4, 8), _optimal_empty_4x8())
    assert len(out.blocks) == 16 and out.claimed_leave is None
    assert certify(out).ok and oracles.is_optimal((4, 72), out.blocks)


def test_fill_4x168():
    outer = _merged(bdp_4x24p(7))
    assert outer.group == Group.of(4, 168) and outer.claimed_leave == (4, 24)
    out = fill(outer, catalog.optimal_4x24())
    assert len(out.blocks) == 40
    cert = certify(out)
    assert cert.ok and cert.size_counts == {4: 20, 5: 20}


def test_fill_with_nothing_keeps_outer():
    outer = catalog.appendix_a(12, 24, 4, 8)
    out = fill(outer, empty_packing(Group.of(4, 8)))
    assert out.blocks == outer.blocks and out.claimed_leave == (4, 8)


def test_fill_regular_inner():
    outer = inflate_axis(catalog.appendix_a(4, 72, 4, 8), "v", dm_get(Group.of(27), 5))
    assert outer.group == Group.of(4, 1944) and outer.claimed_leave == (4, 216)
    inner = inflate(catalog.appendix_a(2, 36, 2, 4), dm_get(Group.of(2, 6), 5))
    out = fill(outer, inner)
    assert out.claimed_leave == (4, 24) and len(out.blocks) == len(outer.blocks) + len(inner.blocks)
    cert = certify(out)
    assert cert.ok and cert.regular == (4, 24) and cert.balanced


def test_fill_errors():
    with pytest.raises(CompositionError):
        fill(catalog.appendix_b(), _optimal_empty_4x8())  # outer not regular
    with pytest.raises(CompositionError):
        fill(catalog.appendix_a(4, 72, 4, 8), catalog.optimal_4x24())  # wrong inner group
    bad = Packing(Group.of(4, 8), (((0, 0), (0, 1), (0, 2), (0, 3)), ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1))))
    with pytest.raises(CompositionError):
        fill(catalog.appendix_a(4, 72, 4, 8), bad)


def test_inflate_empty_base():
    base = empty_packing(Group.of(4, 8))
    out = inflate(base, dm_get(Group.of(3, 3), 5))
    assert out.group == Group.of(12, 24) and out.claimed_leave == (12, 24) and not out.blocks


def test_inflate_2x6():
    base = catalog.appendix_a(2, 36, 2, 4)
    out = inflate(base, dm_get(Group.of(2, 6), 5))
    assert out.group == Group.of(4, 216) and out.claimed_leave == (4, 24) and len(out.blocks) == 48
    assert oracles.is_regular((4, 216), out.blocks, (4, 24))


def test_inflate_lift_identity():
    base = catalog.appendix_a(2, 36, 2, 4)
    d = dm_get(Group.of(2, 6), 5)
    out = inflate(base, d)
    before = oracles.diffs((2, 36), base.blocks)
    after = oracles.diffs((4, 216), out.blocks)
    for delta, c in before.items():
        assert c == 1
        for a, b in itertools.product(range(2), range(6)):
            lift = ((delta[0] + 2 * a) % 4, (delta[1] + 36 * b) % 216)
            assert after[lift] == 1


def test_inflate_axis_examples():
    out = inflate_axis(catalog.base_4x40(), "v", dm_get(Group.of(15), 5))
    assert out.group == Group.of(4, 600) and out.claimed_leave == (4, 120)
    assert certify(out).ok
    base = _merged(bdp_4x8p(5))
    out = inflate_axis(base, "v", cdm_multiplication(7, 5))
    assert out.group == Group.of(4, 280) and out.claimed_leave == (4, 56)
    assert oracles.is_regular((4, 280), out.blocks, (4, 56))
    same = inflate_axis(base, 1, trivial_dm(5))
    assert same.group == base.group and set(same.blocks) == set(base.blocks)
    out_u = inflate_axis(base, "u", cdm_multiplication(5, 5))
    assert out_u.group == Group.of(20, 40) and certify(out_u).ok


def test_inflate_errors():
    with pytest.raises(CompositionError):
        inflate(catalog.appendix_b(), dm_get(Group.of(3, 3), 5))
    with pytest.raises(CompositionError):
        inflate(catalog.appendix_a(2, 36, 2, 4), cdm_multiplication(7, 4))  # 4 rows, blocks of 5
    with pytest.raises(CompositionError):
        inflate_axis(catalog.base_4x40(), "w", cdm_multiplication(7, 5))


def test_relabel_verdicts_agree():
    broken = catalog.appendix_b()
    broken = broken.with_blocks(broken.blocks[:-1] + (broken.blocks[0],))
    cases = [(catalog.optimal_4x24(), 1, 0, 3), (catalog.appendix_b(), 1, 0, 5),
             (catalog.appendix_a(2, 36, 2, 4), 1, 0, 9), (broken, 1, 0, 15)]
    for p, src, dst, f in cases:
        q = relabel(p, transfer_factor(p.group, src, dst, f), recertify=False)
        assert certify(q).ok == certify(p).ok == oracles.is_dp(q.group.moduli, q.blocks)
    q = relabel(catalog.appendix_a(18, 4, 2, 4), transfer_factor(Group.of(18, 4), 0, 1, 9))
    assert q.group == Group.of(2, 36) and q.claimed_leave == (2, 4)
    with pytest.raises(CompositionError):
        relabel(broken, transfer_factor(broken.group, 1, 0, 5))


def test_leave_image():
    r = transfer_factor(Group.of(4, 120), 1, 0, 5)
    assert leave_image(Group.of(4, 120), (4, 120), r) == (20, 24)
    assert leave_image(Group.of(4, 120), (4, 24), r) == (4, 24)
