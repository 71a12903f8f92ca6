import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdpack.abelian import (Group, GroupError, crt, crt_relabel, crt_split, difference, involution_closure,
                            iso_relabel, primary_relabel, scale, scale_embed, subgroup, transfer_factor)

import oracles


def test_difference_examples():
    assert difference(Group.of(2, 4), (0, 1), (0, 0)) == (0, 1)
    assert difference(Group.of(2, 4), (0, 0), (0, 1)) == (0, 3)
    assert difference(Group.of(4, 8, 7), (0, 5, 3), (2, 1, 5)) == (2, 4, 5)
    with pytest.raises(GroupError):
        difference(Group.of(2, 4), (0, 1), (0, 0, 0))


def test_scale_examples():
    assert scale(Group.of(4, 8, 7), (1, 1, 2), (3, 1, 3)) == (3, 1, 6)
    assert scale(Group.of(4, 24, 7), (1, 1, -1), (1, 3, 1)) == (1, 3, 6)
    g = Group.of(6, 10)
    assert all(scale(g, (1, 1), x) == x for x in g.elements())
    with pytest.raises(GroupError):
        scale(g, (1,), (0, 0))


@pytest.mark.parametrize("mods,expected", [((4, 8), 4), ((7,), 1), ((2, 6), 4), ((4, 120), 4), ((3, 5), 1)])
def test_involution_closure(mods, expected):
    got = involution_closure(Group(mods))
    assert got == oracles.involutions(mods)
    assert len(got) == expected
    g = Group(mods)
    assert g.zero in got and {g.neg(x) for x in got} == got


def test_involution_closure_listed():
    assert involution_closure(Group.of(4, 8)) == set(itertools.product((0, 2), (0, 4)))
    assert involution_closure(Group.of(2, 6)) == set(itertools.product((0, 1), (0, 3)))


def test_crt_relabel_examples():
    r = crt_relabel(Group.of(8, 5), 0, 1)
    assert r.target == Group.of(40)
    assert r((7, 3)) == (23,)
    assert r((0, 0)) == (0,)
    assert crt_relabel(Group.of(3, 8), 0, 1)((1, 5)) == (13,)
    with pytest.raises(GroupError):
        crt_relabel(Group.of(4, 6), 0, 1)


@pytest.mark.parametrize("mods", [(4, 8, 7), (3, 8), (5, 9, 4), (2, 3, 5, 7), (16, 25)])
def test_crt_round_trip_exhaustive(mods):
    g = Group(mods)
    for i, j in itertools.permutations(range(g.arity), 2):
        if math.gcd(mods[i], mods[j]) != 1:
            continue
        r = crt_relabel(g, i, j)
        els = np.array(list(g.elements()), dtype=np.int64)
        img = r.forward_array(els)
        assert len({tuple(x) for x in img}) == g.order
        assert np.array_equal(r.inverse_array(img), els)
        # congruence conditions
        lo = min(i, j)
        assert np.all(img[:, lo] % mods[i] == els[:, i]) and np.all(img[:, lo] % mods[j] == els[:, j])
        # homomorphism on a sample
        for x, y in itertools.islice(itertools.product(g.elements(), repeat=2), 0, 2000, 37):
            assert r(g.add(x, y)) == r.target.add(r(x), r(y))


def test_difference_round_trip_exhaustive():
    for mods in [(4, 8), (2, 6), (12,), (3, 3, 2)]:
        g = Group(mods)
        for x in g.elements():
            for y in g.elements():
                assert g.add(difference(g, x, y), y) == x


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 12), min_size=1, max_size=3), st.data())
def test_difference_round_trip_random(mods, data):
    g = Group(tuple(mods))
    x = tuple(data.draw(st.integers(0, m - 1)) for m in mods)
    y = tuple(data.draw(st.integers(0, m - 1)) for m in mods)
    assert g.add(difference(g, x, y), y) == x


def test_crt_scalar():
    for ms in [(3, 8), (4, 9, 5), (7, 11)]:
        n = 1
        for m in ms:
            n *= m
        for x in range(0, n, 7):
            assert crt([x % m for m in ms], ms) == x


def test_scale_embed():
    e = scale_embed(Group.of(4, 8), Group.of(4, 72))
    assert e((1, 3)) == (1, 27)
    assert scale_embed(Group.of(2, 4), Group.of(2, 36))((0, 1)) == (0, 9)
    g = Group.of(6, 10)
    ident = scale_embed(g, g)
    assert all(ident(x) == x for x in g.elements())
    with pytest.raises(GroupError):
        scale_embed(Group.of(4, 7), Group.of(4, 72))
    # image is a subgroup closed under differences, and equals the coordinate subgroup
    outer = Group.of(12, 24)
    img = {scale_embed(Group.of(4, 8), outer)(x) for x in Group.of(4, 8).elements()}
    assert img == subgroup(outer, (4, 8)) == oracles.coord_subgroup((12, 24), (4, 8))
    assert all(difference(outer, x, y) in img for x in img for y in img)


def test_transfer_and_split():
    r = transfer_factor(Group.of(12, 8), 0, 1, 3)
    assert r.target == Group.of(4, 24)
    s = crt_split(Group.of(40,), 0, 5)
    assert s.target == Group.of(8, 5)
    assert s((23,)) == (7, 3)
    with pytest.raises(GroupError):
        transfer_factor(Group.of(12, 6), 0, 1, 3)


@pytest.mark.parametrize("a,b", [((9, 3), (3, 9)), ((15,), (3, 5)), ((2, 6), (2, 2, 3)), ((12, 8), (4, 24)),
                                 ((27,), (27,))])
def test_iso_relabel(a, b):
    ga, gb = Group(a), Group(b)
    r = iso_relabel(ga, gb)
    imgs = {r(x) for x in ga.elements()}
    assert len(imgs) == ga.order
    for x, y in itertools.islice(itertools.product(ga.elements(), repeat=2), 0, 729, 5):
        assert r(ga.add(x, y)) == gb.add(r(x), r(y))


def test_iso_relabel_rejects():
    with pytest.raises(GroupError):
        iso_relabel(Group.of(27), Group.of(3, 9))
    assert primary_relabel(Group.of(1)).target == Group.of(1)
