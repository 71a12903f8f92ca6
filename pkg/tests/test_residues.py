import pytest

from bdpack.residues import (ResidueError, build_tables, find_theta, is_prime, is_square, primitive_root,
                             square_representatives_mod_sign)

import oracles

ODD_PRIMES = [p for p in oracles.primes_below(2000) if p > 2]


@pytest.mark.parametrize("p,sq,xi", [(7, {1, 2, 4}, 3), (13, {1, 3, 4, 9, 10, 12}, 2)])
def test_tables_examples(p, sq, xi):
    t = build_tables(p)
    assert t.squares == sq == oracles.squares(p)
    assert t.xi == xi


def test_p17_xi_neighbours():
    t = build_tables(17)
    assert t.xi == 3
    assert {t.xi - 2, t.xi - 1, t.xi + 1} == {1, 2, 4} <= t.squares


@pytest.mark.parametrize("bad", [1, 2, 9, 15, 0, -7])
def test_build_tables_rejects(bad):
    with pytest.raises(ResidueError):
        build_tables(bad)


def test_is_square_examples():
    assert is_square(build_tables(13), -1)
    assert is_square(build_tables(7), 2)
    assert not is_square(build_tables(7), 3)
    with pytest.raises(ResidueError):
        is_square(build_tables(7), 14)


def test_is_square_euler_path_agrees(monkeypatch):
    # above the table threshold the Euler criterion is used
    import bdpack.residues as r
    p = next(q for q in range(65537, 70000, 2) if is_prime(q) and q > r.TABLE_LIMIT)
    t = build_tables(p)
    for x in range(1, 400):
        assert is_square(t, x) == (x in t.squares)
    monkeypatch.setattr(r, "TABLE_LIMIT", 0)
    t2 = build_tables(101)
    assert all(is_square(t2, x) == (x in oracles.squares(101)) for x in range(1, 101))


@pytest.mark.parametrize("p,theta", [(5, 3), (13, 8), (17, 7)])
def test_theta_examples(p, theta):
    assert find_theta(build_tables(p)) == theta


def test_theta_p3_fails():
    with pytest.raises(ResidueError):
        find_theta(build_tables(3))


def test_theta_p7_does_not_exist():
    t = build_tables(7)
    assert not any(x in t.nonsquares and x - 1 in t.nonsquares and (x + 1) % 7 in t.squares for x in range(1, 7))
    with pytest.raises(ResidueError):
        find_theta(t)


@pytest.mark.parametrize("p,reps", [(13, {1, 3, 4}), (5, {1}), (17, {1, 2, 4, 8})])
def test_square_reps_mod_sign(p, reps):
    assert square_representatives_mod_sign(build_tables(p)) == reps


def test_square_reps_rejects_3mod4():
    with pytest.raises(ResidueError):
        square_representatives_mod_sign(build_tables(7))


@pytest.mark.parametrize("p", ODD_PRIMES[:200])
def test_table_invariants(p):
    t = build_tables(p)
    sq = oracles.squares(p)
    assert t.squares == sq
    assert len(t.squares) == len(t.nonsquares) == (p - 1) // 2
    assert t.squares | t.nonsquares == set(range(1, p))
    assert all(a * b % p in sq for a in list(sq)[:20] for b in sq)
    assert t.xi == min(set(range(1, p)) - sq)
    assert is_prime(t.xi)
    assert primitive_root(p) == t.omega
    assert len({pow(t.omega, i, p) for i in range(p - 1)}) == p - 1
