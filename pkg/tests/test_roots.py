from itertools import combinations

import pytest

from conftest import CUBE_ROOTS_77
from simentangle.errors import InvalidInput, InvalidSetup, NotCoprime, UnsupportedPrime, UnsupportedVariant
from simentangle.modmath import Semiprime, euler_phi, factor_semiprime, gcd, powmod
from simentangle.roots import (
    count_kth_roots,
    kth_roots,
    kth_roots_mod_prime,
    kth_roots_mod_semiprime,
    negation_class,
    residue_table,
    validate_setup,
)


def brute_roots(a, k, n):
    return [x for x in range(n) if pow(x, k, n) == a]


def test_count_kth_roots(s77):
    assert count_kth_roots(3, s77) == 3
    assert count_kth_roots(5, s77) == 5
    assert count_kth_roots(4, s77) == 4


def test_roots_mod_prime_examples():
    assert 48 % 7 == 6 and 48 % 11 == 4
    assert brute_roots(6, 3, 7) == [3, 5, 6]
    assert kth_roots_mod_prime(6, 3, 7) == [3, 5, 6]
    assert brute_roots(4, 3, 11) == [5]
    assert kth_roots_mod_prime(4, 3, 11) == [5]
    assert kth_roots_mod_prime(0, 5, 11) == [0]


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 13, 17, 23, 29, 31])
@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 7, 9])
def test_roots_mod_prime_match_scan(p, k):
    # the exponent-inversion fast path must agree with a full scan
    for a in range(p):
        assert kth_roots_mod_prime(a, k, p) == brute_roots(a, k, p)


def test_large_prime_without_fast_path_is_unsupported():
    p = 2**21 + 17  # prime, 3 | p - 1
    assert all(p % d for d in range(2, 1500))
    assert kth_roots_mod_prime(8, 5, 2**21 + 17)  # gcd(5, p-1) = 1: fast path
    with pytest.raises(UnsupportedPrime):
        kth_roots_mod_prime(8, 3, p)


@pytest.mark.parametrize("a, k, expected", [
    (48, 3, (5, 27, 38)),
    (15, 3, (16, 60, 71)),
    (32, 5, (2, 30, 51, 65, 72)),
    (67, 5, (9, 16, 23, 37, 58)),
])
def test_roots_mod_semiprime_examples(s77, a, k, expected):
    rs = kth_roots_mod_semiprime(a, validate_setup(k, s77))
    assert rs.roots == expected
    assert list(rs.roots) == brute_roots(a, k, 77)


def test_fourth_roots(s77):
    assert kth_roots(4, 4, s77).roots == (3, 25, 52, 74)
    assert kth_roots(16, 4, s77).roots == (2, 9, 68, 75)


def test_non_residue_has_empty_rootset(square77):
    assert brute_roots(2, 2, 77) == []
    assert kth_roots_mod_semiprime(2, square77).roots == ()


def test_not_coprime_rejected(cubic77):
    with pytest.raises(NotCoprime):
        kth_roots_mod_semiprime(7, cubic77)


def test_residue_table_cubic_77(cubic77):
    table = residue_table(cubic77)
    assert len(table) == 20
    assert {n: rs.roots for n, rs in table} == CUBE_ROOTS_77
    assert [n for n, _ in table] == sorted(CUBE_ROOTS_77)
    assert table[0][1].roots == (1, 23, 67)


def test_residue_table_quintic_contains_example(s77):
    table = dict((n, rs.roots) for n, rs in residue_table(validate_setup(5, s77)))
    assert table[32] == (2, 30, 51, 65, 72)
    assert table[67] == (9, 16, 23, 37, 58)


def test_validate_setup(s77):
    assert validate_setup(3, s77).k == 3
    assert validate_setup(5, s77).k == 5
    assert validate_setup(2, s77).k == 2
    with pytest.raises(InvalidSetup):
        validate_setup(15, s77)
    with pytest.raises(UnsupportedVariant):
        validate_setup(4, s77)
    with pytest.raises(InvalidSetup):
        validate_setup(1, s77)
    with pytest.raises(InvalidSetup):
        validate_setup(2, Semiprime(14, 2, 7))


def test_k15_would_split_roots(s77):
    # why k=15 is refused: some pair of its roots differs by a unit
    rs = kth_roots(1, 15, s77)
    assert len(rs.roots) == 15
    assert any(gcd(a - b, 77) == 1 for a, b in combinations(rs.roots, 2))


def test_negation_class():
    assert negation_class(3, 77) == (3, 74)
    assert negation_class(25, 77) == (25, 52)
    assert all(negation_class(r, 77) == negation_class(77 - r, 77) for r in range(1, 77))
    with pytest.raises(InvalidInput):
        negation_class(0, 77)


def _valid_setups(n):
    s = factor_semiprime(n)
    for k in [2] + list(range(3, s.q, 2)):
        try:
            yield validate_setup(k, s)
        except (InvalidSetup, UnsupportedVariant):
            continue


@pytest.mark.parametrize("n", [77, 221, 391])
def test_tables_partition_units(n):
    for setup in _valid_setups(n):
        s, k = setup.s, setup.k
        table = residue_table(setup)
        assert len(table) * count_kth_roots(k, s) == euler_phi(s)
        seen = set()
        for value, rs in table:
            assert len(rs.roots) == count_kth_roots(k, s)
            assert list(rs.roots) == sorted(set(rs.roots))
            for r in rs.roots:
                assert powmod(r, k, n) == value and gcd(r, n) == 1
            seen.update(rs.roots)
        assert len(seen) == euler_phi(s)


@pytest.mark.parametrize("n", [77, 221, 391])
def test_root_differences_share_one_prime(n):
    for setup in _valid_setups(n):
        s = setup.s
        for _, rs in residue_table(setup):
            for a, b in combinations(rs.roots, 2):
                g = gcd((a - b) % n, n)
                if setup.k == 2:
                    if a + b == n:
                        assert g == 1
                    else:
                        assert g in (s.p, s.q)
                else:
                    assert g in (s.p, s.q)


def test_square_roots_form_two_negation_classes(square77):
    for _, rs in residue_table(square77):
        classes = {negation_class(r, 77) for r in rs.roots}
        assert len(classes) == 2 and len(rs.roots) == 4
