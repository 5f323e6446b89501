
import pytest

from tracefe.arith import (Cyclotomic, ModuliNotCoprime, NotCoprime, RationalMod1, Residue, crt_lift, divisors,
                           euler_phi, factorize, is_squarefree, mod1_add, mod_inverse, squarefree_upto)


@pytest.mark.parametrize("a, m, expected", [(1, 7, 1), (2, 5, 3), (3, 10, 7)])
def test_mod_inverse(a, m, expected):
    assert mod_inverse(a, m).value == expected
    assert (a * expected) % m == 1


def test_mod_inverse_not_coprime():
    with pytest.raises(NotCoprime):
        mod_inverse(4, 10)


@pytest.mark.parametrize("r1, r2, expected", [
    (Residue(1, 2), Residue(0, 3), Residue(3, 6)),
    (Residue(0, 5), Residue(0, 7), Residue(0, 35)),
    (Residue(2, 5), Residue(1, 3), Residue(7, 15)),
])
def test_crt_lift(r1, r2, expected):
    assert crt_lift(r1, r2) == expected


def test_crt_lift_requires_coprime_moduli():
    with pytest.raises(ModuliNotCoprime):
        crt_lift(Residue(1, 4), Residue(1, 6))


def test_mod1_add():
    assert mod1_add(RationalMod1(1, 2), RationalMod1(1, 2)).is_zero()
    assert mod1_add(RationalMod1(2, 5), RationalMod1(2, 3)) == RationalMod1(1, 15)
    assert mod1_add(RationalMod1(0, 1), RationalMod1(3, 7)) == RationalMod1(3, 7)


def test_rational_mod1_is_reduced():
    assert RationalMod1(-1, 4) == RationalMod1(3, 4)
    assert RationalMod1(6, 8) == RationalMod1(3, 4)


def test_cyclotomic_zero_test():
    # 1 + z + ... + z^4 = 0 for a primitive fifth root z
    assert Cyclotomic(5, {i: 1 for i in range(5)}).is_zero()
    assert not Cyclotomic(5, {0: 1, 1: 1}).is_zero()
    # e(1/6) + e(5/6) = 1
    assert Cyclotomic(6, {1: 1, 5: 1}) == Cyclotomic.integer(1)


def test_cyclotomic_conjugate_product():
    z = Cyclotomic(7, {1: 2, 3: -1})
    assert abs(complex(z * z.conjugate()) - abs(complex(z)) ** 2) < 1e-12


def test_number_theory_helpers():
    assert factorize(360) == {2: 3, 3: 2, 5: 1}
    assert divisors(12) == [1, 2, 3, 4, 6, 12]
    assert euler_phi(15) == 8
    assert is_squarefree(30) and not is_squarefree(12)
    assert len(squarefree_upto(10)) == sum(1 for n in range(1, 11) if all(n % (p * p) for p in (2, 3)))
