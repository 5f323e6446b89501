import cmath
import math

import numpy as np
import pytest

from tracefe.arith import RationalMod1
from tracefe.characters import DirichletCharacter
from tracefe.expsums import (IDENTITIES, KloostermanParams, PreconditionViolated, UnknownIdentity, check_identity,
                             kloosterman, kloosterman_all_b, kloosterman_exact, sweep_orthogonality)


def test_kloosterman_examples():
    assert abs(kloosterman(KloostermanParams(1, 1, 3)) + 1) < 1e-14
    assert abs(kloosterman(KloostermanParams(1, 1, 5)) - (2 + 2 * math.cos(4 * math.pi / 5))) < 1e-14
    # Ramanujan sum c_6(1)
    assert abs(kloosterman(KloostermanParams(1, 0, 6)) - 1) < 1e-14


def test_kloosterman_exact_agrees_with_float():
    chi = DirichletCharacter.quadratic(5)
    for a, b, c in [(1, 2, 15), (3, 7, 20), (2, 0, 25)]:
        p = KloostermanParams(a, b, c, chi)
        assert abs(complex(kloosterman_exact(p)) - kloosterman(p)) < 1e-12


def test_kloosterman_weil_bound():
    for c in (7, 11, 13, 101):
        for b in range(1, 6):
            assert abs(kloosterman(KloostermanParams(1, b, c))) <= 2 * math.sqrt(c) + 1e-12


def test_kloosterman_all_b_matches_single():
    chi = DirichletCharacter.quadratic(5)
    row = kloosterman_all_b(3, 20, chi)
    for b in range(20):
        assert abs(row[b] - kloosterman(KloostermanParams(3, b, 20, chi))) < 1e-11


def test_kloosterman_requires_modulus_divisibility():
    with pytest.raises(PreconditionViolated):
        KloostermanParams(1, 1, 7, DirichletCharacter.quadratic(5))


def test_reciprocity_example():
    r = check_identity("reciprocity", A=3, B=5)
    assert r.passed and r.residual == 0
    assert RationalMod1(2, 5) + RationalMod1(2, 3) == RationalMod1(1, 15)


def test_reciprocity_needs_coprime():
    with pytest.raises(PreconditionViolated):
        check_identity("reciprocity", A=4, B=6)


def test_orthogonality_example():
    r = check_identity("orthogonality", c=4, x=2)
    assert r.passed and r.residual == 0 and abs(r.lhs) < 1e-15


def test_orthogonality_sweep():
    count, failures = sweep_orthogonality(60)
    assert count == sum(range(1, 61)) and failures == []


def test_gauss_vanish_example():
    r = check_identity("gauss_vanish", D=5, k=1)
    assert r.passed and r.residual == 0


def test_crt_regroup_example():
    r = check_identity("crt_regroup", D=5, m=3, l=1, cprime=10)
    assert r.passed and r.residual == 0


@pytest.mark.parametrize("D, c, l, m", [(1, 6, 1, 5), (5, 3, 2, 7), (5, 2, 1, 10), (3, 4, 1, 0)])
def test_poisson_arith(D, c, l, m):
    assert check_identity("poisson_arith", D=D, c=c, l=l, m=m).passed


def test_crt_expansion_and_shift():
    assert check_identity("crt_expansion", D=5, m=3, l=2, cprime=10).passed
    assert check_identity("kloosterman_shift", j=3, l=1, D=5, k=1, c=2).passed


def test_gauss_product():
    for spec in ("D=5:2^1", "D=7:3^2", "D=3*5:2^1,2^2"):
        chi = DirichletCharacter.parse(spec)
        assert check_identity("gauss_product", D=chi.modulus, chi=spec).passed


def test_lemma_sum_counterexample():
    # the vanishing claim fails at c = 1, m = 0: the sum is D^{3/2}
    r = check_identity("lemma_sum", D=5, k=1, c=1, l=1, m=0)
    assert not r.passed
    assert abs(r.lhs - 5 * math.sqrt(5)) < 1e-9


def test_lemma_sum_vanishes_generically():
    assert check_identity("lemma_sum", D=5, k=1, c=2, l=1, m=3).passed


def test_unknown_identity():
    with pytest.raises(UnknownIdentity):
        check_identity("nope")
    assert "orthogonality" in IDENTITIES
