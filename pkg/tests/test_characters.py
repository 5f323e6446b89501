import cmath
import math

import pytest

from tracefe.arith import Cyclotomic
from tracefe.characters import (CharacterSpecError, DirichletCharacter, characters, evaluate, gauss_sum,
                                gauss_sum_exact, primitive_characters)


def test_evaluate_examples():
    assert evaluate(DirichletCharacter.trivial(), 17) == 1
    chi = DirichletCharacter.quadratic(5)
    assert abs(evaluate(chi, 2) + 1) < 1e-15
    assert evaluate(chi, 10) == 0


def test_quadratic_mod5_matches_squares():
    chi = DirichletCharacter.quadratic(5)
    squares = {x * x % 5 for x in range(1, 5)}
    for n in range(1, 5):
        assert abs(chi(n) - (1 if n in squares else -1)) < 1e-15


def test_parse_round_trip():
    chi = DirichletCharacter.parse("D=5:2^2")
    assert chi.spec() == DirichletCharacter.quadratic(5).spec()
    assert DirichletCharacter.parse(chi.spec()).spec() == chi.spec()
    assert DirichletCharacter.parse("D=1").is_trivial


@pytest.mark.parametrize("text", ["D=4", "D=5:2^1,3^1", "D=1:2^1", "five"])
def test_parse_rejects(text):
    with pytest.raises(CharacterSpecError):
        DirichletCharacter.parse(text)


def test_multiplicative_and_periodic():
    for chi in characters(15):
        for a in range(1, 30):
            for b in range(1, 30):
                assert abs(chi(a * b) - chi(a) * chi(b)) < 1e-12
            assert abs(chi(a) - chi(a + 15)) < 1e-12


def test_character_counts():
    assert len(list(characters(15))) == 8
    # squarefree modulus: the number of primitive characters is the product of p - 2
    assert len(list(primitive_characters(15))) == 3
    assert len(list(primitive_characters(7))) == 5


def test_gauss_sum_examples():
    assert complex(gauss_sum(DirichletCharacter.trivial())) == 1
    tau = gauss_sum(DirichletCharacter.quadratic(5))
    assert abs(tau.value - math.sqrt(5)) < 1e-12
    direct = sum(DirichletCharacter.quadratic(5)(a) * cmath.exp(2j * math.pi * a / 5) for a in range(5))
    assert abs(tau.value - direct) < 1e-12
    assert abs(abs(gauss_sum(DirichletCharacter.quadratic(13))) - math.sqrt(13)) < 1e-12


def test_gauss_sum_modulus_exact():
    for D in (3, 7, 15, 21, 30):
        for chi in primitive_characters(D):
            tau = gauss_sum_exact(chi)
            assert tau * tau.conjugate() == Cyclotomic.integer(D)
