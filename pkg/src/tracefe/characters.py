"""Dirichlet characters modulo squarefree D and their Gauss sums.

A character is stored prime by prime: for each p | D a primitive root g_p and
the exponent r_p (a multiple of 1/(p-1), kept as :class:`RationalMod1`) with
chi_p(g_p) = e(r_p).  Values of chi are then exact roots of unity.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .arith import (
    Cyclotomic,
    RationalMod1,
    discrete_log,
    factorize,
    is_squarefree,
    primitive_root,
)


class CharacterSpecError(ValueError):
    pass


@dataclass(frozen=True)
class Component:
    p: int
    generator: int
    exponent: RationalMod1  # chi_p(generator) = e(exponent)

    @property
    def trivial(self) -> bool:
        return self.exponent.is_zero()


@dataclass(frozen=True)
class DirichletCharacter:
    modulus: int
    components: tuple[Component, ...] = field(default=())

    def __post_init__(self):
        if self.modulus < 1 or not is_squarefree(self.modulus):
            raise CharacterSpecError(f"modulus {self.modulus} is not squarefree")
        ps = sorted(c.p for c in self.components)
        if ps != sorted(factorize(self.modulus)):
            raise CharacterSpecError("components must cover exactly the primes of the modulus")
        for c in self.components:
            if (c.exponent.den > 1 and (c.p - 1) % c.exponent.den) or (c.p > 2 and not primitive_root_check(c.generator, c.p)):
                raise CharacterSpecError(f"bad component for p={c.p}")

    # -- construction -----------------------------------------------------
    @classmethod
    def trivial(cls, modulus: int = 1) -> "DirichletCharacter":
        comps = tuple(
            Component(p, primitive_root(p), RationalMod1(0, 1)) for p in sorted(factorize(modulus))
        ) if modulus > 1 else ()
        return cls(modulus, comps)

    @classmethod
    def from_exponents(cls, modulus: int, exps: dict[int, int]) -> "DirichletCharacter":
        """exps[p] = k means chi_p(g_p) = e(k/(p-1)) with g_p the least primitive root."""
        comps = []
        for p in sorted(factorize(modulus)) if modulus > 1 else []:
            comps.append(Component(p, primitive_root(p), RationalMod1(exps.get(p, 0), max(p - 1, 1))))
        return cls(modulus, tuple(comps))

    @classmethod
    def quadratic(cls, modulus: int) -> "DirichletCharacter":
        """Product of Legendre symbols over the (odd) primes of the modulus."""
        exps = {}
        for p in factorize(modulus):
            if p == 2:
                raise CharacterSpecError("no primitive quadratic character mod 2")
            exps[p] = (p - 1) // 2
        return cls.from_exponents(modulus, exps)

    @classmethod
    def parse(cls, text: str) -> "DirichletCharacter":
        """Parse ``D=p1*p2:g1^e1,g2^e2``; ``g^e`` means chi(g) = e(e/(p-1))."""
        m = re.fullmatch(r"\s*D\s*=\s*([0-9*]+)\s*(?::\s*(.*))?", text)
        if not m:
            raise CharacterSpecError(f"cannot parse character spec {text!r}")
        primes = [int(x) for x in m.group(1).split("*")]
        modulus = math.prod(primes)
        if modulus == 1:
            if m.group(2):
                raise CharacterSpecError("D=1 takes no components")
            return cls(1, ())
        body = (m.group(2) or "").strip()
        if not body:
            return cls.trivial(modulus)
        pieces = [x.strip() for x in body.split(",")]
        if len(pieces) != len(primes):
            raise CharacterSpecError("need one g^e entry per prime")
        comps = []
        for p, piece in zip(primes, pieces):
            gm = re.fullmatch(r"(\d+)\^(-?\d+)", piece)
            if not gm:
                raise CharacterSpecError(f"bad component {piece!r}")
            g, k = int(gm.group(1)), int(gm.group(2))
            if p > 2 and not primitive_root_check(g, p):
                raise CharacterSpecError(f"{g} is not a primitive root mod {p}")
            comps.append(Component(p, g % p if p > 2 else 1, RationalMod1(k, max(p - 1, 1))))
        return cls(modulus, tuple(comps))

    def spec(self) -> str:
        if self.modulus == 1:
            return "D=1"
        parts = [f"{c.generator}^{c.exponent.num * (c.p - 1) // c.exponent.den}" for c in self.components]
        return f"D={'*'.join(str(c.p) for c in self.components)}:{','.join(parts)}"

    # -- values -------------------------------------------------------------
    def exponent(self, n: int) -> RationalMod1 | None:
        """chi(n) = e(exponent(n)); None when gcd(n, D) > 1."""
        if math.gcd(n, self.modulus) != 1:
            return None
        total = RationalMod1(0, 1)
        for c in self.components:
            if c.trivial:
                continue
            k = discrete_log(n % c.p, c.generator, c.p)
            total = total + c.exponent.scale(k)
        return total

    def __call__(self, n: int) -> complex:
        return evaluate(self, n)

    def conj(self) -> "DirichletCharacter":
        return DirichletCharacter(
            self.modulus, tuple(Component(c.p, c.generator, -c.exponent) for c in self.components)
        )

    @cached_property
    def parity(self) -> int:
        ex = self.exponent(-1)
        return 1 if ex.is_zero() else -1

    @property
    def primitive(self) -> bool:
        return all(not c.trivial for c in self.components)

    @property
    def is_trivial(self) -> bool:
        return all(c.trivial for c in self.components)

    @property
    def order(self) -> int:
        return math.lcm(1, *(c.exponent.den for c in self.components))

    @cached_property
    def table(self) -> tuple[RationalMod1 | None, ...]:
        """Exponents for every residue 0..D-1."""
        L = self.order
        ex = self.unit_exponents(L)
        return tuple(None if k < 0 else RationalMod1(int(k), L) for k in ex)

    def unit_exponents(self, L: int) -> np.ndarray:
        """Integer k_a with chi(a) = e(k_a / L) for a = 0..D-1, -1 on non-units.

        L must be a multiple of the character order.
        """
        if L % self.order:
            raise ValueError("L must be a multiple of the character order")
        D = self.modulus
        a = np.arange(D)
        out = np.zeros(D, dtype=np.int64)
        unit = np.ones(D, dtype=bool)
        for c in self.components:
            logs = _dlog_table(c.p, c.generator)[a % c.p]
            unit &= logs >= 0
            if not c.trivial:
                out += np.where(logs >= 0, logs, 0) * (c.exponent.num * (L // c.exponent.den))
        out %= L
        out[~unit] = -1
        if D == 1:
            out[:] = 0
        return out

    def exact(self, n: int) -> Cyclotomic:
        ex = self.table[n % self.modulus]
        return Cyclotomic(1) if ex is None else Cyclotomic.root(ex)

    def __repr__(self):
        return f"DirichletCharacter({self.spec()})"


@lru_cache(maxsize=None)
def _dlog_table(p: int, g: int) -> np.ndarray:
    """log_g(a) for a mod p, -1 at a = 0."""
    out = np.full(p, -1, dtype=np.int64)
    if p == 2:
        out[1] = 0
        return out
    cur = 1
    for k in range(p - 1):
        out[cur] = k
        cur = cur * g % p
    return out


def primitive_root_check(g: int, p: int) -> bool:
    if p == 2:
        return True
    g %= p
    if g == 0:
        return False
    return all(pow(g, (p - 1) // q, p) != 1 for q in factorize(p - 1))


def evaluate(chi: DirichletCharacter, n: int) -> complex:
    ex = chi.table[n % chi.modulus]
    return 0j if ex is None else ex.e()


def characters(modulus: int):
    """Every character mod a squarefree modulus."""
    primes = sorted(factorize(modulus)) if modulus > 1 else []
    ranges = [range(max(p - 1, 1)) for p in primes]
    for ks in itertools.product(*ranges):
        yield DirichletCharacter.from_exponents(modulus, dict(zip(primes, ks)))


def primitive_characters(modulus: int):
    return (chi for chi in characters(modulus) if chi.primitive)


@dataclass(frozen=True)
class GaussSumValue:
    value: complex
    exact: Cyclotomic

    def __complex__(self):
        return self.value

    def __abs__(self):
        return abs(self.value)


def gauss_sum_exact(chi: DirichletCharacter, shift: int = 1) -> Cyclotomic:
    """sum_{a mod D} chi(a) e(shift*a/D) as an element of Z[zeta_L]."""
    D = chi.modulus
    L = math.lcm(D, chi.order)
    vec = np.zeros(L, dtype=np.int64)
    units = chi.unit_exponents(L)
    a = np.nonzero(units >= 0)[0]
    np.add.at(vec, (units[a] + shift * a * (L // D)) % L, 1)
    return Cyclotomic(L, vec)


def gauss_sum(chi: DirichletCharacter) -> GaussSumValue:
    if chi.modulus == 1:
        return GaussSumValue(1 + 0j, Cyclotomic.integer(1))
    ex = gauss_sum_exact(chi)
    return GaussSumValue(complex(ex), ex)
