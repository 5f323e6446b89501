"""Exact residue and rational-mod-1 arithmetic.

Every exponent of ``e(x) = exp(2 pi i x)`` is carried as a :class:`RationalMod1`
until the final complex evaluation, so purely arithmetic identities are
compared exactly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.fft as sfft


class NotCoprime(ValueError):
    """Raised when an inverse is requested for a non-unit."""


class ModuliNotCoprime(ValueError):
    """Raised when CRT is requested for moduli sharing a factor."""


@dataclass(frozen=True, order=True)
class RationalMod1:
    num: int
    den: int

    def __post_init__(self):
        if self.den < 1:
            raise ValueError("denominator must be positive")
        g = math.gcd(self.num, self.den)
        num, den = (self.num // g) % (self.den // g), self.den // g
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def of(cls, x) -> "RationalMod1":
        f = Fraction(x)
        return cls(f.numerator, f.denominator)

    def __add__(self, other):
        other = _as_mod1(other)
        return RationalMod1(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalMod1(-self.num, self.den)

    def __sub__(self, other):
        return self + (-_as_mod1(other))

    def __rsub__(self, other):
        return _as_mod1(other) - self

    def scale(self, k: int) -> "RationalMod1":
        return RationalMod1(self.num * k, self.den)

    def is_zero(self) -> bool:
        return self.num == 0

    def fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def e(self) -> complex:
        """exp(2 pi i x), evaluated from the reduced representative."""
        return _root_of_unity(self.num, self.den)

    def __repr__(self):
        return f"{self.num}/{self.den}"


def _as_mod1(x) -> RationalMod1:
    return x if isinstance(x, RationalMod1) else RationalMod1.of(x)


@lru_cache(maxsize=65536)
def _root_of_unity(num: int, den: int) -> complex:
    if num == 0:
        return 1 + 0j
    # symmetric representative keeps the angle in [-pi, pi]
    if 2 * num > den:
        num -= den
    return cmath.exp(2j * math.pi * num / den)


def mod1_add(x: RationalMod1, y: RationalMod1) -> RationalMod1:
    return x + y


def e(x) -> complex:
    """Evaluate e(x) for an exact rational (or RationalMod1) argument."""
    return _as_mod1(x).e()


@dataclass(frozen=True)
class Residue:
    value: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be positive")
        object.__setattr__(self, "value", self.value % self.modulus)

    def __int__(self):
        return self.value


def mod_inverse(a: int, m: int) -> Residue:
    if m < 1:
        raise ValueError("modulus must be positive")
    if math.gcd(a, m) != 1:
        raise NotCoprime(f"gcd({a}, {m}) = {math.gcd(a, m)}")
    if m == 1:
        return Residue(0, 1)
    return Residue(pow(a, -1, m), m)


def inv(a: int, m: int) -> int:
    """Plain-int inverse of a mod |m|, in [0, |m|)."""
    return mod_inverse(a, abs(m)).value


def crt_lift(r1: Residue, r2: Residue) -> Residue:
    m1, m2 = r1.modulus, r2.modulus
    if math.gcd(m1, m2) != 1:
        raise ModuliNotCoprime(f"gcd({m1}, {m2}) = {math.gcd(m1, m2)}")
    m = m1 * m2
    if m == 1:
        return Residue(0, 1)
    x = r1.value + m1 * ((r2.value - r1.value) * pow(m1, -1, m2) % m2) if m2 > 1 else r1.value
    return Residue(x, m)


def factorize(n: int) -> dict[int, int]:
    """Trial division; adequate for the configured desk-scale bounds."""
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_squarefree(n: int) -> bool:
    return all(e == 1 for e in factorize(n).values())


def is_prime(n: int) -> bool:
    return n >= 2 and factorize(n) == {n: 1}


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, k in factorize(n).items():
        divs = [d * p**i for d in divs for i in range(k + 1)]
    return sorted(divs)


def num_divisors(n: int) -> int:
    return math.prod(k + 1 for k in factorize(n).values())


def euler_phi(n: int) -> int:
    out = n
    for p in factorize(n):
        out = out // p * (p - 1)
    return out


def primitive_root(p: int) -> int:
    """Smallest generator of (Z/pZ)* for an odd or even prime p."""
    if p == 2:
        return 1
    qs = list(factorize(p - 1))
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in qs):
            return g
    raise ValueError(f"{p} is not prime")


def discrete_log(a: int, g: int, p: int) -> int:
    """Exponent k in [0, p-1) with g^k = a mod p (baby-step giant-step)."""
    a %= p
    if a == 0:
        raise NotCoprime(f"{a} is not a unit mod {p}")
    n = p - 1
    m = math.isqrt(n) + 1
    table = {}
    cur = 1
    for j in range(m):
        table.setdefault(cur, j)
        cur = cur * g % p
    factor = pow(g, -m, p) if p > 2 else 1
    gamma = a
    for i in range(m + 1):
        if gamma in table:
            return (i * m + table[gamma]) % n if n else 0
        gamma = gamma * factor % p
    raise ValueError("discrete log not found")


def squarefree_upto(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if is_squarefree(d)]


class Cyclotomic:
    """Element sum_j n_j zeta_L^j of Z[zeta_L], stored as a dense int64 vector.

    Zero testing is exact: a nonzero algebraic integer has |norm| >= 1, so if
    every Galois conjugate (zeta_L -> zeta_L^t, gcd(t, L) = 1) is below 1 in
    modulus, rounding error included, the element is 0.
    """

    __slots__ = ("order", "vec")

    def __init__(self, order: int, coeffs=None):
        if order < 1:
            raise ValueError("order must be positive")
        self.order = order
        if isinstance(coeffs, np.ndarray):
            if coeffs.shape != (order,):
                raise ValueError("dense coefficient vector has wrong length")
            self.vec = coeffs.astype(np.int64, copy=False)
        else:
            self.vec = np.zeros(order, dtype=np.int64)
            for j, n in (coeffs or {}).items():
                self.vec[j % order] += int(n)

    @classmethod
    def integer(cls, n: int, order: int = 1) -> "Cyclotomic":
        return cls(order, {0: n})

    @classmethod
    def root(cls, x: RationalMod1, coeff: int = 1) -> "Cyclotomic":
        return cls(x.den, {x.num: coeff})

    @property
    def coeffs(self) -> dict[int, int]:
        nz = np.nonzero(self.vec)[0]
        return {int(j): int(self.vec[j]) for j in nz}

    def lift(self, order: int) -> "Cyclotomic":
        if order % self.order:
            raise ValueError(f"{order} is not a multiple of {self.order}")
        if order == self.order:
            return self
        out = np.zeros(order, dtype=np.int64)
        out[:: order // self.order] = self.vec
        return Cyclotomic(order, out)

    def _common(self, other):
        if not isinstance(other, Cyclotomic):
            other = Cyclotomic.integer(int(other))
        L = math.lcm(self.order, other.order)
        return self.lift(L), other.lift(L)

    def __add__(self, other):
        a, b = self._common(other)
        return Cyclotomic(a.order, a.vec + b.vec)

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic(self.order, -self.vec)

    def __sub__(self, other):
        a, b = self._common(other)
        return Cyclotomic(a.order, a.vec - b.vec)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Cyclotomic):
            return Cyclotomic(self.order, self.vec * int(other))
        a, b = self._common(other)
        L = a.order
        ia, ib = np.nonzero(a.vec)[0], np.nonzero(b.vec)[0]
        if len(ia) * len(ib) <= 4096:
            out = np.zeros(L, dtype=np.int64)
            idx = (ia[:, None] + ib[None, :]) % L
            np.add.at(out, idx.ravel(), (a.vec[ia][:, None] * b.vec[ib][None, :]).ravel())
            return Cyclotomic(L, out)
        return Cyclotomic(L, _fft_cyclic_product(a.vec, b.vec))

    __rmul__ = __mul__

    def conjugate(self) -> "Cyclotomic":
        return Cyclotomic(self.order, np.roll(self.vec[::-1], 1))

    def conjugates(self) -> np.ndarray:
        """Galois conjugates, i.e. values at exp(2 pi i t / L) for gcd(t, L) = 1."""
        # conjugate of the value at t is the value at -t, so half the spectrum suffices
        vals = np.conj(sfft.rfft(self.vec.astype(float)))
        t = np.arange(len(vals))
        return vals[np.gcd(t, self.order) == 1]

    def l1(self) -> int:
        return int(np.abs(self.vec).sum())

    def is_zero(self) -> bool:
        if not self.vec.any():
            return True
        bound = 16 * np.finfo(float).eps * max(1.0, math.log2(self.order)) * self.l1()
        if bound >= 0.5:
            raise OverflowError("coefficients too large for the conjugate-norm zero test")
        return bool(np.max(np.abs(self.conjugates())) + bound < 1.0)

    def __eq__(self, other):
        if isinstance(other, (Cyclotomic, int)):
            return (self - other).is_zero()
        return NotImplemented

    __hash__ = None

    def __complex__(self):
        j = np.nonzero(self.vec)[0]
        return complex(np.sum(self.vec[j] * np.exp(2j * np.pi * j / self.order)))

    def __repr__(self):
        terms = " + ".join(f"{n}*z^{j}" for j, n in sorted(self.coeffs.items())) or "0"
        return f"Cyclotomic[{self.order}]({terms})"


def _fft_cyclic_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if float(np.abs(a).sum()) * float(np.abs(b).sum()) > 2**50:
        raise OverflowError("product too large for exact FFT convolution")
    n = len(a)
    prod = sfft.irfft(sfft.rfft(a.astype(float)) * sfft.rfft(b.astype(float)), n)
    rounded = np.rint(prod)
    if len(prod) and np.max(np.abs(prod - rounded)) > 0.25:
        raise ArithmeticError("FFT product lost integrality")
    return rounded.astype(np.int64)


def unit_inverses(c: int) -> tuple[np.ndarray, np.ndarray]:
    """Units x mod c and their inverses, by a vectorized extended Euclid."""
    x = np.arange(c, dtype=np.int64)
    units = x[np.gcd(x, c) == 1]
    if c == 1:
        return np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    r0, r1 = np.full_like(units, c), units.copy()
    s0, s1 = np.zeros_like(units), np.ones_like(units)
    while np.any(r1 > 0):
        active = r1 > 0
        q = np.where(active, r0 // np.where(active, r1, 1), 0)
        r0, r1 = np.where(active, r1, r0), np.where(active, r0 - q * r1, r1)
        s0, s1 = np.where(active, s1, s0), np.where(active, s0 - q * s1, s1)
    return units, s0 % c
