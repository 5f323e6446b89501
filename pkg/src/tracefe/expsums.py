"""Twisted Kloosterman sums and exact checks of the finite arithmetic identities.

Every identity here is an equality in some cyclotomic ring, so both sides are
built as :class:`~tracefe.arith.Cyclotomic` elements and compared exactly.
Complex values are only rendered for reporting.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .arith import Cyclotomic, RationalMod1, inv, unit_inverses
from .characters import DirichletCharacter, gauss_sum_exact


class UnknownIdentity(KeyError):
    pass


class PreconditionViolated(ValueError):
    pass


@dataclass(frozen=True)
class KloostermanParams:
    a: int
    b: int
    c: int
    chi: DirichletCharacter = field(default_factory=DirichletCharacter.trivial)

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("modulus c must be >= 1")
        if self.c % self.chi.modulus:
            raise PreconditionViolated(f"character modulus {self.chi.modulus} does not divide c={self.c}")


@dataclass
class IdentityCheckResult:
    identity: str
    params: dict
    lhs: complex
    rhs: complex
    residual: float
    tolerance: float = 0.0
    exact: bool = True
    passed: bool = False
    note: str = ""
    wall_time: float = 0.0

    def __post_init__(self):
        if not self.passed:
            self.passed = self.residual <= self.tolerance


# -- Kloosterman sums ---------------------------------------------------------

def kloosterman_exact(p: KloostermanParams) -> Cyclotomic:
    """S_chi(a, b, c) = sum_{x mod c, (x,c)=1} conj(chi(x)) e((a x + b xbar)/c), exactly."""
    a, b, c, chi = p.a, p.b, p.c, p.chi
    L = math.lcm(c, chi.order)
    vec = np.zeros(L, dtype=np.int64)
    chi_ex = chi.unit_exponents(L)
    for x in range(c):
        if math.gcd(x, c) != 1:
            continue
        xb = inv(x, c)
        j = ((a * x + b * xb) % c) * (L // c) - chi_ex[x % chi.modulus]
        vec[j % L] += 1
    return Cyclotomic(L, vec)


def kloosterman(p: KloostermanParams) -> complex:
    """Twisted Kloosterman sum; exponents exact, one complex evaluation per term."""
    a, b, c, chi = p.a, p.b, p.c, p.chi
    total = 0j
    for x in range(c):
        if math.gcd(x, c) != 1:
            continue
        ex = RationalMod1(a * x + b * inv(x, c), c)
        cx = chi.exponent(x)
        total += (ex - cx).e()
    return total


def kloosterman_all_b(a: int, c: int, chi: DirichletCharacter | None = None) -> np.ndarray:
    """S_chi(a, b, c) for b = 0..c-1 at once.

    As a function of b the sum is a length-c DFT of x -> conj(chi(x)) e(a x / c)
    placed at index xbar, so one FFT replaces c separate sums.
    """
    chi = chi or DirichletCharacter.trivial()
    if c % chi.modulus:
        raise PreconditionViolated(f"character modulus {chi.modulus} does not divide c={c}")
    x = np.arange(c)
    units = np.gcd(x, c) == 1
    xs = x[units]
    xbar = unit_inverses(c)[1]
    L = chi.order
    chi_ex = chi.unit_exponents(L)[xs % chi.modulus]
    arr = np.zeros(c, dtype=complex)
    arr[xbar] = np.exp(2j * np.pi * ((a * xs) % c) / c) * np.exp(-2j * np.pi * chi_ex / L)
    return np.fft.ifft(arr) * c if c > 1 else arr.copy()


def ramanujan_sum(c: int, n: int) -> int:
    from .arith import divisors

    return sum(d * _mobius(c // d) for d in divisors(c) if n % d == 0)


def _mobius(n: int) -> int:
    from .arith import factorize

    f = factorize(n) if n > 1 else {}
    return 0 if any(e > 1 for e in f.values()) else (-1) ** len(f)


# -- exact identity registry --------------------------------------------------

def _exact_result(name: str, params: dict, lhs: Cyclotomic, rhs: Cyclotomic, note: str = "", t0=None):
    diff = lhs - rhs
    ok = diff.is_zero()
    lc, rc = complex(lhs), complex(rhs)
    return IdentityCheckResult(
        identity=name,
        params=params,
        lhs=lc,
        rhs=rc,
        residual=0.0 if ok else max(abs(lc - rc), 1.0),
        tolerance=0.0,
        exact=True,
        passed=ok,
        note=note,
        wall_time=0.0 if t0 is None else time.perf_counter() - t0,
    )


def _char(params: dict) -> DirichletCharacter:
    chi = params.get("chi")
    if chi is None:
        D = params.get("D", 1)
        return DirichletCharacter.quadratic(D) if D > 1 else DirichletCharacter.trivial()
    if isinstance(chi, str):
        return DirichletCharacter.parse(chi)
    return chi


def _require(cond: bool, msg: str):
    if not cond:
        raise PreconditionViolated(msg)


def check_orthogonality(c: int, x: int) -> IdentityCheckResult:
    """sum_{a mod c} e(a x / c) = c [x = 0 mod c]."""
    t0 = time.perf_counter()
    _require(c >= 1, "c must be positive")
    vec = np.zeros(c, dtype=np.int64)
    np.add.at(vec, (np.arange(c) * x) % c, 1)
    lhs = Cyclotomic(c, vec)
    rhs = Cyclotomic.integer(c if x % c == 0 else 0)
    return _exact_result("orthogonality", {"c": c, "x": x}, lhs, rhs, t0=t0)


def sweep_orthogonality(c_max: int) -> tuple[int, list[IdentityCheckResult]]:
    """All c <= c_max and every x mod c, batched per modulus.

    Each row is certified by the same conjugate-norm zero test as
    :meth:`Cyclotomic.is_zero`; only failures are materialised as results.
    """
    import scipy.fft as sfft

    count, failures = 0, []
    for c in range(1, c_max + 1):
        xs = np.arange(c)
        counts = np.zeros((c, c), dtype=np.int64)
        rows = np.repeat(xs, c)
        cols = (np.outer(xs, np.arange(c)) % c).ravel()
        np.add.at(counts, (rows, cols), 1)
        counts[0, 0] -= c
        spec = sfft.rfft(counts.astype(float), axis=1)
        t = np.arange(spec.shape[1])
        spec = spec[:, np.gcd(t, c) == 1]
        bound = 16 * np.finfo(float).eps * max(1.0, math.log2(c)) * np.abs(counts).sum(axis=1)
        bad = np.nonzero(np.max(np.abs(spec), axis=1) + bound >= 1.0)[0]
        count += c
        failures.extend(check_orthogonality(c, int(x)) for x in bad)
    return count, failures


def check_reciprocity(A: int, B: int) -> IdentityCheckResult:
    """inv(A mod B)/B + inv(B mod A)/A = 1/(AB) mod 1."""
    _require(A != 0 and B != 0, "A, B must be nonzero")
    _require(math.gcd(A, B) == 1, f"gcd(A={A}, B={B}) = {math.gcd(A, B)} != 1")
    lhs = RationalMod1(inv(A, B), abs(B)) + RationalMod1(inv(B, A), abs(A))
    if B < 0:
        lhs = RationalMod1(inv(A, B), abs(B)).scale(-1) + RationalMod1(inv(B, A), abs(A))
    rhs = RationalMod1(1 if A * B > 0 else -1, abs(A * B))
    ok = lhs == rhs
    return IdentityCheckResult(
        "reciprocity", {"A": A, "B": B}, lhs.e(), rhs.e(), 0.0 if ok else 1.0, passed=ok,
        note=f"lhs={lhs} rhs={rhs}",
    )


def reciprocity_exponents(A: int, B: int) -> tuple[RationalMod1, RationalMod1]:
    return RationalMod1(inv(A, B), B) + RationalMod1(inv(B, A), A), RationalMod1(1, A * B)


def check_poisson_arith(D: int, c: int, l: int, m: int, chi=None) -> IdentityCheckResult:
    """Collapse of the Poisson step, modulus C = D c.

    (1/C) sum_{x mod C}^* conj(chi(x)) e(l xbar / C) sum_{k mod C} e((x + m) k / C)
        = [gcd(m, C) = 1] conj(chi(-m)) e(-l mbar / C).

    The k-sums are formed exactly; the check is done after multiplying by C.
    """
    t0 = time.perf_counter()
    chi = _char({"D": D, "chi": chi})
    _require(chi.modulus == D, "character modulus must equal D")
    C = D * c
    L = math.lcm(C, chi.order)
    chi_ex = chi.unit_exponents(L)
    lhs = Cyclotomic(L)
    for x in range(C):
        if math.gcd(x, C) != 1:
            continue
        ksum = np.zeros(C, dtype=np.int64)
        np.add.at(ksum, ((x + m) * np.arange(C)) % C, 1)
        inner = Cyclotomic(C, ksum)
        lhs = lhs + inner * Cyclotomic(L, {(l * inv(x, C)) * (L // C) - chi_ex[x % D]: 1})
    if math.gcd(m, C) == 1:
        rhs = Cyclotomic(L, {(-l * inv(m, C)) * (L // C) - chi_ex[(-m) % D]: C})
    else:
        rhs = Cyclotomic(L)
    note = "m = 0 survives because C = 1" if (m % C == 0 and C == 1) else ""
    return _exact_result("poisson_arith", {"D": D, "c": c, "l": l, "m": m, "chi": chi.spec()}, lhs, rhs, note, t0)


def check_crt_regroup(D: int, m: int, l: int, cprime: int, chi=None) -> IdentityCheckResult:
    """conj(chi(m)) tau(conj chi) e(l * inv(c')/m) = sum_{x mod Dm, D xbar l = c' (Dm)} conj(chi(x)) e(x/(Dm)).

    The inverse of c' (= D c) on the left is taken mod m.
    """
    t0 = time.perf_counter()
    chi = _char({"D": D, "chi": chi})
    _require(math.gcd(m, D) == 1, f"gcd(m={m}, D={D}) != 1")
    _require(cprime % D == 0, f"c'={cprime} is not divisible by D={D}")
    _require(math.gcd(cprime * l, m) == 1, f"gcd(c' l, m) != 1 for c'={cprime}, l={l}, m={m}")
    M = D * m
    L = math.lcm(M, chi.order)
    chi_ex = chi.unit_exponents(L)
    cb = chi.conj()
    lhs = gauss_sum_exact(cb) * Cyclotomic(L, {-chi_ex[m % D] + (l * inv(cprime, m) % m) * (L // m): 1})
    rhs = Cyclotomic(L)
    for x in range(M):
        if math.gcd(x, M) != 1:
            continue
        if (D * inv(x, M) * l - cprime) % M:
            continue
        rhs = rhs + Cyclotomic(L, {x * (L // M) - chi_ex[x % D]: 1})
    return _exact_result("crt_regroup", {"D": D, "m": m, "l": l, "cprime": cprime, "chi": chi.spec()}, lhs, rhs, t0=t0)


def check_crt_expansion(D: int, m: int, l: int, cprime: int, chi=None) -> IdentityCheckResult:
    """Orthogonality rewrite of the restricted CRT sum.

    sum_{x mod Dm, D xbar l = c'} conj(chi(x)) e(x/(Dm))
        = (1/Dm) sum_{x mod Dm}^* conj(chi(x)) e(x/(Dm)) sum_{k mod Dm} e(k (D l xbar - c')/(Dm)).

    Holds for every c' (both sides vanish when D does not divide c' or
    gcd(c', m) > 1), which is how the restriction on c' drops out.
    """
    t0 = time.perf_counter()
    chi = _char({"D": D, "chi": chi})
    _require(math.gcd(m, D) == 1, f"gcd(m={m}, D={D}) != 1")
    M = D * m
    L = math.lcm(M, chi.order)
    chi_ex = chi.unit_exponents(L)
    lhs, rhs = Cyclotomic(L), Cyclotomic(L)
    for x in range(M):
        if math.gcd(x, M) != 1:
            continue
        mono = Cyclotomic(L, {x * (L // M) - chi_ex[x % D]: 1})
        r = (D * l * inv(x, M) - cprime) % M
        if r == 0:
            lhs = lhs + mono * M
        ksum = np.zeros(M, dtype=np.int64)
        np.add.at(ksum, (np.arange(M) * r) % M, 1)
        rhs = rhs + mono * Cyclotomic(M, ksum)
    return _exact_result(
        "crt_expansion", {"D": D, "m": m, "l": l, "cprime": cprime, "chi": chi.spec()}, lhs, rhs,
        note="both sides scaled by Dm", t0=t0,
    )


def check_gauss_vanish(D: int, k: int, chi=None) -> IdentityCheckResult:
    """sum_{b mod D^{k+1}} conj(chi(b)) e(b / D^{k+1}) = 0 for primitive chi mod D, k >= 1."""
    t0 = time.perf_counter()
    chi = _char({"D": D, "chi": chi})
    _require(chi.primitive and chi.modulus == D and D > 1, "needs a primitive character mod D > 1")
    _require(k >= 1, "k must be >= 1")
    Q = D ** (k + 1)
    L = math.lcm(Q, chi.order)
    ex = chi.conj().unit_exponents(L)
    b = np.arange(Q)
    keep = ex[b % D] >= 0
    vec = np.zeros(L, dtype=np.int64)
    np.add.at(vec, (ex[b[keep] % D] + b[keep] * (L // Q)) % L, 1)
    return _exact_result("gauss_vanish", {"D": D, "k": k, "chi": chi.spec()}, Cyclotomic(L, vec), Cyclotomic(L), t0=t0)


def check_kloosterman_shift(j: int, l: int, D: int, k: int, c: int, chi=None) -> IdentityCheckResult:
    """conj(chi(j)) S_chi(j, l D^{k+1}, Dc) = S_chi(1, j l D^{k+1}, Dc) for gcd(j, Dc) = 1."""
    t0 = time.perf_counter()
    chi = _char({"D": D, "chi": chi})
    C = D * c
    _require(math.gcd(j, C) == 1, f"gcd(j={j}, Dc={C}) != 1")
    b = l * D ** (k + 1)
    lhs = kloosterman_exact(KloostermanParams(j, b, C, chi)) * chi.conj().exact(j)
    rhs = kloosterman_exact(KloostermanParams(1, j * b, C, chi))
    return _exact_result("kloosterman_shift", {"j": j, "l": l, "D": D, "k": k, "c": c, "chi": chi.spec()}, lhs, rhs, t0=t0)


def check_lemma_sum(D: int, k: int, c: int, l: int, m: int, chi=None) -> IdentityCheckResult:
    """The arithmetic sum of the higher-power vanishing lemma is identically zero:

    sum_{x mod Dc}^* conj(chi(x)) e(x/(Dc)) sum_{a mod Dc} e(xbar a D^{k+1} l/(Dc)) e(-a m/(Dc)) = 0.
    """
    t0 = time.perf_counter()
    chi = _char({"D": D, "chi": chi})
    _require(chi.primitive and D > 1 and k >= 1, "needs primitive chi mod D > 1 and k >= 1")
    _require(math.gcd(l, D) == 1, f"gcd(l={l}, D={D}) != 1")
    C = D * c
    L = math.lcm(C, chi.order)
    chi_ex = chi.unit_exponents(L)
    lhs = Cyclotomic(L)
    for x in range(C):
        if math.gcd(x, C) != 1:
            continue
        r = (inv(x, C) * D ** (k + 1) * l - m) % C
        if r:
            continue
        lhs = lhs + Cyclotomic(L, {x * (L // C) - chi_ex[x % D]: C})
    return _exact_result("lemma_sum", {"D": D, "k": k, "c": c, "l": l, "m": m, "chi": chi.spec()}, lhs, Cyclotomic(L), t0=t0)


def check_gauss_product(D: int, chi=None) -> IdentityCheckResult:
    """tau(chi) tau(conj chi) = chi(-1) D."""
    t0 = time.perf_counter()
    chi = _char({"D": D, "chi": chi})
    lhs = gauss_sum_exact(chi) * gauss_sum_exact(chi.conj())
    return _exact_result("gauss_product", {"D": D, "chi": chi.spec()}, lhs, Cyclotomic.integer(chi.parity * D), t0=t0)


IDENTITIES: dict[str, Callable[..., IdentityCheckResult]] = {
    "orthogonality": check_orthogonality,
    "reciprocity": check_reciprocity,
    "poisson_arith": check_poisson_arith,
    "crt_regroup": check_crt_regroup,
    "crt_expansion": check_crt_expansion,
    "gauss_vanish": check_gauss_vanish,
    "kloosterman_shift": check_kloosterman_shift,
    "lemma_sum": check_lemma_sum,
    "gauss_product": check_gauss_product,
}


def check_identity(name: str, **params) -> IdentityCheckResult:
    try:
        fn = IDENTITIES[name]
    except KeyError:
        raise UnknownIdentity(name) from None
    return fn(**params)
