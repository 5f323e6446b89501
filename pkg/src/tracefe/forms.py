"""Holomorphic newforms: q-expansions, level-1 eigenbases, coefficient files, duals."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path

import flint
import numpy as np

from .arith import divisors, factorize
from .characters import CharacterSpecError, DirichletCharacter, gauss_sum

__all__ = [
    "DimensionZero", "ParseError", "InvariantViolation", "OutOfRange", "ModulusMismatch",
    "QExpansion", "HoloNewform", "EigenformSpace", "delta_qexp", "eisenstein_qexp", "eigenbasis_level1",
    "dim_cusp_level1", "load_coefficients", "export_coefficients", "normalize_a", "kappa", "dual_form",
    "eta_factor", "level5_form", "DATA_DIR", "DEFAULT_NMAX",
]

DATA_DIR = Path(__file__).with_name("data")
DEFAULT_NMAX = 10_000


class DimensionZero(ValueError):
    pass


class ParseError(ValueError):
    pass


class InvariantViolation(ValueError):
    pass


class OutOfRange(IndexError):
    pass


class ModulusMismatch(ValueError):
    pass


# -- q-expansions ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QExpansion:
    """Exact integer q-expansion b_0 + b_1 q + ... + b_{prec-1} q^{prec-1}."""

    weight: int
    poly: flint.fmpz_poly
    prec: int
    level1: bool = True

    @classmethod
    def from_coeffs(cls, weight: int, coeffs, level1: bool = True) -> "QExpansion":
        coeffs = [int(c) for c in coeffs]
        return cls(weight, flint.fmpz_poly(coeffs), len(coeffs), level1)

    def __getitem__(self, n: int) -> int:
        if not 0 <= n < self.prec:
            raise OutOfRange(f"coefficient {n} outside precision {self.prec}")
        return int(self.poly[n])

    def __len__(self) -> int:
        return self.prec

    def coefficients(self) -> list[int]:
        c = [int(x) for x in self.poly.coeffs()][: self.prec]
        return c + [0] * (self.prec - len(c))

    def __eq__(self, other) -> bool:
        return isinstance(other, QExpansion) and self.prec == other.prec and self.coefficients() == other.coefficients()

    def __mul__(self, other):
        if isinstance(other, QExpansion):
            prec = min(self.prec, other.prec)
            return QExpansion(self.weight + other.weight, self.poly.mul_low(other.poly, prec), prec,
                              self.level1 and other.level1)
        return QExpansion(self.weight, self.poly * int(other), self.prec, self.level1)

    __rmul__ = __mul__

    def __add__(self, other: "QExpansion") -> "QExpansion":
        if self.weight != other.weight:
            raise ValueError("adding q-expansions of different weight")
        prec = min(self.prec, other.prec)
        return QExpansion(self.weight, (self.poly + other.poly).truncate(prec) if prec else self.poly, prec, self.level1)

    def __sub__(self, other: "QExpansion") -> "QExpansion":
        return self + (-1) * other

    def __pow__(self, e: int) -> "QExpansion":
        if e == 0:
            return QExpansion(0, flint.fmpz_poly([1]), self.prec, self.level1)
        return QExpansion(self.weight * e, self.poly.pow_trunc(e, self.prec), self.prec, self.level1)

    def hecke(self, p: int, chi: DirichletCharacter | None = None) -> "QExpansion":
        """(T_p b)_n = b_{np} + chi(p) p^{k-1} b_{n/p} on the available range."""
        chip = 1 if chi is None else round(chi(p).real)
        c = self.coefficients()
        out_prec = (self.prec - 1) // p + 1
        out = [c[n * p] + (chip * p ** (self.weight - 1) * c[n // p] if n % p == 0 else 0) for n in range(out_prec)]
        return QExpansion.from_coeffs(self.weight, out, self.level1)


def _euler_product(power: int, prec: int) -> flint.fmpz_poly:
    """prod_{m>=1} (1 - q^m)^power to precision q^prec via the pentagonal number theorem."""
    c = [0] * prec
    m = 0
    while True:
        hit = False
        for mm in ((m, -m) if m else (0,)):
            g = mm * (3 * mm - 1) // 2
            if g < prec:
                c[g] += -1 if mm % 2 else 1
                hit = True
        if not hit:
            break
        m += 1
    return flint.fmpz_poly(c).pow_trunc(power, prec)


def delta_qexp(N: int) -> QExpansion:
    """Delta = q prod (1 - q^n)^24 through q^N."""
    if N < 1:
        raise ValueError("N must be at least 1")
    e = _euler_product(24, N)
    return QExpansion(12, e.left_shift(1).truncate(N + 1), N + 1)


def _sigma_table(power: int, N: int) -> list[int]:
    s = [0] * (N + 1)
    for d in range(1, N + 1):
        dp = d**power
        for m in range(d, N + 1, d):
            s[m] += dp
    return s


def eisenstein_qexp(weight: int, N: int) -> QExpansion:
    """E_4 = 1 + 240 sum sigma_3(n) q^n and E_6 = 1 - 504 sum sigma_5(n) q^n through q^N."""
    if weight not in (4, 6):
        raise ValueError("only E_4 and E_6 are provided")
    if N < 1:
        raise ValueError("N must be at least 1")
    scale = 240 if weight == 4 else -504
    s = _sigma_table(weight - 1, N)
    return QExpansion.from_coeffs(weight, [1] + [scale * s[n] for n in range(1, N + 1)])


def dim_cusp_level1(k: int) -> int:
    if k < 12 or k % 2:
        return 0
    return k // 12 - (1 if k % 12 == 2 else 0)


# -- newforms ------------------------------------------------------------------

def kappa(k: int) -> float:
    """kappa_k = sqrt(pi^{-k} Gamma(k)) / 2^{k-1}."""
    return math.exp(0.5 * (math.lgamma(k) - k * math.log(math.pi)) - (k - 1) * math.log(2))


@dataclass(frozen=True, eq=False)
class HoloNewform:
    """A newform of weight k, level D, nebentypus chi.

    ``coeffs[n]`` holds the analytically normalized c_n = b_n / n^{(k-1)/2},
    where b_n are the arithmetic coefficients with b_1 = 1.  ``raw`` keeps the
    exact integers b_n when they are known.
    """

    weight: int
    level: int
    chi: DirichletCharacter
    coeffs: np.ndarray
    raw: tuple[int, ...] | None = None
    provenance: str = "generated"
    label: str = ""

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    def c(self, n: int) -> complex:
        if not 1 <= n <= self.n_max:
            raise OutOfRange(f"c_{n} requested but only n <= {self.n_max} is available")
        return complex(self.coeffs[n])

    def c_range(self, N: int) -> np.ndarray:
        """c_1..c_N as an array indexed from 0 (entry 0 is c_0 = 0)."""
        if N > self.n_max:
            raise OutOfRange(f"c_n for n <= {N} requested but only n <= {self.n_max} is available")
        return self.coeffs[: N + 1]

    def arithmetic(self, n: int):
        """b_n = c_n n^{(k-1)/2}, exact when known."""
        if self.raw is not None:
            if not 1 <= n <= self.n_max:
                raise OutOfRange(f"b_{n} outside 1..{self.n_max}")
            return self.raw[n]
        return self.c(n) * n ** ((self.weight - 1) / 2)

    @property
    def c_D(self) -> complex:
        return self.c(self.level) if self.level > 1 else 1.0 + 0j

    @property
    def eta(self) -> complex:
        return eta_factor(self)

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(self.coeffs.imag) == 0))

    def validate(self, exact_limit: int | None = None, tol: float = 1e-8) -> "HoloNewform":
        """Re-check c_1 = 1, the Hecke relation for n, l <= sqrt(N_max), and |c_D| = 1."""
        if abs(self.c(1) - 1) > tol:
            raise InvariantViolation(f"c_1 = {self.c(1)} is not 1")
        if self.level > 1 and abs(abs(self.c_D) - 1) > tol:
            raise InvariantViolation(f"|c_{self.level}| = {abs(self.c_D):.12g} is not 1")
        lim = exact_limit or math.isqrt(self.n_max)
        exact = self.raw is not None and self.chi.is_trivial
        k = self.weight
        chi_vals = {r: self.chi(r) for r in range(1, lim + 1)}
        for n in range(2, lim + 1):
            for l in range(n, lim + 1):
                if math.gcd(n * l, self.level) != 1 or n * l > self.n_max:
                    continue
                rs = divisors(math.gcd(n, l))
                if exact:
                    lhs = self.raw[n] * self.raw[l]
                    rhs = sum(r ** (k - 1) * self.raw[n * l // (r * r)] for r in rs)
                    bad = lhs != rhs
                else:
                    lhs = self.coeffs[n] * self.coeffs[l]
                    rhs = sum(chi_vals[r] * self.coeffs[n * l // (r * r)] for r in rs)
                    bad = abs(lhs - rhs) > tol
                if bad:
                    terms = " + ".join(
                        (f"chi({r}) c_{n * l // (r * r)}" if r > 1 else f"c_{n * l}") for r in rs
                    )
                    raise InvariantViolation(
                        f"Hecke relation c_{n} c_{l} = {terms} fails at (n, l) = ({n}, {l}): "
                        f"{complex(lhs):.12g} vs {complex(rhs):.12g}"
                    )
        return self


@dataclass
class EigenformSpace:
    weight: int
    level: int
    chi: DirichletCharacter
    forms: list[HoloNewform] = field(default_factory=list)
    hecke_matrices: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.forms)

    def __len__(self) -> int:
        return len(self.forms)

    def __iter__(self):
        return iter(self.forms)

    def __getitem__(self, i: int) -> HoloNewform:
        return self.forms[i]

    def eigenvalue_vectors(self, primes) -> np.ndarray:
        return np.array([[f.c(p) for p in primes] for f in self.forms])

    def separating(self, primes, tol: float = 1e-6) -> bool:
        v = self.eigenvalue_vectors(primes) if primes else np.zeros((len(self.forms), 0))
        for i in range(len(v)):
            for j in range(i + 1, len(v)):
                if v.shape[1] == 0 or np.max(np.abs(v[i] - v[j])) <= tol:
                    return False
        return True

    def charpoly(self, p: int = 2) -> list[int]:
        """Integer characteristic polynomial of T_p (arithmetic normalization), highest degree first."""
        M = [[flint.fmpq(x.numerator, x.denominator) for x in row] for row in self.hecke_matrices[p]]
        cp = flint.fmpq_mat(M).charpoly()
        return [int(c.p) // int(c.q) for c in reversed(cp.coeffs())]


def _miller_basis(k: int, prec: int) -> list[QExpansion]:
    """Delta^j E_4^a E_6^b (4a + 6b = k - 12j), j = 1..dim; f_j = q^j + O(q^{j+1})."""
    d = dim_cusp_level1(k)
    delta = delta_qexp(prec - 1)
    e4, e6 = eisenstein_qexp(4, prec - 1), eisenstein_qexp(6, prec - 1)
    basis = []
    for j in range(1, d + 1):
        w = k - 12 * j
        b = 0 if w % 4 == 0 else 1
        a = (w - 6 * b) // 4
        f = delta**j
        if a:
            f = f * e4**a
        if b:
            f = f * e6
        basis.append(f)
    return basis


def _hecke_matrix(basis: list[QExpansion], p: int) -> list[list[Fraction]]:
    """Matrix of T_p in a triangular basis (column j = coordinates of T_p f_j)."""
    d = len(basis)
    cols = []
    for f in basis:
        img = f.hecke(p)
        target = [Fraction(img[n]) for n in range(1, d + 1)]
        coords = [Fraction(0)] * d
        for i in range(d):
            coords[i] = target[i]
            for n in range(d):
                target[n] -= coords[i] * basis[i][n + 1]
        cols.append(coords)
    return [[cols[j][i] for j in range(d)] for i in range(d)]


def eigenbasis_level1(k: int, N: int = DEFAULT_NMAX, primes: tuple[int, ...] = (2, 3, 5, 7)) -> EigenformSpace:
    """Hecke eigenbasis of S_k(SL_2(Z)) with coefficients through n = N."""
    if k % 2:
        raise ValueError("weight must be even")
    d = dim_cusp_level1(k)
    if d == 0:
        raise DimensionZero(f"S_{k}(SL_2(Z)) = 0")
    chi = DirichletCharacter.trivial(1)
    prec = max(N, 3 * d) + 1
    basis = _miller_basis(k, prec)
    mats = {p: _hecke_matrix(basis, p) for p in (2,)}
    if d == 1:
        raw = tuple(basis[0].coefficients())
        vecs = [np.array([1.0])]
    else:
        M = np.array([[float(x) for x in row] for row in mats[2]])
        w, V = np.linalg.eig(M)
        order = np.argsort(-w.real)
        vecs = [V[:, i] / V[0, i] for i in order]
        raw = None
    n = np.arange(prec, dtype=float)
    norm = np.zeros(prec)
    norm[1:] = n[1:] ** (-(k - 1) / 2)
    forms = []
    coeff_arrays = None
    if d > 1:
        # exact basis coefficients, scaled by n^{-(k-1)/2} before mixing so floats stay in range
        coeff_arrays = [np.array([float(x) for x in f.coefficients()]) * norm for f in basis]
    for idx, v in enumerate(vecs):
        if d == 1:
            c = np.array([float(x) for x in raw]) * norm
            r = raw
        else:
            c = sum(np.real_if_close(v[j]) * coeff_arrays[j] for j in range(d))
            r = None
        f = HoloNewform(k, 1, chi, np.asarray(c, dtype=complex), raw=r, provenance="generated",
                        label=f"S{k}[{idx}]")
        forms.append(f)
    space = EigenformSpace(k, 1, chi, forms, mats)
    _check_t3(space)
    if not space.separating(primes):
        raise InvariantViolation(f"eigenforms of weight {k} are not separated by primes {primes}")
    return space


def _check_t3(space: EigenformSpace, tol: float = 1e-8) -> None:
    """Simultaneous-eigenvector check: c_{3n} + c_{n/3} = c_3 c_n (analytic normalization)."""
    for f in space.forms:
        c = f.coeffs
        top = f.n_max // 3
        n = np.arange(1, top + 1)
        lhs = c[3 * n] + np.where(n % 3 == 0, c[n // 3], 0)
        res = np.max(np.abs(lhs - c[3] * c[n])) if top else 0.0
        if res > tol:
            raise InvariantViolation(f"T_3 eigenvalue residual {res:.3g} for {f.label}")


# -- coefficient files ---------------------------------------------------------

def _parse_number(tok: str, lineno: int) -> int | Decimal:
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return Decimal(tok)
    except InvalidOperation as exc:
        raise ParseError(f"line {lineno}: cannot parse number {tok!r}") from exc


def load_coefficients(path, validate: bool = True) -> HoloNewform:
    """Read a coefficient file (``# weight``, ``# level``, ``# char``, ``# normalization`` headers)."""
    path = Path(path)
    header: dict[str, str] = {}
    rows: dict[int, tuple] = {}
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = re.fullmatch(r"#\s*(weight|level|char|normalization)\s+(.+)", line)
            if m:
                header[m.group(1)] = m.group(2).strip()
            continue
        toks = line.split()
        if len(toks) not in (2, 3):
            raise ParseError(f"line {lineno}: expected 'n re [im]'")
        try:
            n = int(toks[0])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad index {toks[0]!r}") from exc
        if n < 1 or n in rows:
            raise ParseError(f"line {lineno}: index {n} invalid or repeated")
        rows[n] = tuple(_parse_number(t, lineno) for t in toks[1:])
    for key in ("weight", "level", "normalization"):
        if key not in header:
            raise ParseError(f"missing '# {key}' header")
    try:
        k, D = int(header["weight"]), int(header["level"])
    except ValueError as exc:
        raise ParseError("weight and level must be integers") from exc
    norm = header["normalization"]
    if norm not in ("hecke", "analytic"):
        raise ParseError(f"unknown normalization {norm!r}")
    try:
        chi = DirichletCharacter.parse(header.get("char", f"D={D}" if D == 1 else ""))
    except CharacterSpecError as exc:
        raise ParseError(str(exc)) from exc
    if chi.modulus != D:
        raise ParseError(f"character modulus {chi.modulus} differs from level {D}")
    N = max(rows) if rows else 0
    if sorted(rows) != list(range(1, N + 1)):
        raise ParseError("coefficient indices must be 1..N without gaps")
    c = np.zeros(N + 1, dtype=complex)
    exact = norm == "hecke" and all(len(v) == 1 or v[1] == 0 for v in rows.values()) and all(
        isinstance(v[0], int) for v in rows.values())
    for n, v in rows.items():
        val = complex(float(v[0]), float(v[1]) if len(v) > 1 else 0.0)
        c[n] = val * n ** (-(k - 1) / 2) if norm == "hecke" else val
    raw = (0,) + tuple(rows[n][0] for n in range(1, N + 1)) if exact else None
    f = HoloNewform(k, D, chi, c, raw=raw, provenance="ingested", label=path.stem)
    return f.validate() if validate else f


def export_coefficients(f: HoloNewform, path, N: int | None = None) -> Path:
    """Write f in the coefficient-file format; exact integers when they are known."""
    path = Path(path)
    N = f.n_max if N is None else N
    if N > f.n_max:
        raise OutOfRange(f"export of {N} coefficients requested, {f.n_max} available")
    lines = [f"# weight {f.weight}", f"# level {f.level}", f"# char {f.chi.spec()}", "# normalization hecke"]
    for n in range(1, N + 1):
        if f.raw is not None:
            lines.append(f"{n} {f.raw[n]}")
        else:
            b = f.c(n) * n ** ((f.weight - 1) / 2)
            lines.append(f"{n} {b.real!r} {b.imag!r}" if b.imag else f"{n} {b.real!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def level5_form(sign: str = "plus") -> HoloNewform:
    """One of the two weight-6 newforms of level 5 with quadratic nebentypus (shipped data)."""
    return load_coefficients(DATA_DIR / f"level5_weight6_{sign}.txt")


def level5_space() -> EigenformSpace:
    forms = [level5_form("plus"), level5_form("minus")]
    return EigenformSpace(6, 5, forms[0].chi, forms)


# -- normalization, duals, root numbers ------------------------------------------

def normalize_a(f: HoloNewform, n: int) -> complex:
    """a_n = kappa_k c_n."""
    return kappa(f.weight) * f.c(n)


def _split_level(n: int, D: int) -> tuple[int, int]:
    """n = n1 n2 with gcd(n1, D) = 1 and n2 | D^infinity."""
    n2 = 1
    for p, e in factorize(n).items():
        if D % p == 0:
            n2 *= p**e
    return n // n2, n2


def dual_form(f: HoloNewform) -> HoloNewform:
    """f_D: conj(chi)(n) c_n off the level, conj(c_n) for n | D^infinity, multiplicative in between."""
    D = f.level
    if D == 1 and f.chi.is_trivial:
        c = f.coeffs.conj() if not f.is_real else f.coeffs.copy()
        return HoloNewform(f.weight, 1, f.chi, c, f.raw, "dual", f"{f.label}_D")
    chib = f.chi.conj()
    c = np.zeros_like(f.coeffs)
    for n in range(1, f.n_max + 1):
        n1, n2 = _split_level(n, D)
        a1 = chib(n1) * f.coeffs[n1] if n1 > 1 else 1.0
        a2 = np.conj(f.coeffs[n2]) if n2 > 1 else 1.0
        c[n] = a1 * a2
    return HoloNewform(f.weight, D, chib, c, None, "dual", f"{f.label}_D")


def eta_factor(f: HoloNewform, tol: float = 1e-10) -> complex:
    """eta(f) = tau(chi) / (c_D sqrt(D)) with the Hecke-normalized c_D."""
    D = f.level
    if D == 1:
        return 1.0 + 0j
    if f.chi.modulus != D or not f.chi.primitive:
        raise ModulusMismatch(f"character {f.chi.spec()} is not primitive of modulus {D}")
    eta = complex(gauss_sum(f.chi)) / (f.c_D * math.sqrt(D))
    if abs(abs(eta) - 1) > tol:
        raise ModulusMismatch(f"|eta(f)| = {abs(eta):.15g} differs from 1")
    return eta
