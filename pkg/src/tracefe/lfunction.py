"""L-series, completed L-values, Voronoi summation, Hecke isolation and the smoothed-sum decay scan.

Coefficients are Hecke-normalized (c_1 = 1, |c_p| <= 2). The completed
L-function is Lambda(f, s) = gamma(f, s) L(f, s) with the gamma factor of
:mod:`tracefe.special`; at level 1 it equals

    2^{(3-k)/2} sqrt(pi) (2 pi)^{(k-1)/2} int_0^inf Phi(y) y^{s + (k-1)/2} dy/y,   Phi(y) = sum_n c_n n^{(k-1)/2} e^{-2 pi n y},

which is what the split-integral route evaluates without any modular reflection.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .analysis import TestFunction, bessel_transforms, fourier_transform, parse_test_function
from .arith import RationalMod1, inv
from .expsums import IdentityCheckResult, PreconditionViolated
from .forms import EigenformSpace, HoloNewform, dual_form, eta_factor
from .reports import VerificationReport
from .special import GammaFactor, bessel_j, log_gamma

__all__ = [
    "TailBoundExceedsTolerance", "QuadratureNonconvergent", "NotSeparating", "AllValuesBelowNoiseFloor",
    "GridTooShort", "LSeriesValue", "CompletedLValue", "l_series", "lambda_direct", "lambda_split", "fe_residual",
    "fe_report", "voronoi_check", "voronoi_kernel_mellin", "mellin_route_residual", "mellin_route_report",
    "IsolationCombination", "isolation_build", "isolation_apply", "completeness_check", "DecayScanResult",
    "decay_scan", "smoothed_sum", "smoothed_sum_geometric", "sarnak_appendix",
]


class TailBoundExceedsTolerance(RuntimeError):
    pass


class QuadratureNonconvergent(RuntimeError):
    def __init__(self, msg: str, required: int | None = None):
        super().__init__(msg)
        self.required = required


class NotSeparating(ValueError):
    pass


class AllValuesBelowNoiseFloor(RuntimeError):
    pass


class GridTooShort(ValueError):
    pass


def _ipow(e: int) -> complex:
    return (1, 1j, -1, -1j)[e % 4]


# -- L-series ------------------------------------------------------------------

@dataclass(frozen=True)
class LSeriesValue:
    s: complex
    value: complex
    tail_bound: float
    terms: int
    estimate: float = 0.0


def _divisor_tail(N: int, sigma: float) -> float:
    """Bound for sum_{n > N} d(n) n^{-sigma}, from sum_{n <= x} d(n) <= x (log x + 1) and partial summation."""
    a = sigma - 1
    return sigma * N ** (-a) * ((math.log(N) + 1) / a + 1 / a**2)


def l_series(f: HoloNewform, s, N_terms: int | None = None, tol: float | None = None) -> LSeriesValue:
    """sum_{n <= N} c_n n^{-s} with a divisor-bound tail certificate (needs Re s > 3/2)."""
    s = complex(s)
    if s.real <= 1.5:
        raise PreconditionViolated(f"direct series needs Re s > 3/2, got {s}")
    N = min(N_terms or f.n_max, f.n_max)
    n = np.arange(1, N + 1)
    terms = f.coeffs[1:N + 1] * np.exp(-s * np.log(n))
    val = complex(np.sum(terms))
    tail = _divisor_tail(N, s.real)
    if tol is not None and tail > tol:
        raise TailBoundExceedsTolerance(f"tail bound {tail:.3g} with {N} terms exceeds {tol:g}")
    # empirical size of the remainder: what the second half of the terms contributed
    est = abs(complex(np.sum(terms[N // 2:]))) * (N // 2) ** (1.5 - s.real)
    return LSeriesValue(s, val, tail, N, est)


# -- completed L-values ----------------------------------------------------------

@dataclass(frozen=True)
class CompletedLValue:
    form: str
    s: complex
    value: complex
    route: str
    error: float
    estimate: float = math.nan

    def __post_init__(self):
        if math.isnan(self.estimate):
            object.__setattr__(self, "estimate", self.error)


def lambda_direct(f: HoloNewform, s, N_terms: int | None = None) -> CompletedLValue:
    """gamma(f, s) times the direct series (Re s > 3/2)."""
    s = complex(s)
    L = l_series(f, s, N_terms)
    gam = GammaFactor(f.weight, f.level)(s)
    return CompletedLValue(f.label, s, gam * L.value, "direct-series", abs(gam) * L.tail_bound, abs(gam) * L.estimate)


def _phi_terms(f: HoloNewform, y: np.ndarray, N: int) -> tuple[np.ndarray, float]:
    """Phi(y) summed over n <= N at every y, and a bound on the omitted n > N (using |c_n| <= d(n) <= 2 sqrt n)."""
    k = f.weight
    n = np.arange(1, N + 1, dtype=float)
    w = f.coeffs[1:N + 1] * n ** ((k - 1) / 2)
    out = np.empty(len(y), dtype=complex)
    step = max(1, 2_000_000 // N)
    for i in range(0, len(y), step):
        out[i:i + step] = np.exp(-2 * math.pi * np.outer(y[i:i + step], n)) @ w
    ymin = float(np.min(y))
    m = np.arange(N + 1, N + 20001, dtype=float)
    tail = float(np.sum(2 * m ** (k / 2) * np.exp(-2 * math.pi * m * ymin)))
    return out, tail


def lambda_split(f: HoloNewform, s, y0: float = 0.02, y1: float = 12.0, panels: int = 48) -> CompletedLValue:
    """Lambda(f, s) at level 1 by integrating Phi(y) y^{s+(k-1)/2} dy/y over (0, 1] and [1, inf) separately.

    Both pieces use the q-expansion only. On [y0, 1] the n-sum is truncated
    at N_max with a certified remainder. Below y0 the integrand is bounded by
    the largest value of |Phi| seen on [y0, 2 y0] (it is exponentially small
    there), and above y1 by the first term's decay. The reported error is the
    sum of these bounds and the quadrature's resolution estimate.
    """
    if f.level != 1:
        raise PreconditionViolated("split-integral continuation is only available at level 1")
    s = complex(s)
    k = f.weight
    w = s + (k - 1) / 2
    N = f.n_max
    need = math.ceil(45 / (2 * math.pi * y0))
    if need > N:
        raise QuadratureNonconvergent(f"N_max={N} too small for y0={y0}", need)
    x, wt = quadrature.gl_rule(40)

    def piece(lo, hi, logscale):
        # integrate in t = log y
        edges = np.linspace(math.log(lo), math.log(hi), panels + 1)
        half = 0.5 * np.diff(edges)
        t = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x[None, :]).ravel()
        wts = (half[:, None] * wt[None, :]).ravel()
        y = np.exp(t)
        phi, tail = _phi_terms(f, y, min(N, math.ceil(60 / (2 * math.pi * lo)) + 50))
        vals = phi * np.exp(w * t)
        coarse = np.sum(vals * wts)
        # resolution estimate: the same with half the panels' nodes (20-point rule)
        x2, w2 = quadrature.gl_rule(20)
        t2 = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x2[None, :]).ravel()
        wts2 = (half[:, None] * w2[None, :]).ravel()
        phi2, _ = _phi_terms(f, np.exp(t2), min(N, math.ceil(60 / (2 * math.pi * lo)) + 50))
        alt = np.sum(phi2 * np.exp(w * t2) * wts2)
        bound_tail = tail * float(np.sum(np.abs(np.exp(w * t)) * wts))
        return coarse, abs(coarse - alt) + bound_tail, np.abs(phi)

    inner, e_in, phis = piece(y0, 1.0, True)
    outer, e_out, _ = piece(1.0, y1, True)
    # below y0: |Phi| is bounded by its largest computed value on [y0, 2 y0]
    probe = np.linspace(y0, 2 * y0, 64)
    pv, _ = _phi_terms(f, probe, N)
    near0 = float(np.max(np.abs(pv))) * y0 ** w.real / max(w.real, 1e-3) if w.real > 0 else math.inf
    # beyond y1: |Phi(y)| <= sum 2 n^{k/2} e^{-2 pi n y}
    far = 2 * math.exp(-2 * math.pi * y1) * y1 ** max(w.real, 0) * 4
    # gamma(f, s) = 2^{(3-k)/2} sqrt(pi) (2 pi)^{(k-1)/2} (2 pi)^{-s-(k-1)/2} Gamma(s + (k-1)/2)
    const = 2 ** ((3 - k) / 2) * math.sqrt(math.pi) * (2 * math.pi) ** ((k - 1) / 2)
    val = const * (inner + outer)
    err = const * (e_in + e_out + near0 + far) + 1e-15 * abs(val)
    return CompletedLValue(f.label, s, val, "split-integral", err)


def _lambda(f: HoloNewform, s) -> CompletedLValue:
    """Direct series where it converges absolutely, split integral otherwise."""
    s = complex(s)
    if s.real >= 2:
        return lambda_direct(f, s)
    return lambda_split(f, s)


def fe_residual(f: HoloNewform, s) -> tuple[float, float, CompletedLValue, CompletedLValue]:
    """|Lambda(f, s) - i^k Lambda(f, 1 - s)| with the combined error estimate (level 1)."""
    a, b = _lambda(f, s), _lambda(f, 1 - complex(s))
    return abs(a.value - _ipow(f.weight) * b.value), a.error + b.error, a, b


def fe_report(f: HoloNewform, s, tol: float = 1e-8) -> VerificationReport:
    t0 = time.perf_counter()
    res, err, a, b = fe_residual(f, s)
    s = complex(s)
    # certified bounds go to the tails; the floor uses the empirical estimates
    return VerificationReport("fe", {"k": f.weight, "D": f.level, "s": s, "routes": f"{a.route}|{b.route}"},
                              a.value, _ipow(f.weight) * b.value, res, tol, a.estimate + b.estimate,
                              {"lambda_s": a.error, "lambda_1ms": b.error}, None, time.perf_counter() - t0)


# -- Voronoi ---------------------------------------------------------------------

def voronoi_check(f: HoloNewform, g: TestFunction, a: int, c: int, tol: float = 1e-6, chunk: int = 500) -> VerificationReport:
    """sum_n c_n e(an/c) g(n) against (2 pi i^k eta chi(-c) / (c sqrt D)) sum_n c_n(f_D) e(-n inv(aD)/c) B_c(n).

    B_c(n) = int g(x) J_{k-1}(4 pi sqrt(n x)/(c sqrt D)) dx. The dual sum runs
    until a chunk's majorant (|c_n| <= 2 sqrt n) is below tol * 1e-3.
    """
    t0 = time.perf_counter()
    D, k = f.level, f.weight
    if math.gcd(a * D, c) != 1 or c < 1:
        raise PreconditionViolated(f"need gcd(aD, c) = 1 with c >= 1, got a={a}, c={c}, D={D}")
    params = {"k": k, "D": D, "a": a, "c": c, "g": g.spec()}
    if g.is_zero:
        return VerificationReport("voronoi", params, 0, 0, 0.0, tol, 0.0, {}, None, time.perf_counter() - t0)
    ints = np.arange(math.ceil(g.A), math.floor(g.B) + 1)
    if ints.size and ints[-1] > f.n_max:
        raise PreconditionViolated("test function support exceeds the coefficient table")
    tw = np.array([RationalMod1(a * int(n), c).e() for n in ints])
    lhs = complex(np.sum(f.coeffs[ints] * tw * g(ints.astype(float))))
    fd = dual_form(f)
    abar = inv((a * D) % c, c) if c > 1 else 0
    total, last, N = 0j, math.inf, 0
    while N < f.n_max:
        ns = np.arange(N + 1, min(N + chunk, f.n_max) + 1)
        B = bessel_transforms(g, k - 1, ns, math.sqrt(D) * c)
        tw = np.exp(-2j * math.pi * ((ns * abar) % c) / c)
        total += np.sum(fd.coeffs[ns] * tw * B)
        last = float(np.sum(2 * np.sqrt(ns) * np.abs(B)))
        N = int(ns[-1])
        if last < tol * 1e-3:
            break
    chi_mc = f.chi(-c) if D > 1 else 1.0
    pref = 2 * math.pi * _ipow(k) * eta_factor(f) * chi_mc / (c * math.sqrt(D))
    rhs = pref * total
    return VerificationReport("voronoi", params, lhs, rhs, abs(lhs - rhs), tol, 1e-15,
                              {f"dual.last_chunk.N{N}": last * abs(pref)}, None, time.perf_counter() - t0)


def voronoi_kernel_mellin(k: int, s) -> complex:
    """H(s) = int_0^inf J_{k-1}(4 pi sqrt y) y^{s-1} dy = (2 pi)^{-2s} Gamma(s + (k-1)/2) / Gamma((k+1)/2 - s)."""
    s = complex(s)
    return cmath.exp(-2 * s * math.log(2 * math.pi) + log_gamma(s + (k - 1) / 2) - log_gamma((k + 1) / 2 - s))


def mellin_route_residual(f: HoloNewform, s) -> tuple[float, float]:
    """Mellin transform of the a = c = 1 Voronoi defect, at s, scaled to the completed normalization.

    Taking the Mellin transform of both sides of the Voronoi identity in the
    test function gives, pointwise in s, the defect L(f, 1-s) - 2 pi i^k H(s) L(f, s).
    Multiplied by gamma(f, 1-s) this is Lambda(1-s) - i^k Lambda(s) rewritten
    through the kernel H, so its modulus must match fe_residual(f, s).
    """
    s = complex(s)
    k = f.weight
    L_s = l_series(f, s)
    b = lambda_split(f, 1 - s)
    gam = GammaFactor(k, f.level)
    L_1ms = b.value / gam(1 - s)
    defect = gam(1 - s) * (L_1ms - 2 * math.pi * _ipow(k) * voronoi_kernel_mellin(k, s) * L_s.value)
    err = b.error + abs(gam(1 - s) * 2 * math.pi * voronoi_kernel_mellin(k, s)) * L_s.estimate
    return abs(defect), err


def mellin_route_report(f: HoloNewform, s, tol: float = 1e-6) -> VerificationReport:
    t0 = time.perf_counter()
    m, em = mellin_route_residual(f, s)
    r, _, A, B = fe_residual(f, s)
    er = A.estimate + B.estimate
    return VerificationReport("voronoi.mellin", {"k": f.weight, "D": f.level, "s": complex(s)}, m, r, abs(m - r), tol,
                              em + er, {"mellin": em, "fe": er}, None, time.perf_counter() - t0,
                              note=f"mellin defect {m:.3e}, fe residual {r:.3e}")


# -- Hecke isolation ---------------------------------------------------------------

@dataclass
class IsolationCombination:
    """sum_m beta_m a_m(.) as a finite linear combination of coefficient functionals."""

    target: int
    primes: tuple
    beta: dict = field(default_factory=dict)
    factors: list = field(default_factory=list)

    def evaluate(self, f: HoloNewform) -> complex:
        return complex(sum(b * f.c(m) for m, b in self.beta.items()))


def _hecke_multiply(beta: dict, q: int, chi) -> dict:
    """beta * a_q expanded with c_n c_q = c_{nq} + chi(q) c_{n/q} [q | n] (q prime)."""
    out: dict = {}
    for n, b in beta.items():
        out[n * q] = out.get(n * q, 0) + b
        if n % q == 0:
            out[n // q] = out.get(n // q, 0) + b * chi(q)
    return out


def isolation_build(space: EigenformSpace, target: int, primes) -> IsolationCombination:
    """Lagrange product over f' != f of (a_q - c_q(f')) / (c_q(f) - c_q(f')), one separating prime q per f'."""
    primes = tuple(primes)
    f0 = space.forms[target]
    beta = {1: 1.0 + 0j}
    factors = []
    for j, f1 in enumerate(space.forms):
        if j == target:
            continue
        q = next((p for p in primes if abs(f0.c(p) - f1.c(p)) > 1e-6), None)
        if q is None:
            raise NotSeparating(f"forms {target} and {j} agree on primes {list(primes)}; enlarge the prime set")
        d = f0.c(q) - f1.c(q)
        shifted = _hecke_multiply(beta, q, space.chi)
        beta = {n: shifted.get(n, 0) / d - beta.get(n, 0) * f1.c(q) / d for n in set(shifted) | set(beta)}
        factors.append((j, q))
    return IsolationCombination(target, primes, {n: b for n, b in sorted(beta.items()) if b != 0}, factors)


def isolation_apply(comb: IsolationCombination, space: EigenformSpace, values) -> complex:
    """sum_f comb(f) v_f."""
    values = list(values)
    if len(values) != space.dimension:
        raise ValueError("need one value per basis form")
    return complex(sum(comb.evaluate(f) * v for f, v in zip(space.forms, values)))


def completeness_check(space: EigenformSpace, gs, l: int = 1, target: int = 0, tol: float = 1e-6,
                       primes=(2, 3, 5, 7)) -> list[VerificationReport]:
    """Per-form Voronoi defects d_f(g) = sum c_n g(n) - (2 pi i^k eta / sqrt D) sum c_n(f_D) B(n).

    For each g the averaged functional sum_f w_f conj c_l(f) d_f(g) is checked,
    then the isolation combination extracts d_{f target}(g). A finite family
    of test functions samples the density argument; it does not exhaust it.
    """
    from .traceformula import fit_spectral_weights

    w, _ = fit_spectral_weights(space)
    comb = isolation_build(space, target, primes)
    out = []
    for g in gs:
        t0 = time.perf_counter()
        defects = [voronoi_check(f, g, 1, 1, tol) for f in space.forms]
        d = [r.lhs - r.rhs for r in defects]
        avg = sum(wf * np.conj(f.c(l)) * df for wf, f, df in zip(w, space.forms, d))
        iso = isolation_apply(comb, space, d)
        out.append(VerificationReport("completeness", {"k": space.weight, "D": space.level, "l": l, "g": g.spec()},
                                      avg, 0, abs(avg), tol, 1e-15, {}, None, time.perf_counter() - t0,
                                      note=f"isolated defect of form {target}: {abs(iso):.3e}"))
        out[-1].passed = out[-1].passed and abs(iso) <= tol
    return out


# -- decay scan and the appendix cross-check --------------------------------------------

@dataclass
class DecayScanResult:
    X: list
    values: list
    floors: list
    slope: float
    threshold: float
    passed: bool
    vacuous: bool = False
    note: str = ""

    def plot_data(self) -> str:
        return "".join(f"{math.log(x):.12g} {math.log(abs(v)) if v else float('-inf'):.12g}\n"
                       for x, v in zip(self.X, self.values))


def _scaled(g: TestFunction, X: float) -> TestFunction:
    """x -> g(x / X) as a test function on [X A, X B]."""
    from dataclasses import replace

    scale = g.scale / X**g.degree if g.family == "bump-poly" else g.scale
    return replace(g, A=g.A * X, B=g.B * X, scale=scale)


def smoothed_sum(f: HoloNewform, g: TestFunction, X: float) -> tuple[complex, float]:
    """S(X) = sum_n c_n g(n/X) and its roundoff floor."""
    if g.is_zero:
        return 0j, 0.0
    gX = _scaled(g, X)
    ints = np.arange(math.ceil(gX.A), math.floor(gX.B) + 1)
    if ints.size and ints[-1] > f.n_max:
        raise PreconditionViolated("X exceeds the coefficient table")
    terms = f.coeffs[ints] * gX(ints.astype(float))
    return complex(np.sum(terms)), 1e-16 * float(np.sum(np.abs(terms))) * max(1, len(ints)) ** 0.5


def decay_scan(f: HoloNewform, g: TestFunction, X_grid, threshold: float = -3.0) -> DecayScanResult:
    """Fitted log-log slope of |S(X)| over the grid; values at the roundoff floor are excluded from the fit."""
    X_grid = [float(x) for x in X_grid]
    if len(X_grid) < 4 or any(b <= a for a, b in zip(X_grid, X_grid[1:])):
        raise GridTooShort("X grid must be increasing with at least 4 points")
    vals, floors = zip(*(smoothed_sum(f, g, X) for X in X_grid))
    keep = [i for i, (v, fl) in enumerate(zip(vals, floors)) if abs(v) > 10 * fl]
    if not keep:
        if g.is_zero:
            return DecayScanResult(X_grid, list(vals), list(floors), -math.inf, threshold, True, True,
                                   "all values zero")
        raise AllValuesBelowNoiseFloor(f"every |S(X)| is below 10x its floor (max floor {max(floors):.3e})")
    if len(keep) < 2:
        slope = -math.inf
    else:
        lx = np.log([X_grid[i] for i in keep])
        ly = np.log([abs(vals[i]) for i in keep])
        slope = float(np.polyfit(lx, ly, 1)[0])
    note = f"fit on X = {[X_grid[i] for i in keep]}"
    return DecayScanResult(X_grid, list(vals), list(floors), slope, threshold, slope <= threshold, False, note)


def smoothed_sum_geometric(f: HoloNewform, g: TestFunction, X: float, xi_max: float = 8.0,
                           c_max: int = 2000) -> tuple[complex, dict]:
    """S(X) through Petersson's formula (level 1, dimension 1) and Poisson summation in n.

    c_n = P(n, 1) / w_1 with w_1 = P(1, 1), and for each c the n-sum of
    g(n/X) S(n, 1, c) J(4 pi sqrt n / c) is replaced by its Poisson dual
    (1/c) sum_{(m, c) = 1} e(-inv(m)/c) h_c^(m/c). Only c of size about sqrt X
    contribute appreciably; the per-c magnitudes are returned.
    """
    from .traceformula import GeometricSideSpec, geometric_side, petersson_tail_bound

    if f.level != 1:
        raise PreconditionViolated("geometric route implemented at level 1")
    k = f.weight
    gX = _scaled(g, X)
    w1 = geometric_side(GeometricSideSpec(1, 1, k, 1, None, 10_000)).value
    nmax = int(math.floor(gX.B))
    C = 1
    while C < c_max and petersson_tail_bound(nmax, 1, k, 1, C) * gX.mass > 1e-15:
        C += 1
    total = 0j
    per_c = {}
    for c in range(1, C + 1):
        def h(t, c=c):
            return gX(t) * bessel_j(k - 1, 4 * np.pi * np.sqrt(t) / c)
        band = 1.0 / (c * math.sqrt(gX.A))
        Mc = math.ceil(c * (xi_max * 4 / (gX.B - gX.A) + band + 1))
        ms = np.arange(-Mc, Mc + 1)
        ms = ms[np.gcd(ms, c) == 1]
        hh = fourier_transform(h, gX.A, gX.B, ms / c, bandwidth=band)
        coef = np.array([RationalMod1(-inv(int(m) % c, c), c).e() for m in ms])
        part = np.sum(coef * hh) / c
        per_c[c] = abs(part)
        total += part
    diag = float(gX(1.0))
    S = (diag + 2 * math.pi * _ipow(-k) * total) / w1
    return complex(S), per_c


def sarnak_appendix(X: float = 16.0, g: str | TestFunction = "bump:1,2", k: int = 12, tol: float = 1e-6,
                    **_) -> IdentityCheckResult:
    """Spectral route sum_n c_n g(n/X) against the geometric route through Kloosterman sums."""
    from .forms import eigenbasis_level1

    t0 = time.perf_counter()
    g = parse_test_function(g) if isinstance(g, str) else g
    f = eigenbasis_level1(k, max(2000, int(4 * X * g.B))).forms[0]
    spec, _ = smoothed_sum(f, g, X)
    geo, per_c = smoothed_sum_geometric(f, g, X)
    big = max(per_c.values())
    active = [c for c, v in per_c.items() if v > 1e-3 * big]
    note = (f"c with contribution above 1e-3 of the largest: {min(active)}..{max(active)} "
            f"(sqrt X = {math.sqrt(X):.3g}); c summed to {max(per_c)}")
    return IdentityCheckResult("sarnak_appendix", {"X": X, "g": g.spec(), "k": k}, spec, geo, abs(spec - geo),
                               tolerance=tol, exact=False, note=note, wall_time=time.perf_counter() - t0)
