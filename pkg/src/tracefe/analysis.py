"""Test functions, quadrature, Mellin and Bessel transforms, numeric Poisson summation."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import quadrature
from .expsums import IdentityCheckResult
from .quadrature import NonconvergentAfterMaxPanels, integrate
from .special import bessel_j

__all__ = [
    "BoundCertificateFailed", "DecayCertificateFailed", "TruncationInsufficient", "NonconvergentAfterMaxPanels",
    "TestFunction", "make_test_function", "parse_test_function", "integrate", "mellin", "MellinValue",
    "mellin_inverse", "mellin_grid", "bessel_transform", "bessel_transforms", "fourier_transform", "PoissonFunction",
    "poisson_check",
]


class BoundCertificateFailed(ValueError):
    pass


class DecayCertificateFailed(ValueError):
    pass


class TruncationInsufficient(RuntimeError):
    pass


FAMILIES = ("bump", "shifted-bump", "bump-poly", "zero")


@dataclass(frozen=True)
class TestFunction:
    """Smooth bump supported on [A, B].

    With t = (2x - A - B)/(B - A) the profile is exp(c0 - a/(1 - t^2)), where
    c0 = 0 for ``bump`` and c0 = a for ``shifted-bump`` (peak value 1).
    ``bump-poly`` multiplies the plain bump by x^degree.  ``scale`` multiplies
    everything.
    """

    __test__ = False  # keep pytest from collecting this class

    family: str
    A: float
    B: float
    a: float = 1.0
    degree: int = 0
    scale: float = 1.0
    max_order: int = 8
    certificate: float = field(default=float("nan"), compare=False)

    @property
    def support(self) -> tuple[float, float]:
        return self.A, self.B

    @property
    def is_zero(self) -> bool:
        return self.family == "zero" or self.scale == 0

    @property
    def _c0(self) -> float:
        return self.a if self.family == "shifted-bump" else 0.0

    def spec(self) -> str:
        if self.family == "zero":
            return "zero"
        if self.family == "shifted-bump":
            return f"shifted-bump:{self.A:g},{self.B:g},{self.a:g}"
        if self.family == "bump-poly":
            return f"bump-poly:{self.A:g},{self.B:g},{self.degree}"
        return f"bump:{self.A:g},{self.B:g}"

    def _t(self, x):
        return (2 * x - self.A - self.B) / (self.B - self.A)

    def _profile_derivs(self, t: np.ndarray, order: int) -> list[np.ndarray]:
        """[h, h', ..., h^(order)] in t for h = exp(c0 - a/(1 - t^2)), zero outside |t| < 1."""
        inside = np.abs(t) < 1
        ti = t[inside]
        u = 1 - ti * ti
        h0 = np.exp(self._c0 - self.a / u)
        live = h0 > 0
        # phi^(i) = -(a/2) i! [(1-t)^{-i-1} + (-1)^i (1+t)^{-i-1}]
        phis = []
        for i in range(1, order + 1):
            phis.append(-(self.a / 2) * math.factorial(i) * ((1 - ti) ** (-i - 1) + (-1) ** i * (1 + ti) ** (-i - 1)))
        hs = [h0]
        for j in range(1, order + 1):
            acc = np.zeros_like(ti)
            for i in range(j):
                acc = acc + math.comb(j - 1, i) * np.where(live, phis[i] * hs[j - 1 - i], 0.0)
            hs.append(acc)
        out = []
        for h in hs:
            full = np.zeros_like(t)
            full[inside] = h
            out.append(full)
        return out

    def derivatives(self, x, order: int) -> list[np.ndarray]:
        """[g, g', ..., g^(order)] at x."""
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return [np.zeros_like(x) for _ in range(order + 1)]
        s = 2.0 / (self.B - self.A)
        hs = self._profile_derivs(self._t(x), order)
        hs = [h * s**j for j, h in enumerate(hs)]
        if self.family == "bump-poly" and self.degree:
            d = self.degree
            out = []
            for j in range(order + 1):
                acc = np.zeros_like(x)
                for i in range(min(j, d) + 1):
                    acc = acc + math.comb(j, i) * (math.factorial(d) / math.factorial(d - i)) * x ** (d - i) * hs[j - i]
                out.append(acc)
            hs = out
        return [self.scale * h for h in hs]

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        v = self.derivatives(np.atleast_1d(x), 0)[0]
        return float(v[0]) if scalar else v.reshape(np.shape(x))

    def derivative(self, x, j: int):
        return self.derivatives(x, j)[j]

    def bound_constant(self, order: int | None = None, points: int = 10_000) -> float:
        """C_g = max_{j <= order} max_x |x^j g^(j)(x)| / (1 + |log x|) on a log grid."""
        order = self.max_order if order is None else order
        if self.is_zero:
            return 0.0
        x = np.geomspace(self.A, self.B, points)
        ders = self.derivatives(x, order)
        c = max(float(np.max(np.abs(x**j * d))) for j, d in enumerate(ders))
        return c / float(np.min(1 + np.abs(np.log(x))))

    @cached_property
    def mass(self) -> float:
        return integrate(self, self.A, self.B, tol=1e-15, panels=32)[0] if not self.is_zero else 0.0


def make_test_function(family: str, A: float = 1.0, B: float = 2.0, a: float = 1.0, degree: int = 0,
                       scale: float = 1.0, max_order: int = 8) -> TestFunction:
    if family not in FAMILIES:
        raise BoundCertificateFailed(f"unknown family {family!r}")
    if family == "zero":
        return TestFunction("zero", A, B, scale=0.0, certificate=0.0)
    if not (0 < A < B) or not math.isfinite(B):
        raise BoundCertificateFailed(f"support [{A}, {B}] must satisfy 0 < A < B < inf")
    if a <= 0:
        raise BoundCertificateFailed("sharpness must be positive")
    g = TestFunction(family, float(A), float(B), float(a), int(degree), float(scale), max_order)
    c = g.bound_constant()
    if not math.isfinite(c):
        raise BoundCertificateFailed(f"derivative bound not finite for {g.spec()}")
    object.__setattr__(g, "certificate", c)
    return g


def parse_test_function(text: str) -> TestFunction:
    """Parse ``bump:A,B``, ``shifted-bump:A,B,a``, ``bump-poly:A,B,degree`` or ``zero``."""
    text = text.strip()
    if text == "zero":
        return make_test_function("zero")
    m = re.fullmatch(r"(bump|shifted-bump|bump-poly):([^,]+),([^,]+)(?:,([^,]+))?", text)
    if not m:
        raise BoundCertificateFailed(f"cannot parse test function {text!r}")
    fam, A, B, extra = m.group(1), float(m.group(2)), float(m.group(3)), m.group(4)
    if fam == "bump":
        if extra is not None:
            raise BoundCertificateFailed("bump takes exactly A,B")
        return make_test_function("bump", A, B)
    if extra is None:
        raise BoundCertificateFailed(f"{fam} needs a third parameter")
    if fam == "shifted-bump":
        return make_test_function(fam, A, B, a=float(extra))
    return make_test_function(fam, A, B, degree=int(extra))


def _panels_for(g: TestFunction, oscillations: float) -> int:
    # sharp profiles need more panels; oscillating kernels need ~4 per wavelength
    return int(max(16, 4 * math.sqrt(g.a) + 8, 4 * oscillations))


# -- Mellin -------------------------------------------------------------------

@dataclass(frozen=True)
class MellinValue:
    s: complex
    value: complex
    error: float


def mellin(g: TestFunction, s, tol: float = 1e-14) -> MellinValue:
    """G(s) = int_0^inf g(x) x^{s-1} dx."""
    s = complex(s)
    if g.is_zero:
        return MellinValue(s, 0j, 0.0)
    osc = abs(s.imag) * math.log(g.B / g.A) / (2 * math.pi)
    val, err = integrate(lambda x: g(x) * x ** (s - 1), g.A, g.B, tol=tol, panels=_panels_for(g, osc))
    return MellinValue(s, complex(val), float(err))


def mellin_grid(g: TestFunction, s: np.ndarray, panels: int | None = None) -> np.ndarray:
    """G at many s at once by a fixed composite rule (used for contour integrals)."""
    s = np.asarray(s, dtype=complex)
    osc = float(np.max(np.abs(s.imag))) * math.log(g.B / g.A) / (2 * math.pi)
    panels = panels or _panels_for(g, osc)
    x, w = quadrature.gl_rule(20)
    edges = np.linspace(g.A, g.B, panels + 1)
    half = 0.5 * np.diff(edges)
    nodes = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel() * g(nodes)
    logx = np.log(nodes)
    out = np.empty(len(s), dtype=complex)
    step = max(1, 2_000_000 // len(nodes))
    for i in range(0, len(s), step):
        out[i:i + step] = np.exp(np.outer(s[i:i + step] - 1, logx)) @ weights
    return out


def mellin_inverse(g: TestFunction, x, sigma: float, T: float = 1500.0, n_t: int = 6001) -> np.ndarray:
    """(1/2 pi i) int_(sigma) G(s) x^{-s} ds, truncated at |Im s| <= T."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = np.linspace(0.0, T, n_t)
    G = mellin_grid(g, sigma + 1j * t)
    # g is real, so the t < 0 half is the conjugate; trapezoid is spectrally
    # accurate once G has decayed at T
    wts = np.full(n_t, t[1] - t[0])
    wts[0] *= 0.5
    wts[-1] *= 0.5
    kernel = np.exp(-np.outer(np.log(x), sigma + 1j * t))
    return (kernel @ (G * wts)).real / math.pi


# -- Bessel transforms ------------------------------------------------------

def bessel_transforms(g: TestFunction, order: int, ns, scale: float = 1.0, panels: int | None = None) -> np.ndarray:
    """int g(x) J_order(4 pi sqrt(n x)/scale) dx for every n in ns (fixed composite rule)."""
    ns = np.atleast_1d(np.asarray(ns, dtype=float))
    if g.is_zero:
        return np.zeros(len(ns))
    nmax = float(np.max(ns)) if len(ns) else 0.0
    osc = 2 * (math.sqrt(nmax * g.B) - math.sqrt(nmax * g.A)) / scale
    panels = panels or _panels_for(g, osc)
    x, w = quadrature.gl_rule(20)
    edges = np.linspace(g.A, g.B, panels + 1)
    half = 0.5 * np.diff(edges)
    nodes = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel() * g(nodes)
    out = np.empty(len(ns))
    sq = np.sqrt(nodes)
    step = max(1, 1_000_000 // len(nodes))
    for i in range(0, len(ns), step):
        arg = (4 * math.pi / scale) * np.outer(np.sqrt(ns[i:i + step]), sq)
        out[i:i + step] = bessel_j(order, arg) @ weights
    return out


def bessel_transform(g: TestFunction, order: int, n: float, scale: float = 1.0, tol: float = 1e-13) -> float:
    """int_0^inf g(x) J_order(4 pi sqrt(n x)/scale) dx, adaptively."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    if g.is_zero:
        return 0.0
    osc = 2 * (math.sqrt(n * g.B) - math.sqrt(n * g.A)) / scale
    val, _ = integrate(lambda x: g(x) * bessel_j(order, 4 * math.pi * np.sqrt(n * x) / scale), g.A, g.B,
                       tol=tol, panels=_panels_for(g, osc))
    return float(val)


# -- Fourier transforms and Poisson summation --------------------------------

def fourier_transform(f, lo: float, hi: float, xis, bandwidth: float = 0.0, panels: int | None = None,
                      order: int = 20) -> np.ndarray:
    """F^(xi) = int_lo^hi f(x) e(-x xi) dx at every xi (fixed composite rule).

    ``bandwidth`` is the largest local frequency of f itself (cycles per unit).
    """
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    osc = (hi - lo) * (float(np.max(np.abs(xis))) + bandwidth)
    panels = panels or int(max(32, 3 * osc))
    x, w = quadrature.gl_rule(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    nodes = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel() * f(nodes)
    out = np.empty(len(xis), dtype=complex)
    step = max(1, 4_000_000 // len(nodes))
    for i in range(0, len(xis), step):
        out[i:i + step] = np.exp(-2j * math.pi * np.outer(xis[i:i + step], nodes)) @ weights
    return out


@dataclass
class PoissonFunction:
    """F on the real line, zero outside [lo, hi], with claimed |F(w)| << (1+|w|)^{-j}.

    ``transform`` may supply F^ in closed form; otherwise it is computed by
    quadrature over [lo, hi].
    """

    f: object
    lo: float
    hi: float
    decay_order: int
    bandwidth: float = 0.0
    transform: object = None
    name: str = "F"


def decay_certificate(F: PoissonFunction, points: int = 4000) -> float:
    """Empirical constant C with |F(w)| <= C (1+|w|)^{-j}; raises if the envelope grows."""
    if F.decay_order < 2:
        raise DecayCertificateFailed(f"decay order {F.decay_order} is too slow for absolute convergence")
    w = np.linspace(F.lo, F.hi, points)
    env = np.abs(F.f(w)) * (1 + np.abs(w)) ** F.decay_order
    R = max(abs(F.lo), abs(F.hi))
    mid = env[(np.abs(w) >= 0.25 * R) & (np.abs(w) <= 0.5 * R)]
    outer = env[np.abs(w) > 0.75 * R]
    c_in = float(np.max(env[np.abs(w) <= 0.5 * R], initial=0.0))
    c_mid = float(np.max(mid, initial=0.0))
    c_out = float(np.max(outer, initial=0.0))
    # a genuine (1+|w|)^{-j} envelope cannot keep growing towards the ends
    if c_out > 1.5 * c_mid and c_out > 1e-14:
        raise DecayCertificateFailed(
            f"{F.name}: |F(w)|(1+|w|)^{F.decay_order} grows from {c_mid:.3g} to {c_out:.3g}"
        )
    return max(c_in, c_out)


def poisson_check(F: PoissonFunction, N: int, tol: float = 1e-6) -> IdentityCheckResult:
    """sum_{|n| <= N} F(n) against sum_{|m| <= N} F^(m)."""
    C = decay_certificate(F)
    ints = np.arange(math.ceil(F.lo), math.floor(F.hi) + 1)
    vals = np.asarray(F.f(ints.astype(float)), dtype=complex)
    kept = np.abs(ints) <= N
    lhs = complex(vals[kept].sum())
    # integers of the support beyond N are evaluated and counted as tail
    lhs_tail = float(np.abs(vals[~kept]).sum())
    m = np.arange(-N, N + 1)
    if F.transform is not None:
        Fh = np.asarray(F.transform(m.astype(float)), dtype=complex)
    else:
        Fh = fourier_transform(F.f, F.lo, F.hi, m, F.bandwidth)
    rhs = complex(Fh.sum())
    # tail of the transform side from the decay of its last values
    last = np.abs(Fh[[0, -1]]).max()
    rhs_tail = float(last * (N + 1) / 2) if N > 0 else float("inf")
    res = abs(lhs - rhs)
    floor = lhs_tail + rhs_tail
    if floor > tol:
        raise TruncationInsufficient(f"tail estimate {floor:.3g} exceeds tol {tol:g}; increase N")
    return IdentityCheckResult(
        "poisson", {"F": F.name, "N": N}, lhs, rhs, res, tolerance=tol, exact=False,
        note=f"decay constant {C:.3g}; tail estimates {lhs_tail:.2e} / {rhs_tail:.2e}",
    )


def check_mellin_roundtrip(g: TestFunction, xs=None, sigma: float = 0.5, tol: float = 1e-6) -> IdentityCheckResult:
    """max |M^{-1}[M g](x) - g(x)| over interior points of the support."""
    xs = np.linspace(g.A, g.B, 12)[1:-1] if xs is None else np.asarray(xs, dtype=float)
    back = mellin_inverse(g, xs, sigma)
    res = float(np.max(np.abs(back - g(xs))))
    return IdentityCheckResult("mellin_roundtrip", {"g": g.spec(), "sigma": sigma}, res, 0.0, res, tol, exact=False)
