"""Vectorized Gauss-Legendre panel quadrature shared by the numeric modules."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


class NonconvergentAfterMaxPanels(RuntimeError):
    pass


@lru_cache(maxsize=None)
def gl_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panel_sums(f, edges: np.ndarray, order: int = 20) -> np.ndarray:
    """Gauss-Legendre estimate on every panel [edges[i], edges[i+1]], one call to f."""
    x, w = gl_rule(order)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * x[None, :]
    vals = np.asarray(f(nodes.ravel())).reshape(nodes.shape)
    return (vals * w[None, :]).sum(axis=1) * half[:, 0]


def fixed(f, a: float, b: float, panels: int, order: int = 20):
    """Composite rule on equal panels; returns the plain sum."""
    return panel_sums(f, np.linspace(a, b, panels + 1), order).sum()


def integrate(f, a: float, b: float, tol: float = 1e-12, panels: int = 8, order: int = 20,
              max_panels: int = 1 << 17, rel: bool = False):
    """Adaptive panel bisection on [a, b] (b may be inf); returns (value, error estimate).

    Each panel's rule is compared with the sum over its two halves and split
    while the difference exceeds the panel's share of ``tol`` (an absolute
    budget, or relative to a first coarse estimate when ``rel``).
    """
    if a == b:
        return 0.0, 0.0
    if np.isinf(b):
        # x = a + t/(1-t) maps [0, 1) onto [a, inf); Gauss nodes never reach t = 1
        def g(t, f=f, a=a):
            u = 1.0 - t
            return np.asarray(f(a + t / u)) / (u * u)
        return integrate(g, 0.0, 1.0, tol, panels, order, max_panels, rel)
    edges = np.linspace(a, b, panels + 1)
    if rel:
        tol = tol * max(abs(panel_sums(f, edges, order).sum()), 1e-300)
    pieces = np.stack([edges[:-1], edges[1:]], axis=1)
    shares = np.full(panels, tol / panels)
    return _integrate_pieces(f, pieces, order, shares, max_panels)


def _integrate_pieces(f, pieces: np.ndarray, order: int, shares: np.ndarray, max_panels: int):
    """Adaptive refinement over an explicit list of disjoint [lo, hi] pieces."""
    x, w = gl_rule(order)

    def rule(l, h):
        half = 0.5 * (h - l)
        return 0.5 * (l + h)[:, None] + half[:, None] * x[None, :], half

    total, total_err = 0.0, 0.0
    budget = float(shares.sum())
    while len(pieces):
        lo, hi = pieces[:, 0], pieces[:, 1]
        mid = 0.5 * (lo + hi)
        n0, h0 = rule(lo, hi)
        n1, h1 = rule(lo, mid)
        n2, h2 = rule(mid, hi)
        nodes = np.concatenate([n0.ravel(), n1.ravel(), n2.ravel()])
        vals = np.asarray(f(nodes)).reshape(3, len(lo), order)
        coarse = (vals[0] * w).sum(axis=1) * h0
        fine = (vals[1] * w).sum(axis=1) * h1 + (vals[2] * w).sum(axis=1) * h2
        err = np.abs(fine - coarse)
        ok = err <= shares
        if total_err + err.sum() <= budget:
            # the global budget is met even though some panels missed their share
            ok[:] = True
        total = total + fine[ok].sum()
        total_err += err[ok].sum()
        if ok.all():
            break
        bad = ~ok
        if 2 * bad.sum() > max_panels:
            raise NonconvergentAfterMaxPanels(f"{bad.sum()} unresolved panels (estimated error {err[bad].sum():.3g})")
        lo_b, mid_b, hi_b = lo[bad], mid[bad], hi[bad]
        pieces = np.concatenate([np.stack([lo_b, mid_b], 1), np.stack([mid_b, hi_b], 1)])
        shares = np.concatenate([shares[bad] / 2, shares[bad] / 2])
    return total, total_err
