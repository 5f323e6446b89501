"""The desk-profile acceptance suite: one entry per criterion, each a list of reports.

Shared by ``tracefe verify all --profile desk`` and ``tests/test_acceptance.py``.
Budgets come from a :class:`tracefe.cli.RunConfig`.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from typing import Callable

from .analysis import check_mellin_roundtrip, parse_test_function
from .arith import Cyclotomic, squarefree_upto
from .characters import gauss_sum_exact, primitive_characters
from .expsums import check_crt_regroup, check_gauss_vanish, check_reciprocity, sweep_orthogonality
from .forms import eigenbasis_level1
from .lfunction import (decay_scan, fe_report, isolation_apply, isolation_build, mellin_route_report,
                        sarnak_appendix, voronoi_check)
from .reports import VerificationReport
from .special import (check_bessel_recurrence, check_gamma_duplication, check_gamma_reflection,
                      gr6615_continuation, verify_gr6615)
from .traceformula import spectral_ratio_check, verify_chain, verify_main_theorem

MAIN_THEOREM_FUNCTIONS = ("bump:1,2", "shifted-bump:0.5,6.5,8")
VORONOI_FUNCTION = "shifted-bump:0.5,6.5,8"
DECAY_FUNCTION = "bump:1,2"
DECAY_GRID = (8, 16, 32, 64)
FE_POINTS = (0.5, 0.7, 0.3, 2 + 1j, -1 + 0.4j)


@dataclass(frozen=True)
class Criterion:
    number: int
    title: str
    run: Callable


def _summary(check_id: str, params: dict, count: int, failures: int, t0: float, note: str = "") -> VerificationReport:
    """Aggregate record of an exact sweep: the residual is the number of failing cases."""
    return VerificationReport(check_id, {**params, "cases": count}, failures, 0, failures, 0.0, 0.0, {}, None,
                              time.perf_counter() - t0, note)


def _exact_suite(cfg) -> list[VerificationReport]:
    out = []
    t0 = time.perf_counter()
    count, fails = sweep_orthogonality(500)
    out.append(_summary("orthogonality", {"c_max": 500}, count, len(fails), t0))

    t0 = time.perf_counter()
    pairs = [(A, B) for A in range(1, 301) for B in range(1, 301) if math.gcd(A, B) == 1]
    bad = sum(not check_reciprocity(A, B).passed for A, B in pairs)
    out.append(_summary("reciprocity", {"max": 300}, len(pairs), bad, t0))

    t0 = time.perf_counter()
    rng = random.Random(cfg.seed)
    count = bad = 0
    for D in (3, 5, 7, 15):
        for chi in primitive_characters(D):
            for m in range(1, 21):
                if math.gcd(m, D) != 1:
                    continue
                for _ in range(3):
                    while True:
                        l, cprime = rng.randrange(1, 60), D * rng.randrange(1, 60)
                        if math.gcd(cprime * l, m) == 1:
                            break
                    count += 1
                    bad += not check_crt_regroup(D, m, l, cprime, chi).passed
    out.append(_summary("crt_regroup", {"D": "3,5,7,15", "m_max": 20, "seed": cfg.seed}, count, bad, t0))

    t0 = time.perf_counter()
    count = bad = 0
    for D in (3, 5, 7, 11, 13, 15):
        for chi in primitive_characters(D):
            for k in (1, 2):
                count += 1
                bad += not check_gauss_vanish(D, k, chi).passed
    out.append(_summary("gauss_vanish", {"D": "3,5,7,11,13,15", "k": "1,2"}, count, bad, t0))
    return out


def _gauss_modulus(cfg) -> list[VerificationReport]:
    t0 = time.perf_counter()
    count = bad = 0
    for D in squarefree_upto(200):
        for chi in primitive_characters(D):
            tau = gauss_sum_exact(chi)
            count += 1
            bad += not (tau * tau.conjugate() - Cyclotomic.integer(D)).is_zero()
    return [_summary("gauss_modulus", {"D_max": 200}, count, bad, t0, "|tau|^2 = D in exact cyclotomic arithmetic")]


GR_GRID = [(a, b, g, nu) for a in (0.5, 1.0, 2.0, 1 + 1j, 0.3 - 2j)
           for nu, b, g in ((0, 1.0, 0.7), (1, 0.8, 1.3), (5, 1.5, 1.1), (11, 2.0, 1.7))]
GR_CONTINUATION = [(1.0, 0), (1.0, 1), (2.0, 3), (2.5, 5), (4.0, 11)]


def _gr6615(cfg) -> list[VerificationReport]:
    out = [VerificationReport.from_identity(verify_gr6615(a, b, g, nu, tol=1e-8)) for a, b, g, nu in GR_GRID]
    for A, nu in GR_CONTINUATION:
        t0 = time.perf_counter()
        r = gr6615_continuation(A, 1.0, 0.7, nu, tol=1e-6)
        out.append(VerificationReport("gr6615.continuation", {"A": A, "beta": 1.0, "gamma": 0.7, "nu": nu},
                                      r.extrapolated, r.closed_form, r.residual, r.tolerance, 0.0, {}, None,
                                      time.perf_counter() - t0, f"windowed direct value {r.direct:.15g}"))
    return out


def _petersson_ratio(cfg) -> list[VerificationReport]:
    space = eigenbasis_level1(12, 100)
    return spectral_ratio_check(space, [(n, 1) for n in (2, 3, 4, 5, 9, 16)], c_max=cfg.cmax, tol=1e-6)


def _chain(cfg) -> list[VerificationReport]:
    out = []
    for D in (1, 5):
        for r in verify_chain(D=D, C=cfg.chain_c, M=cfg.chain_m):
            out.append(VerificationReport.from_identity(r, f"derivation.{r.identity}"))
    return out


def _main_theorem(cfg) -> list[VerificationReport]:
    space = eigenbasis_level1(12, cfg.n_max)
    return [verify_main_theorem(space, parse_test_function(g), l, tol=1e-6)
            for g in MAIN_THEOREM_FUNCTIONS for l in (1, 2)]


def _delta(cfg):
    return eigenbasis_level1(12, cfg.n_terms).forms[0]


def _voronoi(cfg) -> list[VerificationReport]:
    f = _delta(cfg)
    g = parse_test_function(VORONOI_FUNCTION)
    out = [voronoi_check(f, g, a, c, tol=1e-6) for a, c in ((1, 1), (1, 3), (2, 5))]
    out += [mellin_route_report(f, s, tol=1e-6) for s in (2.0, 2.5)]
    return out


def _fe(cfg) -> list[VerificationReport]:
    f = _delta(cfg)
    return [fe_report(f, s, tol=cfg.tol_fe) for s in FE_POINTS]


def _isolation(cfg) -> list[VerificationReport]:
    space = eigenbasis_level1(24, 100)
    out = []
    for target in range(space.dimension):
        t0 = time.perf_counter()
        comb = isolation_build(space, target, (2, 3, 5, 7))
        values = [comb.evaluate(f) for f in space.forms]
        expect = [1.0 if i == target else 0.0 for i in range(space.dimension)]
        res = max(abs(v - e) for v, e in zip(values, expect))
        out.append(VerificationReport("isolation.evaluate", {"k": 24, "target": target}, values[target], 1, res,
                                      1e-8, 0.0, {}, None, time.perf_counter() - t0,
                                      f"values on the eigenbasis {[complex(v) for v in values]}"))
        t0 = time.perf_counter()
        got = isolation_apply(comb, space, [f.c(7) for f in space.forms])
        want = space.forms[target].c(7)
        out.append(VerificationReport("isolation.apply", {"k": 24, "target": target, "n": 7}, got, want,
                                      abs(got - want), 1e-8, 0.0, {}, None, time.perf_counter() - t0))
    return out


def decay_report(scan, g: str) -> VerificationReport:
    return VerificationReport("decay_scan", {"g": g, "X": ",".join(f"{x:g}" for x in scan.X)}, scan.slope,
                              scan.threshold, max(0.0, scan.slope - scan.threshold), 1e-12, 0.0, {}, scan.passed,
                              0.0, f"|S(X)| = {[f'{abs(v):.4g}' for v in scan.values]}; {scan.note}")


def _decay(cfg) -> list[VerificationReport]:
    f = eigenbasis_level1(12, max(2000, 4 * DECAY_GRID[-1])).forms[0]
    t0 = time.perf_counter()
    rep = decay_report(decay_scan(f, parse_test_function(DECAY_FUNCTION), DECAY_GRID), DECAY_FUNCTION)
    rep.wall_time = time.perf_counter() - t0
    return [rep, VerificationReport.from_identity(sarnak_appendix(X=16, g=DECAY_FUNCTION, tol=1e-6))]


def _infrastructure(cfg) -> list[VerificationReport]:
    checks = [check_bessel_recurrence(30), check_gamma_duplication(), check_gamma_reflection(),
              check_mellin_roundtrip(parse_test_function("bump:1,2"))]
    return [VerificationReport.from_identity(r) for r in checks]


CRITERIA: dict[int, Criterion] = {c.number: c for c in [
    Criterion(1, "exact identities: orthogonality, reciprocity, CRT regrouping, Gauss vanishing", _exact_suite),
    Criterion(2, "Gauss-sum modulus for every primitive character of squarefree modulus <= 200", _gauss_modulus),
    Criterion(3, "GR 6.615 on a 20-point grid and along the imaginary axis", _gr6615),
    Criterion(4, "Petersson ratio test at weight 12, level 1", _petersson_ratio),
    Criterion(5, "derivation chain aft -> nea at D = 1 and D = 5", _chain),
    Criterion(6, "main theorem for Delta, l = 1, 2, two test functions", _main_theorem),
    Criterion(7, "Voronoi summation for Delta and the Mellin route", _voronoi),
    Criterion(8, "functional equation of Delta at five points", _fe),
    Criterion(9, "Hecke isolation at weight 24", _isolation),
    Criterion(10, "decay of smoothed sums and the appendix cross-check", _decay),
    Criterion(11, "Bessel recurrence, Gamma identities and Mellin inversion", _infrastructure),
]}


def run_criterion(number: int, cfg) -> list[VerificationReport]:
    return CRITERIA[number].run(cfg)
