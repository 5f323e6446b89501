"""One pass/fail test per acceptance criterion, at the desk-profile budgets."""

import time

import pytest

from tracefe.acceptance import CRITERIA, run_criterion
from tracefe.cli import load_config

CFG = load_config(env={})
RUNTIME_LIMIT = {1: 60, 2: 60, 3: 60, 5: 600, 6: 300, 8: 300}


def _check(number):
    t0 = time.perf_counter()
    reports = run_criterion(number, CFG)
    elapsed = time.perf_counter() - t0
    failed = [r.to_record(True) for r in reports if not r.passed]
    assert reports, "criterion produced no checks"
    assert not failed, "\n".join(failed)
    assert elapsed < RUNTIME_LIMIT.get(number, float("inf")), f"took {elapsed:.1f} s"


def test_criterion_01_exact_identities():
    _check(1)


def test_criterion_02_gauss_sum_modulus():
    _check(2)


def test_criterion_03_gr6615():
    _check(3)


def test_criterion_04_petersson_ratio():
    _check(4)


@pytest.mark.slow
def test_criterion_05_derivation_chain():
    _check(5)


@pytest.mark.slow
def test_criterion_06_main_theorem():
    _check(6)


@pytest.mark.slow
def test_criterion_07_voronoi():
    _check(7)


def test_criterion_08_functional_equation():
    _check(8)


def test_criterion_09_hecke_isolation():
    _check(9)


def test_criterion_10_appendix_decay():
    # Fails: |S(X)| for the plain bump on [1,2] decays with slope about -0.1 over X = 8..64, not <= -3.
    # The appendix cross-check at X = 16 inside this criterion passes.
    _check(10)


def test_criterion_11_numerical_infrastructure():
    _check(11)


def test_every_criterion_has_a_test():
    assert sorted(CRITERIA) == list(range(1, 12))
