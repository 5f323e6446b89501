import math

import numpy as np
import pytest
from scipy import special as sp

from tracefe.analysis import parse_test_function
from tracefe.expsums import PreconditionViolated
from tracefe.forms import eigenbasis_level1, level5_form
from tracefe.lfunction import (GridTooShort, NotSeparating, decay_scan, fe_report, fe_residual, isolation_apply,
                               isolation_build, lambda_direct, lambda_split, l_series, mellin_route_report,
                               sarnak_appendix, voronoi_check, voronoi_kernel_mellin)
from tracefe.special import GammaFactor, complex_gamma


@pytest.fixture(scope="module")
def delta():
    return eigenbasis_level1(12, 10_000).forms[0]


@pytest.fixture(scope="module")
def delta_long():
    return eigenbasis_level1(12, 100_000).forms[0]


@pytest.fixture(scope="module")
def space24():
    return eigenbasis_level1(24, 2000)


def test_l_series(delta, delta_long):
    short, long_ = l_series(delta, 3), l_series(delta_long, 3)
    assert abs(short.value - long_.value) < 1e-10
    assert short.tail_bound >= abs(short.value - long_.value)
    assert abs(l_series(delta, 40).value - 1) < 1e-9
    assert abs(l_series(delta, 2).value) <= sp.zeta(2) ** 2
    with pytest.raises(PreconditionViolated):
        l_series(delta, 1.2)


def test_lambda_split_matches_direct(delta):
    split = lambda_split(delta, 3)
    assert split.route == "split-integral"
    assert abs(split.value - GammaFactor(12)(3) * l_series(delta, 3).value) < 1e-8
    assert abs(split.value - lambda_direct(delta, 3).value) < 1e-8


def test_lambda_split_symmetry_point(delta):
    assert abs(lambda_split(delta, 0.5).value.imag) < 1e-8


def test_lambda_split_left_of_strip(delta):
    v = lambda_split(delta, -1 + 0.3j)
    assert v.route == "split-integral" and np.isfinite(v.value)
    coarse = lambda_split(delta, -1 + 0.3j, panels=32)
    assert abs(v.value - coarse.value) < 1e-8 * max(1, abs(v.value))


@pytest.mark.parametrize("s", [0.7, 0.5, 0.3, 0.2 + 3j])
def test_fe_residual_strip(delta, s):
    res, err, A, B = fe_residual(delta, s)
    assert res < 1e-8


def test_fe_residual_symmetry_point(delta):
    assert fe_residual(delta, 0.5)[0] < 1e-14


def test_fe_report_direct_route(delta_long):
    r = fe_report(delta_long, 2 + 1j)
    assert r.passed and r.residual < 1e-8
    assert "direct" in r.params["routes"]


def test_fe_level1_only_split():
    with pytest.raises(PreconditionViolated):
        lambda_split(level5_form("plus"), 0.5)


def test_voronoi_kernel_mellin_relation():
    # 2 pi H(s) gamma(1 - s) = gamma(s)
    g = GammaFactor(12)
    for s in (2.0, 2.5, 0.3 + 1j):
        assert abs(2 * math.pi * voronoi_kernel_mellin(12, s) * g(1 - s) / g(s) - 1) < 1e-12
    s = 0.4 + 2j
    H = (2 * math.pi) ** (-2 * s) * complex_gamma(s + 5.5) / complex_gamma(6.5 - s)
    assert abs(voronoi_kernel_mellin(12, s) - H) < 1e-14


@pytest.mark.parametrize("s", [2.0, 2.5])
def test_mellin_route(delta_long, s):
    r = mellin_route_report(delta_long, s)
    assert r.passed and r.residual < 1e-6


@pytest.mark.parametrize("a, c", [(1, 1), (1, 3), (2, 5)])
def test_voronoi_shifted_bump(delta, a, c):
    r = voronoi_check(delta, parse_test_function("shifted-bump:0.5,6.5,8"), a, c)
    assert r.passed and r.residual < 1e-10


def test_voronoi_plain_bump_c1(delta):
    assert voronoi_check(delta, parse_test_function("bump:1,2"), 1, 1).passed


@pytest.mark.slow
def test_voronoi_plain_bump_c3(delta_long):
    # the dual side needs about c^2 * 10^4 coefficients for this profile
    assert voronoi_check(delta_long, parse_test_function("bump:1,2"), 1, 3).passed


def test_voronoi_zero(delta):
    r = voronoi_check(delta, parse_test_function("zero"), 1, 3)
    assert r.lhs == 0 and r.rhs == 0 and r.passed


def test_voronoi_level5():
    f = level5_form("minus")
    for a, c in ((1, 1), (1, 2), (2, 3)):
        assert voronoi_check(f, parse_test_function("shifted-bump:0.5,6.5,8"), a, c).passed


def test_isolation_dimension_one():
    space = eigenbasis_level1(12, 50)
    comb = isolation_build(space, 0, (2,))
    assert comb.beta == {1: 1}
    assert comb.evaluate(space.forms[0]) == 1


def test_isolation_weight24(space24):
    for target in (0, 1):
        comb = isolation_build(space24, target, (2,))
        vals = [comb.evaluate(f) for f in space24.forms]
        assert abs(vals[target] - 1) < 1e-8 and abs(vals[1 - target]) < 1e-8
        assert abs(isolation_apply(comb, space24, [1, 1]) - 1) < 1e-12
        got = isolation_apply(comb, space24, [f.c(7) for f in space24.forms])
        assert abs(got - space24.forms[target].c(7)) < 1e-8


def test_isolation_of_fe_residuals(space24):
    comb = isolation_build(space24, 0, (2, 3))
    values = [fe_residual(f, 0.7)[0] for f in space24.forms]
    assert abs(isolation_apply(comb, space24, values)) < 1e-8


def test_isolation_not_separating(space24):
    with pytest.raises(NotSeparating):
        isolation_build(space24, 0, ())


def test_decay_scan_errors_and_vacuous(delta):
    with pytest.raises(GridTooShort):
        decay_scan(delta, parse_test_function("bump:1,2"), [8])
    z = decay_scan(delta, parse_test_function("zero"), [8, 16, 32, 64])
    assert z.passed and z.vacuous


def test_decay_scan_smooth_profile(delta):
    scan = decay_scan(delta, parse_test_function("shifted-bump:0.5,6.5,8"), [8, 16, 32, 64])
    assert scan.passed and scan.slope < -3
    lines = scan.plot_data().splitlines()
    assert len(lines) == 4 and all(len(ln.split()) == 2 for ln in lines)


def test_decay_scan_plain_bump_is_slow(delta):
    # the plain bump's |S(X)| is still of size 1e-2 at X = 64 (criterion 10 records this failure)
    scan = decay_scan(delta, parse_test_function("bump:1,2"), [8, 16, 32, 64])
    assert not scan.passed
    assert scan.slope > -1


def test_sarnak_appendix():
    r = sarnak_appendix(X=16, g="bump:1,2")
    assert r.passed and r.residual < 1e-6
