import math

import numpy as np
import pytest

from tracefe.characters import DirichletCharacter
from tracefe.forms import (DimensionZero, HoloNewform, InvariantViolation, ModulusMismatch, ParseError, delta_qexp,
                           dim_cusp_level1, dual_form, eigenbasis_level1, eisenstein_qexp, eta_factor,
                           export_coefficients, kappa, level5_form, level5_space, load_coefficients, normalize_a)
from tracefe.special import complex_gamma

TAU = {1: 1, 2: -24, 3: 252, 4: -1472, 5: 4830, 6: -6048, 7: -16744, 8: 84480, 9: -113643, 10: -115920}


def test_delta_qexp():
    d = delta_qexp(20)
    assert d[0] == 0
    assert all(d[n] == t for n, t in TAU.items())


def test_delta_by_direct_product():
    N = 12
    poly = np.zeros(N, dtype=object)
    poly[1] = 1
    for n in range(1, N):
        for _ in range(24):
            poly[n:] = poly[n:] - poly[:N - n].copy()
    assert list(poly) == delta_qexp(N).coefficients()[:N]


def test_eisenstein():
    e4, e6 = eisenstein_qexp(4, 10), eisenstein_qexp(6, 10)
    assert e4[0] == 1 and e6[0] == 1
    assert e4[1] == 240
    assert e6[2] == -504 * 33
    # E4^3 - E6^2 = 1728 Delta
    assert (e4 ** 3 - e6 * e6).coefficients() == [1728 * c for c in delta_qexp(10).coefficients()]


def test_dimensions():
    assert [dim_cusp_level1(k) for k in (12, 14, 16, 24, 26, 36)] == [1, 0, 1, 2, 1, 3]
    with pytest.raises(DimensionZero):
        eigenbasis_level1(10, 50)


def test_eigenbasis_weight12_is_delta():
    space = eigenbasis_level1(12, 50)
    assert space.dimension == 1
    f = space.forms[0]
    assert f.raw[2] == -24
    assert abs(f.c(2) - (-24) / 2**5.5) < 1e-15


def test_eigenbasis_weight24():
    space = eigenbasis_level1(24, 50)
    assert space.dimension == 2
    lam = sorted(f.c(2).real * 2**11.5 for f in space.forms)
    expect = sorted([540 - 12 * math.sqrt(144169), 540 + 12 * math.sqrt(144169)])
    assert np.allclose(lam, expect, rtol=1e-12)
    for x in lam:
        assert abs(x * x - 1080 * x - 20468736) < 1e-6 * abs(x) ** 2
    # multiplicativity and the Hecke relation at p = 2
    for f in space.forms:
        assert abs(f.c(6) - f.c(2) * f.c(3)) < 1e-12
        assert abs(f.c(2) ** 2 - f.c(4) - 1) < 1e-12


def test_round_trip(tmp_path):
    f = eigenbasis_level1(12, 200).forms[0]
    path = export_coefficients(f, tmp_path / "delta.txt")
    g = load_coefficients(path)
    assert g.raw == f.raw and g.raw[5] == 4830
    assert np.max(np.abs(f.coeffs - g.coeffs)) < 1e-15


def test_corrupted_hecke_relation(tmp_path):
    f = eigenbasis_level1(12, 50).forms[0]
    path = export_coefficients(f, tmp_path / "delta.txt")
    path.write_text(path.read_text().replace("\n4 -1472\n", "\n4 -1471\n"))
    with pytest.raises(InvariantViolation, match="c_2"):
        load_coefficients(path)


def test_bad_level_coefficient(tmp_path):
    f = level5_form("plus")
    path = export_coefficients(f, tmp_path / "l5.txt", 30)
    lines = path.read_text().splitlines()
    lines = [("5 1.0" if ln.startswith("5 ") else ln) for ln in lines]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(InvariantViolation):
        load_coefficients(path)


def test_parse_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("# weight 12\n# normalization hecke\n1 1\n")
    with pytest.raises(ParseError):
        load_coefficients(p)
    p.write_text("# weight 12\n# level 1\n# normalization hecke\n1 1\n3 252\n")
    with pytest.raises(ParseError):
        load_coefficients(p)


def test_normalize_a():
    f = eigenbasis_level1(12, 20).forms[0]
    k12 = math.sqrt(math.pi**-12 * complex_gamma(12).real) / 2**11
    assert normalize_a(f, 1) == pytest.approx(k12, rel=1e-13)
    assert kappa(12) == pytest.approx(k12, rel=1e-13)
    assert normalize_a(f, 2) == pytest.approx(-24 * k12 / 2**5.5, rel=1e-13)
    for n in (2, 3, 7):
        assert abs(normalize_a(f, n) / normalize_a(f, 1) - f.c(n)) < 1e-14


def test_dual_form():
    delta = eigenbasis_level1(12, 50).forms[0]
    assert np.array_equal(dual_form(delta).coeffs, delta.coeffs)
    f = level5_form("plus")
    fd = dual_form(f)
    assert abs(fd.c(2) - np.conj(f.chi(2)) * f.c(2)) < 1e-14
    assert abs(fd.c(5) - np.conj(f.c(5))) < 1e-14
    assert abs(fd.c(10) - fd.c(2) * fd.c(5)) < 1e-14


def test_eta_factor():
    assert eta_factor(eigenbasis_level1(12, 10).forms[0]) == 1
    for f in level5_space().forms:
        assert abs(abs(eta_factor(f)) - 1) < 1e-10
    f = level5_form("plus")
    bad = HoloNewform(6, 5, DirichletCharacter.trivial(5), f.coeffs.copy())
    with pytest.raises(ModulusMismatch):
        eta_factor(bad)


def test_level5_space():
    space = level5_space()
    assert space.dimension == 2 and space.weight == 6 and space.level == 5
    for f in space.forms:
        assert f.chi.spec() == DirichletCharacter.quadratic(5).spec()
        assert abs(abs(f.c(5)) - 1) < 1e-12
        assert abs(f.c(3) * f.c(7) - f.c(21)) < 1e-12
