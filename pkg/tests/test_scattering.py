import cmath

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hierarchia.hierarchy import hamiltonian
from hierarchia.scattering import (
    BoundaryNotSettled, PoleAtZeta, SpectralPoint, ZeroDenominator, constant_potential,
    dark_soliton, dark_soliton_zetas, expansion_check, first_quadrant_samples,
    hamiltonian_numeric, integrate_jost, jost_reference, sech_potential, transmission,
    transmission_dark,
)

QM, QP = np.exp(0.3j), np.exp(1.7j)


@given(st.floats(0.05, 20), st.floats(0.05, 20))
def test_spectral_point_relations(re, im):
    p = SpectralPoint.from_lambda(complex(re, im))
    assert p.z.imag >= 0
    assert abs(p.lam ** 2 - p.z ** 2 - 1) <= 1e-10 * max(1, abs(p.lam) ** 2)
    assert abs(p.zeta * (p.lam - p.z) - 1) <= 1e-10 * max(1, abs(p.lam) ** 2)


def test_spectral_point_check_rejects_bad_branch():
    p = SpectralPoint.from_lambda(2 + 1j)
    with pytest.raises(ValueError):
        SpectralPoint(p.lam, p.z + 0.1, p.zeta).check()


def test_samples_respect_imaginary_floor():
    pts = first_quadrant_samples(24)
    assert len(pts) == 24
    assert all(p.z.imag >= 1 and p.lam.real > 0 and p.lam.imag > 0 for p in pts)


def test_dark_soliton_limits():
    assert dark_soliton(1, 1)(0.0)[()] == pytest.approx(1)
    black = dark_soliton(-1, 1)
    x = np.linspace(-5, 5, 11)
    assert np.allclose(black(x), np.tanh(x), atol=1e-14)
    pot = dark_soliton(QM, QP)
    assert abs(pot(-40.0) - QM) < 1e-12 and abs(pot(40.0) - QP) < 1e-12
    zp, zm = dark_soliton_zetas(QM, QP)
    assert abs(zp ** 2 - QP / QM) < 1e-14 and zm == zp.conjugate() and zp.imag >= 0


def test_potential_validation():
    with pytest.raises(ValueError):
        dark_soliton(2, 1)


def _zs_residual(psi_fn, x, p, q, which, h=1e-3):
    """|Psi' - (X + i gamma z) Psi| with a five-point derivative, X = [[-i lam, q], [qbar, i lam]]."""
    gamma = 1 if which == "-1" else -1
    d = (-psi_fn(x + 2 * h) + 8 * psi_fn(x + h) - 8 * psi_fn(x - h) + psi_fn(x - 2 * h)) / (12 * h)
    psi = psi_fn(x)
    qx = q(x)
    rhs = np.array([
        (-1j * p.lam + 1j * gamma * p.z) * psi[0] + qx * psi[1],
        np.conj(qx) * psi[0] + (1j * p.lam + 1j * gamma * p.z) * psi[1],
    ])
    return np.max(np.abs(d - rhs))


@pytest.mark.parametrize("which", ["-1", "+2"])
def test_reference_jost_solves_the_system(which):
    pot = dark_soliton(QM, QP)
    p = SpectralPoint.from_lambda(1.2 + 2.0j)
    x = np.linspace(-6, 6, 49)
    res = _zs_residual(lambda s: jost_reference(s, p, which, QM, QP), x, p, pot, which)
    assert res < 1e-9


def test_reference_jost_boundary_values():
    p = SpectralPoint.from_lambda(0.7 + 1.5j)
    left = jost_reference(np.array([-40.0]), p, "-1", QM, QP)[:, 0]
    assert np.allclose(left, [QM, 1j * (p.lam - p.z)], atol=1e-12)
    right = jost_reference(np.array([40.0]), p, "+2", QM, QP)[:, 0]
    assert np.allclose(right, [1j * (p.z - p.lam), np.conj(QP)], atol=1e-12)


def test_reference_pole():
    zp, _ = dark_soliton_zetas(QM, QP)
    lam = (zp + 1 / zp) / 2
    p = SpectralPoint(lam, (zp - 1 / zp) / 2, zp)
    with pytest.raises(PoleAtZeta):
        jost_reference(0.0, p, "-1", QM, QP)


@pytest.mark.parametrize("which", ["-1", "+2"])
def test_integrated_jost_matches_closed_form(which):
    pot = dark_soliton(QM, QP)
    p = SpectralPoint.from_lambda(1.0 + 1.8j)
    grid = np.linspace(-5, 5, 21)
    st_ = integrate_jost(pot, p, which, grid=grid)
    ref = jost_reference(grid, p, which, QM, QP)
    assert np.max(np.abs(st_.psi - ref)) < 1e-8
    assert st_.residual < 10


def test_constant_background_jost_is_boundary_column():
    pot = constant_potential(QP)
    p = SpectralPoint.from_lambda(0.5 + 1.5j)
    st_ = integrate_jost(pot, p, "-1", grid=np.linspace(-5, 5, 11))
    assert np.allclose(st_.psi, np.array([QP, 1j * (p.lam - p.z)])[:, None], atol=1e-10)


def test_zero_boundary_jost_residual():
    pot = sech_potential(1.0, 0.5)
    st_ = integrate_jost(pot, SpectralPoint.from_lambda(0.8 + 1.2j, zbc=True), "-1")
    assert np.all(np.isfinite(st_.psi))
    assert st_.residual < 10


def test_transmission_of_dark_soliton():
    pot = dark_soliton(QM, QP)
    for p in first_quadrant_samples(4):
        a, spread = transmission(pot, p)
        ref = transmission_dark(QM, QP, p)
        assert abs(a - ref) < 1e-8 * abs(ref)
        assert spread < 1e-8


def test_constant_background_transmission_is_one():
    pot = constant_potential(1.0)
    a, _ = transmission(pot, SpectralPoint.from_lambda(0.3 + 2j))
    assert abs(a - 1) < 1e-10


def test_born_scaling():
    p = SpectralPoint.from_lambda(0.4 + 1.0j, zbc=True)
    d1 = abs(transmission(sech_potential(1e-3), p)[0] - 1)
    d2 = abs(transmission(sech_potential(2e-3), p)[0] - 1)
    assert d2 / d1 == pytest.approx(4, rel=1e-3)


def test_errors():
    with pytest.raises(ZeroDenominator):
        transmission(constant_potential(1.0), SpectralPoint(1, 0, 1))
    with pytest.raises(BoundaryNotSettled):
        integrate_jost(sech_potential(box=5), SpectralPoint.from_lambda(1j, zbc=True), "-1")
    with pytest.raises(ValueError):
        integrate_jost(sech_potential(), SpectralPoint.from_lambda(1j, zbc=True), "+1")


def test_hamiltonian_quadrature():
    assert hamiltonian_numeric(hamiltonian("nls", 0), sech_potential()) == pytest.approx(2, abs=1e-10)
    # real even potential: odd Hamiltonians vanish
    assert abs(hamiltonian_numeric(hamiltonian("nls", 1), sech_potential())) < 1e-12
    tanh = dark_soliton(-1, 1)
    assert hamiltonian_numeric(hamiltonian("gp", 2), tanh) == pytest.approx(8 / 3, abs=1e-10)


def test_hamiltonians_are_real_numerically():
    pot = sech_potential(1.0, 0.5)
    for n in range(5):
        assert abs(hamiltonian_numeric(hamiltonian("nls", n), pot).imag) < 1e-10


def test_leading_order_decay():
    rep = expansion_check(sech_potential(1.0, 0.5), -1)
    assert rep.exponent == pytest.approx(-1, abs=0.3)


def test_dark_soliton_expansion_steepens():
    rep = expansion_check(dark_soliton(QM, QP), 2)
    assert rep.exponent < -3.7
