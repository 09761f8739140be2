from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, strategies as st

import hierarchia.coefficients as cf
from hierarchia.exact import binom, catalan

u = sp.Symbol("u")


def _series_coeff(expr, j):
    c = sp.series(expr, u, 0, j + 1).removeO().coeff(u, j)
    return Fraction(int(sp.numer(c)), int(sp.denom(c)))


def _k_oracle(n, j):
    if n % 2 == 0:
        return _series_coeff((1 + 4 * u) ** sp.Rational(n - 1, 2), j)
    return _series_coeff((-1 - 2 * u) * (1 + 4 * u) ** sp.Rational(n - 2, 2), j)


def test_examples():
    assert cf.coeff("D", 2, 0) == 1
    assert cf.coeff("E", 4, 0) == -1
    assert cf.coeff("K", 3, 0) == -1
    assert cf.coeff("J", 3, 0) == 2
    assert all(cf.coeff("Ft", 6, j) == 0 for j in range(8))
    assert cf.coeff_oracle("D", 2, 0) == 1
    assert cf.coeff_oracle("D", 4, 1) == 4
    assert cf.coeff_oracle("E", 6, 1) == cf.coeff("E", 6, 1)


def test_k_from_two_forms():
    assert cf.k1_value(2, 0) == cf.k2_value(2, 0) == 1
    assert cf.k1_value(3, 0) == cf.k2_value(3, 0) == -1
    # K_{4,1} = 4 * (3/2) = 6
    assert cf.coeff("K", 4, 1) == 6


@pytest.mark.parametrize("n", range(0, 14))
def test_k_and_j_against_sympy_series(n):
    for j in range(6):
        assert cf.coeff("K", n, j) == _k_oracle(n, j)
        expected_j = 0 if n % 2 == 0 else _series_coeff(2 * (1 + 4 * u) ** sp.Rational(n - 2, 2), j)
        assert cf.coeff("J", n, j) == expected_j


@pytest.mark.parametrize("family", ["D", "E"])
def test_closed_form_solves_recurrence(family):
    for n in range(2, 31):
        for j in range(n // 2 + 1):
            assert cf.coeff(family, n, j) == cf.coeff_oracle(family, n, j)


def test_k_identity_sweep():
    assert all(cf.k_identity_check(n, j) for n in range(31) for j in range(16))


def test_catalan_half_binomial():
    for m in range(31):
        assert cf.coeff("C", m, 0) * (m + 1) == Fraction(4) ** m * binom(m - Fraction(1, 2), m)
        assert cf.coeff("C", m, 0) == catalan(m)


def test_j_vanishes_for_even_n():
    assert all(cf.coeff("J", n, j) == 0 for n in range(0, 31, 2) for j in range(16))


def test_convolution_examples():
    assert cf.convolution_lhs("J-odd", 3, 2) == 2
    assert cf.convolution_lhs("K-odd", 3, 3) == 1
    assert cf.convolution_lhs("K-even", 2, 0) == 2


@pytest.mark.parametrize("tag", cf.CONVOLUTIONS)
def test_convolutions(tag):
    for m in range(1, 11):
        for j in cf.convolution_index_range(tag, m):
            assert cf.convolution_identity_check(tag, m, j), (m, j)


@given(st.sampled_from(["C", "D", "E", "Ft", "Gt", "J", "K"]), st.integers(0, 30), st.integers(-5, 20))
def test_out_of_range_is_zero(family, n, j):
    if not cf.in_range(family, n, j):
        assert cf.coeff(family, n, j) == 0


def test_perturbation_is_scoped():
    base = cf.coeff("D", 6, 1)
    with cf.perturbed("D", 6, 1, 3):
        assert cf.coeff("D", 6, 1) == base + 3
        assert cf.coeff("D", 6, 1) != cf.coeff_oracle("D", 6, 1)
    assert cf.coeff("D", 6, 1) == base


def test_unknown_family():
    with pytest.raises(KeyError):
        cf.coeff("Z", 1, 0)
    with pytest.raises(KeyError):
        cf.coeff_oracle("K", 3, 0)


def test_table_shape():
    rows = cf.table("D", range(5), range(3))
    assert len(rows) == 5 and all(len(r) == 3 for r in rows)
    assert rows[2][0] == 1
