from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from hierarchia import identities as ids
from hierarchia.exact import binom, catalan
from hierarchia.genfun import (
    BiSeries, LaurentFloorExceeded, NonUnitConstant, binomial_power, series_inv, series_sqrt,
)

S, J = 5, 5
coefs = st.builds(Fraction, st.integers(-5, 5), st.integers(1, 6))


@st.composite
def unit_series(draw):
    vals = draw(st.lists(coefs, min_size=(S + 1) * (J + 1), max_size=(S + 1) * (J + 1)))
    f = BiSeries.from_function(lambda s, j: vals[s * (J + 1) + j], S, J)
    f[0, 0] = 1
    return f


@given(unit_series())
def test_sqrt_squares_back(f):
    g = series_sqrt(f)
    assert g * g == f


@given(unit_series())
def test_inverse_multiplies_to_one(f):
    assert series_inv(f) * f == BiSeries.constant(S, J)


def test_sqrt_of_one_plus_four_y():
    g = series_sqrt(BiSeries.constant(8, 8) + BiSeries.Y(8, 8) * 4)
    assert [g[0, j] for j in range(4)] == [1, 2, -2, 4]
    for j in range(9):
        assert g[0, j] == binom(Fraction(1, 2), j) * 4 ** j
    assert series_sqrt(BiSeries.constant(3, 3)) == BiSeries.constant(3, 3)


def test_catalan_generating_function():
    N = 32
    X = BiSeries.X(N + 1, 0)
    root = series_sqrt(BiSeries.constant(N + 1, 0) - X * 4)
    numer = BiSeries.constant(N + 1, 0) - root   # 2X * sum C_n X^n
    for n in range(N + 1):
        assert numer[n + 1, 0] / 2 == catalan(n)


def test_binomial_power_matches_sqrt():
    f = BiSeries.constant(6, 6) + BiSeries.Y(6, 6) * 4 + BiSeries.X(6, 6)
    assert binomial_power(f, Fraction(1, 2)) == series_sqrt(f)


def test_errors():
    with pytest.raises(NonUnitConstant):
        series_sqrt(BiSeries.constant(2, 2, 4))
    with pytest.raises(NonUnitConstant):
        series_inv(BiSeries.Y(2, 2))
    with pytest.raises(LaurentFloorExceeded):
        BiSeries.from_function(lambda s, j: 1, 2, 2, jmin=-3)
    with pytest.raises(LaurentFloorExceeded):
        series_sqrt(BiSeries.constant(2, 2) + BiSeries.monomial(2, 2, 0, -1))


def test_registry_size():
    assert len(ids.REGISTRY) >= 14


@pytest.mark.parametrize("key", list(ids.REGISTRY))
def test_identity_matches_at_moderate_order(key):
    report = ids.verify_identity(key, 12, 12)
    assert report.ok, report.to_json()


def test_perturbed_rhs_reports_index():
    with ids.perturbed_rhs("D-lemma-pair", 3, 2):
        report = ids.verify_identity("D-lemma-pair", 8, 8)
    assert not report.ok
    assert (report.mismatch["s"], report.mismatch["j"]) == (3, 2)
    with pytest.raises(ids.Mismatch):
        with ids.perturbed_rhs("catalan-gf", 1, 0):
            ids.verify_identity("catalan-gf", 4, 4, raise_on_mismatch=True)
    assert ids.verify_identity("D-lemma-pair", 8, 8).ok


@pytest.mark.parametrize("key", list(ids.FINITE_REGISTRY))
def test_finite_identities(key):
    assert ids.binomial_sum_check(key, 16)


def test_finite_identity_ranges():
    # DE-sum over n <= 20 and j <= 8, DD-sum over m <= 10
    assert ids.binomial_sum_check("DE-sum", 20, 8)
    assert ids.binomial_sum_check("DD-sum", 10)
    assert ids._de_sum(6, 0) == (0, 0)


def test_de_sum_stops_below_half():
    # at j = n/2 for even n the right side E_{n, n/2 - 2} is nonzero while the sum is empty
    lhs, rhs = ids._de_sum(8, 4)
    assert lhs == 0 and rhs != 0


def test_unknown_identity():
    with pytest.raises(KeyError):
        ids.verify_identity("nope")
    with pytest.raises(KeyError):
        ids.finite_first_failure("nope", 3)
