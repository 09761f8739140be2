import threading
from fractions import Fraction

import pytest
import sympy as sp

from hierarchia.diffpoly import Q, QBAR, U, DiffPoly, equivalent_mod_dx, gen, var_derivative
from hierarchia.exact import I
from hierarchia.hierarchy import (
    Hierarchy, flow_rhs, gp_flow_from_nls, gp_from_nls_matrix, gp_from_nls_row, hamiltonian,
    invert_lower_triangular, nls_from_gp_matrix, perturbed_sigma, poisson_bracket, riccati_mismatches,
    sigma_gp, sigma_kdv, sigma_nls, structural_form, structural_main,
)
from hierarchia.verify import reference_hamiltonian

q, qb = gen(Q), gen(QBAR)
x = sp.Symbol("x")
fq, fqb = sp.Function("q")(x), sp.Function("qb")(x)


def _sympy_sigmas(nmax):
    """Independent oracle: the Riccati-type recurrence run in sympy with rational cancellation."""
    s = [sp.Integer(0), -fq * fqb]
    while len(s) <= nmax:
        m = len(s) - 1
        conv = sum(s[k] * s[m - k] for k in range(m + 1))
        nxt = sp.diff(s[m], x) - sp.diff(fq, x) / fq * s[m] + conv
        s.append(sp.expand(sp.cancel(sp.expand(nxt))))
    return s


def _to_sympy(P: DiffPoly):
    out = 0
    for key, c in P.items():
        term = sp.Rational(c.re.numerator, c.re.denominator) + sp.I * sp.Rational(c.im.numerator, c.im.denominator)
        for var, order, power in key:
            f = fq if var == Q else fqb
            term *= sp.diff(f, x, order) ** power
        out += term
    return sp.expand(out)


def test_sigma_matches_sympy_oracle():
    oracle = _sympy_sigmas(6)
    for n in range(7):
        assert sp.expand(_to_sympy(sigma_nls(n).poly) - oracle[n]) == 0


def test_sigma_examples():
    assert sigma_nls(1).poly == -q * qb
    assert sigma_nls(2).poly == -q * gen(QBAR, 1)
    assert sigma_nls(3).poly == -q * gen(QBAR, 2) + q ** 2 * qb ** 2
    assert sigma_kdv(3).poly == gen(U) ** 2 + gen(U, 2)


def test_bad_index():
    with pytest.raises(ValueError):
        sigma_nls(-1)
    with pytest.raises(ValueError):
        Hierarchy.parse("mkdv")


@pytest.mark.parametrize("n", range(5))
@pytest.mark.parametrize("h", ["nls", "gp"])
def test_hamiltonians_match_hand_written(h, n):
    assert equivalent_mod_dx(hamiltonian(h, n).density, reference_hamiltonian(h, n))


def test_commonly_quoted_gp4_gradient_sign_is_not_equivalent():
    quoted = reference_hamiltonian("gp", 4) + 12 * gen(Q, 1) * gen(QBAR, 1)
    assert not equivalent_mod_dx(hamiltonian("gp", 4).density, quoted)
    # the computed density is the conserved combination H4 - 6 H2 + 6 H0 - 2
    combo = (hamiltonian("nls", 4).density - 6 * hamiltonian("nls", 2).density
             + 6 * hamiltonian("nls", 0).density - 2)
    assert equivalent_mod_dx(hamiltonian("gp", 4).density, combo)


def test_flow_examples():
    qxx = gen(Q, 2)
    assert flow_rhs("nls", 0) == q
    assert flow_rhs("nls", 2) == 2 * q ** 2 * qb - qxx
    assert flow_rhs("gp", 2) == -2 * q + 2 * q ** 2 * qb - qxx
    assert flow_rhs("kdv", 3) == gen(U, 1)
    assert flow_rhs("kdv", 5) == 6 * gen(U) * gen(U, 1) + gen(U, 3)


@pytest.mark.parametrize("n", range(9))
def test_hamiltonians_are_real(n):
    assert hamiltonian("nls", n).is_real()
    assert hamiltonian("gp", n).is_real()


def test_riccati_series_consistency():
    assert riccati_mismatches(12) == []


def test_gp_transform_rows():
    assert gp_from_nls_row(4) == ([0, 0, 4, 0, 1], 0)
    row3, c3 = gp_from_nls_row(3)
    assert row3 == [0, 2, 0, 1] and c3 == 1


def test_inverse_renormalization_constants():
    # back-transform constants follow signed Catalan numbers
    _, back = nls_from_gp_matrix(10)
    assert [back[2 * m + 1] for m in range(5)] == [-1, 1, -2, 5, -14]
    M, _ = gp_from_nls_matrix(8)
    Minv = invert_lower_triangular(M)
    for i in range(9):
        for j in range(9):
            assert sum(M[i][k] * Minv[k][j] for k in range(9)) == (1 if i == j else 0)


@pytest.mark.parametrize("n", range(11))
def test_gp_flows_are_binomial_combinations_of_nls_flows(n):
    assert gp_flow_from_nls(n) == flow_rhs("gp", n)


def test_poisson_commutation_small():
    for n in range(4):
        for m in range(n + 1, 5):
            P = poisson_bracket(hamiltonian("nls", n), hamiltonian("nls", m))
            assert var_derivative(P, Q).is_zero() and var_derivative(P, QBAR).is_zero()


def test_structural_examples():
    main, cert = structural_form("nls", 3)
    assert main + cert.value == flow_rhs("nls", 3)
    assert flow_rhs("nls", 3) == 6 * I * q * qb * gen(Q, 1) - I * gen(Q, 3)
    main, cert = structural_form("gp", 2)
    assert main + cert.value == flow_rhs("gp", 2)
    with pytest.raises(ValueError):
        structural_main("kdv", 3)
    with pytest.raises(ValueError):
        structural_main("gp", 0)


def test_perturbed_sigma_restores_cache():
    before = [sigma_nls(n).poly for n in range(8)]
    gp_before = sigma_gp(5).poly
    with perturbed_sigma(4, q ** 4 * qb ** 4, warm=8):
        assert sigma_nls(4).poly != before[4]
        sigma_nls(10)
    assert [sigma_nls(n).poly for n in range(8)] == before
    assert sigma_gp(5).poly == gp_before


def test_concurrent_density_requests_agree():
    results = {}

    def work(i):
        results[i] = sigma_nls(9 + i % 3).poly

    threads = [threading.Thread(target=work, args=(i,)) for i in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for i in range(6):
        assert results[i] == sigma_nls(9 + i % 3).poly
