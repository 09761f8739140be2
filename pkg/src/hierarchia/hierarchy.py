"""Conserved densities, Hamiltonians and flows of the NLS, GP and KdV hierarchies.

NLS densities come from the Riccati recurrence

    sigma_0 = 0,  sigma_1 = -q qbar,
    sigma_{n+1} = d_x sigma_n - (q_x / q) sigma_n + sum_{k=0}^{n} sigma_k sigma_{n-k},

and GP densities are affine combinations of them. Hamiltonian densities are
``-(-i)^n sigma_{n+1}`` and flows are their variational derivatives in q-bar.
"""

from __future__ import annotations

import contextlib
import enum
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from . import coefficients as cf
from .diffpoly import (
    Q,
    QBAR,
    U,
    DiffPoly,
    conjugate,
    const,
    d_x,
    divide_by_q,
    gen,
    is_total_derivative,
    var_derivative,
)
from .exact import I, GaussianRational, binom, catalan
from .projections import (
    CertificateMismatch,
    CertifiedRemainder,
    ClassSpec,
    certify_nls,
    certify_with_rho,
    check_certificate,
    pi,
    pi_tilde,
)

HALF = Fraction(1, 2)

__all__ = [
    "Hierarchy",
    "Density",
    "Hamiltonian",
    "sigma_nls",
    "sigma_kdv",
    "sigma_gp",
    "hamiltonian",
    "flow_rhs",
    "renormalize",
    "gp_from_nls_row",
    "gp_from_nls_matrix",
    "nls_from_gp_matrix",
    "invert_lower_triangular",
    "structural_form",
    "structural_main",
    "poisson_bracket",
    "delta_projection_check",
    "riccati_mismatches",
    "perturbed_sigma",
    "perturbed_row",
    "gp_flow_from_nls",
    "pi0_closed_form",
    "pi1_closed_form",
    "pi2_delta_closed_form",
    "delta_pi0_closed_form",
    "delta_pi1_closed_form",
]


class Hierarchy(str, enum.Enum):
    NLS = "nls"
    GP = "gp"
    KDV = "kdv"

    @classmethod
    def parse(cls, value) -> "Hierarchy":
        if isinstance(value, Hierarchy):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown hierarchy {value!r}") from None


@dataclass(frozen=True)
class Density:
    poly: DiffPoly
    hierarchy: Hierarchy
    index: int


@dataclass(frozen=True)
class Hamiltonian:
    density: DiffPoly
    hierarchy: Hierarchy
    index: int

    def is_real(self) -> bool:
        """Density minus its conjugate integrates to zero."""
        if self.hierarchy is Hierarchy.KDV:
            return True
        return is_total_derivative(self.density - conjugate(self.density))


_q, _qb, _qx = gen(Q), gen(QBAR), gen(Q, 1)
_minus_q = -_q

_lock = threading.Lock()
_nls: List[DiffPoly] = [DiffPoly(), -(_q * _qb)]
_kdv: List[DiffPoly] = [DiffPoly(), gen(U)]


def _extend(table: List[DiffPoly], n: int, with_division: bool) -> None:
    with _lock:
        while len(table) <= n:
            m = len(table) - 1
            s = table[m]
            conv = DiffPoly()
            for k in range(m + 1):
                conv = conv + table[k] * table[m - k]
            nxt = d_x(s) + conv
            if with_division:
                nxt = nxt - divide_by_q(_qx * s)
            table.append(nxt)


def _check_index(n: int) -> None:
    if not isinstance(n, int) or n < 0:
        raise ValueError(f"density index must be a nonnegative integer, got {n!r}")


def sigma_nls(n: int) -> Density:
    _check_index(n)
    if len(_nls) <= n:
        _extend(_nls, n, True)
    return Density(_nls[n], Hierarchy.NLS, n)


def sigma_kdv(n: int) -> Density:
    _check_index(n)
    if len(_kdv) <= n:
        _extend(_kdv, n, False)
    return Density(_kdv[n], Hierarchy.KDV, n)


def _sig(n: int) -> DiffPoly:
    return sigma_nls(n).poly


@contextlib.contextmanager
def perturbed_sigma(n: int, delta: DiffPoly, warm: int = 0) -> Iterator[None]:
    """Temporarily add ``delta`` to sigma^NLS_n; used for negative controls.

    Densities up to ``max(n, warm)`` are computed first and keep their
    unperturbed values, so the perturbation surfaces exactly at index n in
    recurrence checks. Everything cached meanwhile is discarded on exit.
    """
    _check_index(n)
    sigma_nls(max(n, warm))
    with _lock:
        size = len(_nls)
        saved = _nls[n]
        _nls[n] = saved + delta
        gp_saved = dict(_gp_cache)
        _gp_cache.clear()
    try:
        yield
    finally:
        with _lock:
            del _nls[size:]
            _nls[n] = saved
            _gp_cache.clear()
            _gp_cache.update(gp_saved)


# -- NLS <-> GP renormalization ----------------------------------------------------

# (n, k) -> additive offset on a renormalization entry; negative controls only.
_ROW_PERTURBATIONS: Dict[Tuple[int, int], Fraction] = {}


@contextlib.contextmanager
def perturbed_row(n: int, k: int, delta=1) -> Iterator[None]:
    """Temporarily add ``delta`` to the coefficient of sigma^NLS_k in sigma^GP_n."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    with _lock:
        _ROW_PERTURBATIONS[(n, k)] = _ROW_PERTURBATIONS.get((n, k), Fraction(0)) + Fraction(delta)
        gp_saved = dict(_gp_cache)
        _gp_cache.clear()
    try:
        yield
    finally:
        with _lock:
            _ROW_PERTURBATIONS[(n, k)] -= Fraction(delta)
            if not _ROW_PERTURBATIONS[(n, k)]:
                del _ROW_PERTURBATIONS[(n, k)]
            _gp_cache.clear()
            _gp_cache.update(gp_saved)


def gp_from_nls_row(n: int) -> Tuple[List[Fraction], Fraction]:
    """Coefficients of sigma^NLS_0..sigma^NLS_n in sigma^GP_n, plus the constant."""
    _check_index(n)
    row = [Fraction(0)] * (n + 1)
    if n % 2 == 0:
        m = n // 2
        for k in range(m + 1):
            row[2 * k] = binom(m - 1, m - k) * Fraction(4) ** (m - k)
        c = Fraction(0)
    else:
        m = (n - 1) // 2
        for k in range(m + 1):
            row[2 * k + 1] = binom(m - HALF, m - k) * Fraction(4) ** (m - k)
        c = Fraction(catalan(m))
    for (pn, pk), delta in _ROW_PERTURBATIONS.items():
        if pn == n:
            row[pk] += delta
    return row, c


def gp_from_nls_matrix(nmax: int) -> Tuple[List[List[Fraction]], List[Fraction]]:
    rows, consts = [], []
    for n in range(nmax + 1):
        row, c = gp_from_nls_row(n)
        rows.append(row + [Fraction(0)] * (nmax - n))
        consts.append(c)
    return rows, consts


def invert_lower_triangular(M: Sequence[Sequence[Fraction]]) -> List[List[Fraction]]:
    """Exact inverse by forward substitution; the diagonal must be nonzero."""
    n = len(M)
    if any(M[i][i] == 0 for i in range(n)):
        raise ZeroDivisionError("singular triangular matrix")
    inv = [[Fraction(0)] * n for _ in range(n)]
    for col in range(n):
        for i in range(col, n):
            acc = Fraction(1 if i == col else 0)
            for k in range(col, i):
                acc -= M[i][k] * inv[k][col]
            inv[i][col] = acc / M[i][i]
    return inv


def nls_from_gp_matrix(nmax: int) -> Tuple[List[List[Fraction]], List[Fraction]]:
    """Rows and constants expressing sigma^NLS_n through sigma^GP_0..sigma^GP_n."""
    rows, consts = gp_from_nls_matrix(nmax)
    inv = invert_lower_triangular(rows)
    back = [-sum((inv[i][k] * consts[k] for k in range(nmax + 1)), Fraction(0))
            for i in range(nmax + 1)]
    return inv, back


def renormalize(coeffs: Sequence, densities: Sequence, constant=0) -> DiffPoly:
    """Affine combination sum_k coeffs[k] * densities[k] + constant."""
    if len(coeffs) != len(densities):
        raise ValueError(
            f"row has {len(coeffs)} coefficients but {len(densities)} densities were given"
        )
    out = const(constant) if constant else DiffPoly()
    for c, d in zip(coeffs, densities):
        if not c:
            continue
        poly = d.poly if isinstance(d, Density) else d
        out = out + poly * GaussianRational.coerce(c)
    return out


_gp_cache: Dict[int, DiffPoly] = {}


def sigma_gp(n: int) -> Density:
    _check_index(n)
    if n not in _gp_cache:
        row, c = gp_from_nls_row(n)
        _gp_cache[n] = renormalize(row, [_sig(k) for k in range(n + 1)], c)
    return Density(_gp_cache[n], Hierarchy.GP, n)


# -- Hamiltonians and flows ------------------------------------------------------------

def _hamiltonian_sign(n: int) -> GaussianRational:
    return -((-I) ** n)


def hamiltonian(h, n: int) -> Hamiltonian:
    h = Hierarchy.parse(h)
    _check_index(n)
    if h is Hierarchy.KDV:
        return Hamiltonian(sigma_kdv(n).poly, h, n)
    sigma = sigma_nls(n + 1) if h is Hierarchy.NLS else sigma_gp(n + 1)
    return Hamiltonian(sigma.poly * _hamiltonian_sign(n), h, n)


def flow_rhs(h, n: int) -> DiffPoly:
    """Right side of i q_t = dH/dqbar (NLS, GP) or u_t = (1/2) d_x dE/du (KdV)."""
    h = Hierarchy.parse(h)
    H = hamiltonian(h, n)
    if h is Hierarchy.KDV:
        return d_x(var_derivative(H.density, U)) * Fraction(1, 2)
    return var_derivative(H.density, QBAR)


def gp_flow_from_nls(n: int) -> DiffPoly:
    """GP flow n as a combination of NLS flows.

    Even n = 2m uses binom(m - 1/2, m - k) (-4)^(m-k) on the flows 2k, odd
    n = 2m+1 uses binom(m, m - k) (-4)^(m-k) on the flows 2k+1.
    """
    _check_index(n)
    m = n // 2
    out = DiffPoly()
    for k in range(m + 1):
        if n % 2 == 0:
            c = binom(m - HALF, m - k) * Fraction(-4) ** (m - k)
            out = out + flow_rhs(Hierarchy.NLS, 2 * k) * c
        else:
            c = binom(m, m - k) * Fraction(-4) ** (m - k)
            out = out + flow_rhs(Hierarchy.NLS, 2 * k + 1) * c
    return out


def poisson_bracket(F: Hamiltonian, G: Hamiltonian) -> DiffPoly:
    if F.hierarchy != G.hierarchy or F.hierarchy is Hierarchy.KDV:
        raise ValueError("bracket needs two Hamiltonians of the same NLS or GP hierarchy")
    fq, fqb = var_derivative(F.density, Q), var_derivative(F.density, QBAR)
    gq, gqb = var_derivative(G.density, Q), var_derivative(G.density, QBAR)
    return fq * gqb - fqb * gq


# -- closed forms for the projected densities ---------------------------------------------

def _mono(cq: int, cqb: int) -> DiffPoly:
    """(-q)^cq * qbar^cqb."""
    return _minus_q ** cq * _qb ** cqb


def pi0_closed_form(n: int) -> DiffPoly:
    if n % 2 == 0:
        return DiffPoly()
    m = (n + 1) // 2
    return _mono(m, m) * catalan((n - 1) // 2)


def pi1_closed_form(n: int) -> DiffPoly:
    out = DiffPoly()
    for j in range(n // 2):
        c = cf.coeff("D", n, j)
        if c:
            out = out + _mono(j + 1, j) * gen(QBAR, n - 1 - 2 * j) * c
    for j in range(n // 2 - 1):
        c = cf.coeff("E", n, j)
        if c:
            out = out + _mono(j + 1, j + 2) * gen(Q, n - 3 - 2 * j) * c
    return out


def pi2_delta_closed_form(n: int) -> DiffPoly:
    """pi_1 delta pi~_2 sigma_n from the Ft and Gt families."""
    M = (n - 1) // 2
    out = DiffPoly()
    for j in range(M - 1):
        c = cf.coeff("Ft", n, j)
        if c:
            out = out + _mono(j + 2, j) * gen(QBAR, n - 3 - 2 * j) * c
    for j in range(M):
        c = cf.coeff("Gt", n, j)
        if c:
            out = out + _mono(j, j) * gen(Q, n - 1 - 2 * j) * c
    return out


def delta_pi0_closed_form(n: int) -> DiffPoly:
    if n % 2 == 0:
        return DiffPoly()
    k = (n - 1) // 2
    return _mono(k + 1, k) * (Fraction(n + 1, 2) * catalan(k))


def delta_pi1_closed_form(n: int) -> DiffPoly:
    out = DiffPoly()
    for j in range(n // 2 - 1):
        c = cf.coeff("J", n, j)
        if c:
            out = out + _mono(j + 2, j) * gen(QBAR, n - 3 - 2 * j) * c
    for j in range(n // 2):
        c = cf.coeff("K", n, j)
        if c:
            out = out + _mono(j, j) * gen(Q, n - 1 - 2 * j) * c
    return out


def delta_projection_check(n: int) -> bool:
    """Projections of delta sigma_n agree with the J/K closed forms."""
    if n < 1:
        raise ValueError("n must be at least 1")
    dsig = var_derivative(_sig(n), QBAR)
    return pi(dsig, 0) == delta_pi0_closed_form(n) and pi(dsig, 1) == delta_pi1_closed_form(n)


# -- structural (main + remainder) decomposition ---------------------------------------------

def _i_dx(var: str, k: int) -> DiffPoly:
    """(i d_x)^k applied to a generator, expanded as i^k d_x^k."""
    return gen(var, k) * (I ** k)


def _nls_main(n: int) -> DiffPoly:
    m = n // 2
    out = DiffPoly()
    if n % 2 == 0:
        for j in range(m - 1):
            c = cf.coeff("J", 2 * m + 1, j)
            out = out + _q ** (j + 2) * _qb ** j * _i_dx(QBAR, 2 * m - 2 - 2 * j) * c
        for j in range(m):
            c = cf.coeff("K", 2 * m + 1, j)
            out = out - _q ** j * _qb ** j * _i_dx(Q, 2 * m - 2 * j) * c
        out = out + _qb ** m * _q ** (m + 1) * ((m + 1) * catalan(m))
    else:
        for j in range(m + 1):
            c = cf.coeff("K", 2 * m + 2, j)
            out = out + _q ** j * _qb ** j * _i_dx(Q, 2 * m + 1 - 2 * j) * c
    return out


def _gp_main(n: int) -> DiffPoly:
    if n == 2:
        # The defocusing GP equation itself; nothing is left over.
        return _i_dx(Q, 2) - 2 * _q + 2 * _q * _q * _qb
    m = n // 2
    if n % 2 == 0:
        return (
            _i_dx(Q, 2 * m)
            + 2 * _i_dx(Q, 2 * m - 2)
            + 2 * _q * _q * _i_dx(QBAR, 2 * m - 2)
        )
    out = DiffPoly()
    for j in range(m + 1):
        c = Fraction(4) ** (m - j) * binom(HALF, m - j)
        out = out + _i_dx(Q, 2 * j + 1) * c
    return out


def structural_main(h, n: int) -> DiffPoly:
    h = Hierarchy.parse(h)
    _check_index(n)
    if h is Hierarchy.NLS:
        return _nls_main(n)
    if h is Hierarchy.GP:
        if n < 1:
            raise ValueError("GP structural form needs n >= 1")
        return _gp_main(n)
    raise ValueError("structural forms exist for NLS and GP only")


def structural_form(h, n: int) -> Tuple[DiffPoly, CertifiedRemainder]:
    """Split flow_rhs(h, n) into the closed-form main part and a certified remainder."""
    h = Hierarchy.parse(h)
    main = structural_main(h, n)
    rem = flow_rhs(h, n) - main
    spec = ClassSpec(2, max(n - 2, 0), rho_generator=(h is Hierarchy.GP))
    if n < 2 and rem:
        raise CertificateMismatch(f"flow {n} should coincide with its main part")
    cert = certify_with_rho(rem, spec) if spec.rho_generator else certify_nls(rem, spec)
    if not check_certificate(cert, spec):
        raise CertificateMismatch(f"remainder of flow {n} is outside its class")
    return main, cert


# -- Riccati consistency ---------------------------------------------------------------

def riccati_mismatches(order: int) -> List[int]:
    """Orders k <= ``order`` at which the truncated series sum sigma_n w^n fails
    (1/w) S = d_x S - (q_x/q) S + S^2 - q qbar,  with w = 1/(2 i lambda).

    The series product is formed independently of the recurrence loop.
    """
    S = [_sig(k) for k in range(order + 2)]
    bad = []
    for k in range(order + 1):
        lhs = S[k + 1]
        square = DiffPoly()
        for a in range(k + 1):
            square = square + S[a] * S[k - a]
        rhs = d_x(S[k]) - divide_by_q(_qx * S[k]) + square
        if k == 0:
            rhs = rhs - _q * _qb
        if lhs != rhs:
            bad.append(k)
    return bad
