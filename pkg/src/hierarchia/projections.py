"""Derivative-count projections and residual-class certificates.

``pi(P, k)`` keeps monomials with exactly ``k`` derivative-bearing factors.
``pi_tilde(P, k)`` additionally requires one of them to sit on q-bar.

Residual classes O^{m,L} contain expressions whose monomials carry at most L
derivatives and at least m qualifying factors. Over the generators q, q-bar
the test is monomial-local. Once rho = q*qbar - 1 counts as a qualifying
factor it is not, so membership is witnessed by an explicit factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .diffpoly import (
    Q,
    QBAR,
    DiffPoly,
    d_x,
    derivative_factor_count,
    divide_by_q,
    gen,
    const,
    total_derivative_count,
    var_derivative,
)
from .exact import GaussianRational, binom

__all__ = [
    "pi",
    "pi_tilde",
    "ClassSpec",
    "Witness",
    "CertifiedRemainder",
    "CertificateMismatch",
    "NotInClass",
    "in_nls_class",
    "check_certificate",
    "certify_nls",
    "certify_with_rho",
    "rho",
    "pi0_recurrence_rhs",
    "pi1_recurrence_rhs",
    "pi2_recurrence_rhs",
    "pi1_delta_parts",
]


class CertificateMismatch(ValueError):
    """A certificate does not expand to the value it claims to certify."""


class NotInClass(ValueError):
    """No certificate exists for the requested class."""


def pi(P: DiffPoly, k: int) -> DiffPoly:
    return P.map_terms(lambda key, _: derivative_factor_count(key) == k)


def _has_qbar_derivative(key) -> bool:
    return any(v == QBAR and o >= 1 for v, o, _ in key)


def pi_tilde(P: DiffPoly, k: int) -> DiffPoly:
    if k not in (1, 2):
        raise ValueError("pi_tilde is defined for k = 1 and k = 2")
    return P.map_terms(
        lambda key, _: derivative_factor_count(key) == k and _has_qbar_derivative(key)
    )


@dataclass(frozen=True)
class ClassSpec:
    min_deriv_factors: int
    max_total_derivs: int
    rho_generator: bool = False

    def __post_init__(self):
        if self.min_deriv_factors < 0 or self.max_total_derivs < 0:
            raise ValueError("class parameters must be nonnegative")


def in_nls_class(P: DiffPoly, spec: ClassSpec) -> bool:
    if spec.rho_generator:
        raise ValueError("monomial-local test only applies without the rho generator")
    return all(
        total_derivative_count(k) <= spec.max_total_derivs
        and derivative_factor_count(k) >= spec.min_deriv_factors
        for k in P
    )


def rho(order: int = 0) -> DiffPoly:
    """d_x^order (q*qbar - 1)."""
    r = gen(Q) * gen(QBAR) - 1
    for _ in range(order):
        r = d_x(r)
    return r


# An atom is (kind, order, power) with kind in {"q", "qbar", "rho"}.
Atom = Tuple[str, int, int]


@dataclass(frozen=True)
class Witness:
    coeff: GaussianRational
    atoms: Tuple[Atom, ...]

    def expand(self) -> DiffPoly:
        out = const(self.coeff)
        for kind, order, power in self.atoms:
            base = rho(order) if kind == "rho" else gen(kind, order)
            out = out * (base ** power)
        return out

    def qualifying_factors(self, spec: ClassSpec) -> int:
        n = 0
        for kind, order, power in self.atoms:
            if kind == "rho":
                if spec.rho_generator:
                    n += power
            elif order >= 1:
                n += power
        return n

    def total_derivatives(self) -> int:
        return sum(order * power for _, order, power in self.atoms)

    def satisfies(self, spec: ClassSpec) -> bool:
        return (
            self.qualifying_factors(spec) >= spec.min_deriv_factors
            and self.total_derivatives() <= spec.max_total_derivs
        )

    def to_json(self) -> dict:
        return {"coeff": self.coeff.to_json(), "atoms": [list(a) for a in self.atoms]}


@dataclass
class CertifiedRemainder:
    value: DiffPoly
    certificate: List[Witness] = field(default_factory=list)
    spec: Optional[ClassSpec] = None

    def expand(self) -> DiffPoly:
        out = DiffPoly()
        for w in self.certificate:
            out = out + w.expand()
        return out


def check_certificate(r: CertifiedRemainder, spec: ClassSpec) -> bool:
    """Raise CertificateMismatch if witnesses do not sum to the value."""
    if r.expand() != r.value:
        raise CertificateMismatch("certificate expansion differs from the value")
    return all(w.satisfies(spec) for w in r.certificate)


def _monomial_witness(key, c) -> Witness:
    return Witness(GaussianRational.coerce(c), tuple((v, o, p) for v, o, p in key))


def certify_nls(P: DiffPoly, spec: ClassSpec) -> CertifiedRemainder:
    """One witness per monomial; raises NotInClass if a monomial fails."""
    witnesses = []
    for key, c in P.items():
        w = _monomial_witness(key, c)
        if not w.satisfies(spec):
            raise NotInClass(f"monomial {key!r} violates {spec}")
        witnesses.append(w)
    return CertifiedRemainder(P, witnesses, spec)


def certify_with_rho(P: DiffPoly, spec: ClassSpec) -> CertifiedRemainder:
    """Certify membership when rho = q*qbar - 1 counts as a qualifying factor.

    Monomials are grouped by their derivative-bearing part. Each group's
    undifferentiated cofactor, a polynomial in q and q-bar, is rewritten in the
    basis rho^s q^a and rho^s qbar^b (substituting q*qbar = rho + 1). A group
    with d derivative factors qualifies iff only terms with s >= m - d survive.
    """
    groups: Dict[tuple, Dict[Tuple[int, int], GaussianRational]] = {}
    witnesses: List[Witness] = []
    for key, c in P.items():
        dpart = tuple(f for f in key if f[1] >= 1)
        d = sum(p for _, _, p in dpart)
        if total_derivative_count(key) > spec.max_total_derivs:
            raise NotInClass(f"monomial {key!r} has too many derivatives")
        if d >= spec.min_deriv_factors:
            witnesses.append(_monomial_witness(key, c))
            continue
        a = sum(p for v, o, p in key if v == Q and o == 0)
        b = sum(p for v, o, p in key if v == QBAR and o == 0)
        bucket = groups.setdefault(dpart, {})
        bucket[(a, b)] = bucket.get((a, b), GaussianRational(0)) + c

    for dpart, poly in groups.items():
        d = sum(p for _, _, p in dpart)
        need = spec.min_deriv_factors - d
        basis: Dict[Tuple[int, int, int], GaussianRational] = {}
        for (a, b), c in poly.items():
            t = min(a, b)
            for s in range(t + 1):
                k = (s, a - t, b - t)
                basis[k] = basis.get(k, GaussianRational(0)) + c * binom(t, s)
        for (s, ea, eb), c in sorted(basis.items()):
            if not c:
                continue
            if s < need:
                raise NotInClass(
                    f"derivative part {dpart!r} carries a cofactor not divisible by rho^{need}"
                )
            atoms = list(dpart)
            if s:
                atoms.append(("rho", 0, s))
            if ea:
                atoms.append((Q, 0, ea))
            if eb:
                atoms.append((QBAR, 0, eb))
            witnesses.append(Witness(c, tuple(atoms)))
    return CertifiedRemainder(P, witnesses, spec)


# -- projection recurrences -------------------------------------------------------

SigmaFn = Callable[[int], DiffPoly]


def pi0_recurrence_rhs(sigma: SigmaFn, n: int) -> DiffPoly:
    """Right side of the recurrence for pi_0 sigma_{n+1}."""
    out = DiffPoly()
    for k in range(1, n + 1):
        out = out + pi(sigma(k), 0) * pi(sigma(n - k), 0)
    return out


def pi1_recurrence_rhs(sigma: SigmaFn, n: int) -> DiffPoly:
    s0 = pi(sigma(n), 0)
    qx = gen(Q, 1)
    out = d_x(s0) - divide_by_q(qx * s0) + pi(d_x(pi(sigma(n), 1)), 1)
    for k in range(1, n + 1):
        out = out + 2 * pi(sigma(k), 1) * pi(sigma(n - k), 0)
    return out


def pi2_recurrence_rhs(sigma: SigmaFn, n: int, as_printed: bool = False) -> DiffPoly:
    """Right side of the recurrence for pi~_2 sigma_{n+1}.

    The bilinear term 2 * pi~_1 sigma_k * pi_1 sigma_{n-k} counts products of
    two q-bar-derivative factors twice; the exact recurrence subtracts
    pi~_1 sigma_k * pi~_1 sigma_{n-k} once. ``as_printed`` omits that
    correction.
    """
    sn = sigma(n)
    qx = gen(Q, 1)
    out = (
        pi_tilde(d_x(pi_tilde(sn, 2)), 2)
        - divide_by_q(qx * pi_tilde(sn, 1))
        + pi_tilde(d_x(pi(sn, 1)), 2)
    )
    for k in range(1, n):
        sk, snk = sigma(k), sigma(n - k)
        out = out + 2 * (pi_tilde(sk, 2) * pi(snk, 0) + pi_tilde(sk, 1) * pi(snk, 1))
        if not as_printed:
            out = out - pi_tilde(sk, 1) * pi_tilde(snk, 1)
    return out


def pi1_delta_parts(sn: DiffPoly) -> Tuple[DiffPoly, DiffPoly, DiffPoly]:
    """(pi_1 delta sigma, pi_1 delta pi_1 sigma, pi_1 delta pi~_2 sigma)."""
    full = pi(var_derivative(sn, QBAR), 1)
    one = pi(var_derivative(pi(sn, 1), QBAR), 1)
    two = pi(var_derivative(pi_tilde(sn, 2), QBAR), 1)
    return full, one, two
