"""Registry of generating-function and finite-sum identities behind the closed forms.

Each generating-function identity has a left side built from explicit sums of
binomials, Catalan numbers and coefficient-family values, and a right side
built by series arithmetic from square roots and reciprocals. Both are
truncated bivariate series in X and Y; the comparison runs over
``0 <= s <= S`` and ``-2 <= j <= J``, so identities with 1/Y or 1/Y^2 terms
are compared with their Laurent parts included.

Finite identities are checked by brute-force summation over an index box.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, Iterator, List, Optional, Tuple

from .coefficients import coeff_raw, parity_sign
from .exact import binom, catalan, format_rational
from .genfun import BiSeries, binomial_power, series_inv, series_sqrt

HALF = Fraction(1, 2)
DEFAULT_ORDER = (24, 24)
# Extra working precision: right sides divide by X once and by Y twice.
_MARGIN_S, _MARGIN_J = 2, 3

__all__ = [
    "Identity",
    "FiniteIdentity",
    "IdentityReport",
    "Mismatch",
    "REGISTRY",
    "FINITE_REGISTRY",
    "identity_keys",
    "verify_identity",
    "verify_all",
    "binomial_sum_check",
    "finite_first_failure",
    "perturbed_rhs",
]


class Mismatch(AssertionError):
    def __init__(self, key: str, s: int, j: int, lhs, rhs):
        self.key, self.s, self.j, self.lhs, self.rhs = key, s, j, lhs, rhs
        super().__init__(f"{key}: mismatch at X^{s} Y^{j}: lhs {lhs} != rhs {rhs}")


def _cl(l: int) -> int:
    return catalan(l + 1) - 2 * catalan(l)


def _d(n, j):
    return coeff_raw("D", n, j)


def _e(n, j):
    return coeff_raw("E", n, j)


def _gt(n, j):
    return coeff_raw("Gt", n, j)


class _Ring:
    """Working-precision series constants shared by the right-hand sides."""

    def __init__(self, S: int, J: int):
        self.S, self.J = S, J
        self.one = BiSeries.constant(S, J)
        self.X = BiSeries.X(S, J)
        self.Y = BiSeries.Y(S, J)

    def series(self, fn, jmin: int = 0) -> BiSeries:
        return BiSeries.from_function(fn, self.S, self.J, jmin)

    def y_inv(self, k: int = 1) -> BiSeries:
        return self.one.shift(0, -k)

    @cached_property
    def r1(self):  # sqrt(1 + Y)
        return series_sqrt(1 + self.Y)

    @cached_property
    def ir1(self):
        return series_inv(self.r1)

    @cached_property
    def rm1(self):  # sqrt(1 - Y)
        return series_sqrt(1 - self.Y)

    @cached_property
    def irm1(self):
        return series_inv(self.rm1)

    @cached_property
    def r4(self):  # sqrt(1 + 4Y)
        return series_sqrt(1 + 4 * self.Y)

    @cached_property
    def ir4(self):
        return series_inv(self.r4)

    @cached_property
    def i14(self):  # 1 / (1 + 4Y)
        return series_inv(1 + 4 * self.Y)

    @cached_property
    def i1(self):  # 1 / (1 + Y)
        return series_inv(1 + self.Y)

    @cached_property
    def q2(self):  # 1 / (1 - X^2 (1 + 4Y))
        return series_inv(1 - self.X * self.X * (1 + 4 * self.Y))

    @cached_property
    def p1(self):  # 1 / (1 - X (1 + Y))
        return series_inv(1 - self.X * (1 + self.Y))

    @cached_property
    def p4(self):  # 1 / (1 - X (1 + 4Y))
        return series_inv(1 - self.X * (1 + 4 * self.Y))

    @cached_property
    def geo_r1(self):  # 1 / (1 - X sqrt(1 + Y))
        return series_inv(1 - self.X * self.r1)

    # -- composite right sides used by several identities ----------------------
    @cached_property
    def d_rhs(self):
        return (1 + self.Y - self.r1).shift(0, -1) * self.geo_r1

    @cached_property
    def e_rhs(self):
        return (8 - 4 * self.rm1 - 4 * self.irm1).shift(0, -2)

    @cached_property
    def e_pair_rhs(self):
        R = self
        head = 2 * (4 * R.y_inv() - 2) * (1 - R.rm1).shift(0, -1) - 4 * R.y_inv()
        return head * R.i1 * R.geo_r1 * (1 - R.ir1)

    @cached_property
    def gt_rhs(self):
        R, X, Y = self, self.X, self.Y
        return ((-4 * Y) * R.ir4 * (-X) * R.q2 + (-2 * Y) * R.ir4 * R.q2
                + (1 - R.ir4) * 2 * R.r4 * X * X * (1 - X) * R.q2 * R.q2)

    @cached_property
    def gt_conv_rhs(self):
        R, X, Y = self, self.X, self.Y
        a = 1 - R.ir4
        return (a * a * 2 * R.r4 * X * X * (1 - X) * R.q2 * R.q2
                + a * 2 * Y * R.ir4 * (-2 - 2 * R.ir4) * (-X) * R.q2
                + a * 2 * Y * R.ir4 * (-1 - 2 * R.ir4) * R.q2)

    @cached_property
    def gt_d_rhs(self):
        R, X, Y = self, self.X, self.Y
        return ((R.ir4 - X) * 4 * Y * R.ir4 * X * X * R.q2 * R.q2
                + (HALF * X - R.ir4) * 4 * Y * R.ir4 ** 3 * R.q2)

    @cached_property
    def gt_e_rhs(self):
        R, X, Y = self, self.X, self.Y
        return ((R.r4 + R.ir4 - 2) * (X + R.ir4) * X * X * R.q2 * R.q2
                + (-2 * Y) * R.ir4 ** 3 * (-X) * R.q2
                + (HALF - R.ir4 + HALF * R.i14 + R.ir4 ** 3 - R.i14 * R.i14) * R.q2)

    @cached_property
    def k_rhs(self):
        return self.ir4 * (1 - self.X * (1 + 2 * self.Y)) * self.q2

    @cached_property
    def k_d_rhs(self):
        R, X, Y = self, self.X, self.Y
        return ((R.ir4 - R.r4) * X ** 3 * R.q2 * R.q2 + 4 * Y * R.i14 * X * X * R.q2 * R.q2
                - HALF * R.ir4 * (1 + R.i14) * X * R.q2 + R.i14 * R.i14 * R.q2)

    @cached_property
    def k_e_rhs(self):
        R, X, Y = self, self.X, self.Y
        return ((2 - R.r4 - R.ir4) * X ** 3 * R.q2 * R.q2
                + (-1 - R.i14 + 2 * R.ir4) * X * X * R.q2 * R.q2
                - 2 * Y * R.ir4 ** 3 * X * R.q2 + (R.i14 * R.i14 - R.ir4 ** 3) * R.q2)

    @cached_property
    def gt0_rhs(self):
        return self.ir4 + self.ir4 ** 3 - 2 * self.i14 * self.i14

    @cached_property
    def ft_main_rhs(self):
        R, X, Y = self, self.X, self.Y
        return ((-8 * Y * R.ir1 ** 3 + 8 * R.ir1) * X * (1 + Y) * R.p1 * R.p1
                + (4 * Y * R.ir1 ** 3 - 6 * R.ir1) * R.p1)

    @cached_property
    def ft_binom_rhs(self):
        R, X, Y = self, self.X, self.Y
        return ((2 * Y - 6) * R.i1 * R.i1 * R.p1
                + 8 * R.i1 * R.i1 * X * (1 + Y) * R.p1 * R.p1)


@dataclass(frozen=True)
class Identity:
    key: str
    description: str
    lhs: Callable[[_Ring], BiSeries]
    rhs: Callable[[_Ring], BiSeries]
    note: str = ""


@dataclass
class IdentityReport:
    id: str
    status: str
    order: Tuple[int, int]
    mismatch: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.status == "match"

    def to_json(self) -> dict:
        out = {"id": self.id, "status": self.status, "order": list(self.order)}
        if self.mismatch is not None:
            out["mismatch"] = self.mismatch
        return out


# (key) -> list of (s, j, delta); used only for negative-control runs.
_RHS_BUMPS: Dict[str, List[Tuple[int, int, Fraction]]] = {}


@contextlib.contextmanager
def perturbed_rhs(key: str, s: int, j: int, delta=1) -> Iterator[None]:
    """Temporarily add ``delta`` to one right-hand-side coefficient."""
    if key not in REGISTRY:
        raise KeyError(key)
    _RHS_BUMPS.setdefault(key, []).append((s, j, Fraction(delta)))
    try:
        yield
    finally:
        _RHS_BUMPS[key].pop()
        if not _RHS_BUMPS[key]:
            del _RHS_BUMPS[key]


# -- left sides ---------------------------------------------------------------------

def _lhs_catalan(R):
    return R.series(lambda s, j: catalan(s) if j == 0 else 0)


def _lhs_d_binom(R):
    return R.series(lambda s, j: binom(Fraction(s, 2) + 1, j + 1) - binom(Fraction(s, 2) + HALF, j + 1))


def _lhs_d_catalan(R):
    return R.series(lambda s, j: HALF * sum(
        (Fraction(4) ** -k * catalan(k) * binom(Fraction(s, 2) - k, j - k) for k in range(j + 1)),
        Fraction(0)))


def _lhs_e_alt(R):
    return R.series(lambda s, j: sum(
        (parity_sign(l) * _cl(l) * Fraction(4) ** -l * binom(j, j - l) for l in range(j + 1)),
        Fraction(0)) if s == 0 else 0)


def _lhs_e_catalan(R):
    return R.series(lambda s, j: -Fraction(4) ** -j * catalan(j + 1) * (j + 1) if s == 0 else 0)


def _e_pair_binom(signed: bool):
    def build(R):
        def c(n, j):
            return sum(
                ((parity_sign(l) if signed else 1) * _cl(l) * Fraction(4) ** -l
                 * (binom(Fraction(n, 2) - 1, j - l) - binom(Fraction(n - 1, 2) - 1, j - l))
                 for l in range(j + 1)),
                Fraction(0))
        return R.series(c)
    return build


def _e_pair_conv(signed: bool):
    def build(R):
        def c(n, j):
            return 2 * sum(
                (catalan(k) * (parity_sign(l) if signed else 1) * _cl(l)
                 * Fraction(4) ** (-1 - k - l) * binom(Fraction(n, 2) - 2 - k, j - 1 - k - l)
                 for k in range(j) for l in range(j - k)),
                Fraction(0))
        return R.series(c)
    return build


def _lhs_gt(R):
    return R.series(lambda n, j: _gt(n + 1, j))


def _lhs_gt_conv(R):
    return R.series(lambda n, j: 2 * sum(
        (catalan(k) * _gt(n - 2 * k - 1, j - k - 1) for k in range(j - 1)), Fraction(0)))


def _lhs_gt_d(R):
    return R.series(lambda n, j: parity_sign(n) * j * _d(n, j))


def _lhs_gt_e(R):
    def c(n, j):
        out = (j + 1) * _e(n, j - 1)
        if n % 2 == 0:
            out += 2 * _e(n, j - 2)
        return -out
    return R.series(c)


def _lhs_k1(R):
    def c(n, j):
        out = parity_sign(n) * _d(n + 1, j)
        if n % 2:
            out += 2 * _e(n, j - 2)
        return out
    return R.series(c)


def _lhs_k2(R):
    return R.series(lambda n, j: coeff_raw("K", n, j))


def _lhs_k_d(R):
    return R.series(lambda n, j: (j + 1) * parity_sign(n) * _d(n, j))


def _lhs_k_e(R):
    return R.series(lambda n, j: (j + 1) * _e(n, j - 1))


def _lhs_gt0(R):
    return R.series(lambda n, j: _gt(0, j) if n == 0 else 0)


def _lhs_ft_conv(R):
    return R.series(lambda m, j: 2 * sum(
        ((8 * (m - j) - 6) * Fraction(4) ** (-k - 1) * binom(m - k - 1 - HALF, j - k - 1) * catalan(k)
         for k in range(j)), Fraction(0)))


def _lhs_ft_binom(R):
    return R.series(lambda m, j: 2 * parity_sign(j) * binom(-m + j, j) + 8 * (j + 1) * binom(m - 1, j + 1))


def _lhs_ft_main(R):
    return R.series(lambda m, j: (8 * (m - j) - 6) * binom(m - HALF, j))


def _lhs_ft_closed(R):
    # Ft_{2m+1,j} rescaled by -4^{-j}: the odd-index family itself.
    return R.series(lambda m, j: -coeff_raw("Ft", 2 * m + 1, j) / Fraction(4) ** j)


def _lhs_j_simplify(R):
    return R.series(lambda m, j: (8 * j + 8) * Fraction(4) ** j * binom(m + HALF, j + 1)
                    - (8 * m + 2) * Fraction(4) ** j * binom(m - HALF, j))


def _lhs_thm2_helper(R):
    return R.series(lambda s, k: (
        Fraction(4) ** (k + 2) * binom(HALF, k + 2)
        - 2 * sum((parity_sign(l) * _cl(l) * Fraction(4) ** (k - l) * binom(-HALF, k - l)
                   for l in range(k + 1)), Fraction(0))
    ) if s == 0 else 0, jmin=-2)


def _lhs_gp_resolvent(R):
    return R.series(lambda m, k: binom(m - HALF, m - k) * Fraction(-4) ** (m - k) * (k + 1) * catalan(k))


def _lhs_central(R):
    return R.series(lambda m, j: catalan(m) * (m + 1) if j == 0 else 0)


def _rhs_central_binom(R):
    return R.series(lambda m, j: Fraction(4) ** m * binom(m - HALF, m) if j == 0 else 0)


def _build_registry() -> Dict[str, Identity]:
    items = [
        Identity("catalan-gf", "sum C_n X^n = (1 - sqrt(1 - 4X)) / (2X)",
                 _lhs_catalan, lambda R: (1 - series_sqrt(1 - 4 * R.X)).shift(-1) * HALF),
        Identity("central-binom-gf", "sum (m+1) C_m X^m = (1 - 4X)^(-1/2)",
                 _lhs_central, lambda R: series_inv(series_sqrt(1 - 4 * R.X))),
        Identity("central-binom", "(m+1) C_m = 4^m binom(m - 1/2, m)",
                 _lhs_central, _rhs_central_binom),
        Identity("D-lemma-binom", "binomial difference form of the D generating function",
                 _lhs_d_binom, lambda R: R.d_rhs),
        Identity("D-lemma-catalan", "Catalan convolution form of the D generating function",
                 _lhs_d_catalan, lambda R: R.d_rhs),
        Identity("D-lemma-pair", "the two D-lemma sums agree",
                 _lhs_d_binom, _lhs_d_catalan),
        Identity("E-lemma-alternating", "alternating Catalan-difference sum for the E lemma",
                 _lhs_e_alt, lambda R: R.e_rhs),
        Identity("E-lemma-catalan", "Catalan form of the E lemma",
                 _lhs_e_catalan, lambda R: R.e_rhs),
        Identity("E-pair-binom", "binomial side of the E-pair, unsigned Catalan differences",
                 _e_pair_binom(False), lambda R: R.e_pair_rhs,
                 note="balances without the alternating sign"),
        Identity("E-pair-conv", "convolution side of the E-pair, unsigned Catalan differences",
                 _e_pair_conv(False), lambda R: R.e_pair_rhs,
                 note="balances without the alternating sign"),
        Identity("E-pair-signed", "signed binomial and convolution sides of the E-pair agree",
                 _e_pair_binom(True), _e_pair_conv(True)),
        Identity("Gt-gf", "generating function of the unrestricted Gt family",
                 _lhs_gt, lambda R: R.gt_rhs),
        Identity("Gt-conv", "Catalan convolution of Gt",
                 _lhs_gt_conv, lambda R: R.gt_conv_rhs),
        Identity("Gt-D-part", "D contribution to the Gt recurrence",
                 _lhs_gt_d, lambda R: R.gt_d_rhs),
        Identity("Gt-E-part", "E contribution to the Gt recurrence",
                 _lhs_gt_e, lambda R: R.gt_e_rhs),
        Identity("Gt-balance", "Gt series equals its convolution, D and E parts",
                 lambda R: R.gt_rhs, lambda R: R.gt_conv_rhs + R.gt_d_rhs + R.gt_e_rhs),
        Identity("Gt0-gf", "Y-series of the unrestricted Gt_{0,j}",
                 _lhs_gt0, lambda R: R.gt0_rhs,
                 note="the final simplification carries -2/(1+4Y)^2"),
        Identity("Ft-conv", "Catalan convolution entering the Ft recurrence",
                 _lhs_ft_conv, lambda R: R.ft_main_rhs - R.ft_binom_rhs),
        Identity("Ft-binom", "binomial remainder of the Ft recurrence",
                 _lhs_ft_binom, lambda R: R.ft_binom_rhs),
        Identity("Ft-main", "main Ft sum",
                 _lhs_ft_main, lambda R: R.ft_main_rhs),
        Identity("Ft-closed", "Ft closed form rescaled by -4^-j equals the main sum",
                 _lhs_ft_closed, lambda R: R.ft_main_rhs),
        Identity("J-simplify", "binomial simplification behind J",
                 _lhs_j_simplify, lambda R: 2 * R.ir4 * R.p4),
        Identity("J-closed", "generating function of J_{2m+1,j}",
                 lambda R: R.series(lambda m, j: coeff_raw("J", 2 * m + 1, j)),
                 lambda R: 2 * R.ir4 * R.p4),
        Identity("K1-gf", "K as (-1)^n D_{n+1,j} + 2[n odd] E_{n,j-2}",
                 _lhs_k1, lambda R: R.k_rhs),
        Identity("K2-gf", "K by extraction from powers of (1 + 4u)",
                 _lhs_k2, lambda R: R.k_rhs),
        Identity("K1-split", "even/odd split of the K generating function",
                 lambda R: R.k_rhs,
                 lambda R: R.ir4 * R.q2 + (-HALF * R.ir4 - HALF * R.r4) * R.X * R.q2),
        Identity("K-D-part", "weighted D contribution to the K recurrence",
                 _lhs_k_d, lambda R: R.k_d_rhs),
        Identity("K-E-part", "weighted E contribution to the K recurrence",
                 _lhs_k_e, lambda R: R.k_e_rhs),
        Identity("K-total", "K series assembled from Gt, Gt_0, D and E parts",
                 lambda R: R.k_rhs,
                 lambda R: R.X * R.gt_rhs + R.gt0_rhs + R.k_d_rhs + R.k_e_rhs),
        Identity("thm2-helper", "Laurent helper sum equals 2/Y + 1/Y^2",
                 _lhs_thm2_helper, lambda R: 2 * R.y_inv(1) + R.y_inv(2)),
        Identity("gp-resolvent", "NLS to GP resolvent transform of (k+1) C_k",
                 _lhs_gp_resolvent,
                 lambda R: binomial_power(1 - 4 * R.X * (R.Y - 1), -HALF)),
    ]
    return {i.key: i for i in items}


REGISTRY: Dict[str, Identity] = _build_registry()


def identity_keys() -> List[str]:
    return list(REGISTRY)


def _ring(S: int, J: int) -> _Ring:
    return _Ring(S + _MARGIN_S, J + _MARGIN_J)


def verify_identity(key: str, S: int = DEFAULT_ORDER[0], J: int = DEFAULT_ORDER[1],
                    raise_on_mismatch: bool = False, ring: Optional[_Ring] = None) -> IdentityReport:
    """Compare both sides for 0 <= s <= S, -2 <= j <= J."""
    if key not in REGISTRY:
        raise KeyError(f"unknown identity {key!r}")
    ident = REGISTRY[key]
    R = ring if ring is not None else _ring(S, J)
    lhs = ident.lhs(R)
    rhs = ident.rhs(R)
    for s, j, delta in _RHS_BUMPS.get(key, []):
        rhs = rhs.copy()
        rhs[s, j] = rhs[s, j] + delta
    mm = lhs.first_mismatch(rhs, S, J)
    if mm is None:
        return IdentityReport(key, "match", (S, J))
    s, j = mm
    if raise_on_mismatch:
        raise Mismatch(key, s, j, lhs[s, j], rhs[s, j])
    return IdentityReport(key, "mismatch", (S, J), {
        "s": s, "j": j, "lhs": format_rational(lhs[s, j]), "rhs": format_rational(rhs[s, j]),
    })


def verify_all(S: int = DEFAULT_ORDER[0], J: int = DEFAULT_ORDER[1]) -> List[IdentityReport]:
    R = _ring(S, J)
    return [verify_identity(k, S, J, ring=R) for k in REGISTRY]


# -- finite identities ------------------------------------------------------------------

def _d_restricted(n, j):
    return _d(n, j) if 0 <= j <= n // 2 - 1 else Fraction(0)


def _e_restricted(n, j):
    return _e(n, j) if 0 <= j <= n // 2 - 2 else Fraction(0)


def _de_sum(n, j):
    D, E = _d_restricted, _e_restricted
    lhs = sum((parity_sign(t) * D(t + 1 + 2 * k, k) * E(n - 1 - 2 * k - t, j - 2 - k)
               for k in range(j - 1) for t in range(1, n - 2 * j)), Fraction(0))
    rhs = -E(n, j - 2) if n % 2 == 0 else Fraction(0)
    return lhs, rhs


def _dd_sum(m, j):
    D = _d_restricted
    n = 2 * m
    lhs = sum((parity_sign(t) * (1 + (1 if t != m - 1 - j else 0))
               * D(t + 1 + 2 * k, k) * D(n - 1 - 2 * k - t, j - k)
               for k in range(j + 1) for t in range(1, m - j)), Fraction(0))
    rhs = -Fraction(-4) ** j * binom(j - m, j) if j <= m - 2 else Fraction(0)
    return lhs, rhs


def _e_pair_signed_finite(n, j):
    lhs = sum((parity_sign(l) * _cl(l) * Fraction(4) ** -l
               * (binom(Fraction(n, 2) - 1, j - l) - binom(Fraction(n - 1, 2) - 1, j - l))
               for l in range(j + 1)), Fraction(0))
    rhs = 2 * sum((catalan(k) * parity_sign(l) * _cl(l) * Fraction(4) ** (-1 - k - l)
                   * binom(Fraction(n, 2) - 2 - k, j - 1 - k - l)
                   for k in range(j) for l in range(j - k)), Fraction(0))
    return lhs, rhs


def _k_odd_intermediate(m, j):
    lhs = -sum((binom(m - HALF, m - k) * Fraction(-4) ** (m - k) * coeff_raw("K", 2 * k + 1, k - j)
                for k in range(j, m + 1)), Fraction(0))
    rhs = Fraction(4) ** (m - j) * binom(HALF, m - j) - 2 * sum(
        (parity_sign(l) * _cl(l) * Fraction(4) ** (m - 2 - j - l) * binom(-HALF, m - 2 - j - l)
         for l in range(max(m - 1 - j, 0))), Fraction(0))
    return lhs, rhs


@dataclass(frozen=True)
class FiniteIdentity:
    key: str
    description: str
    sides: Callable[[int, int], Tuple[Fraction, Fraction]]
    index_box: Callable[[int], range]  # j range for a given outer index
    outer_min: int = 0


FINITE_REGISTRY: Dict[str, FiniteIdentity] = {
    f.key: f for f in [
        FiniteIdentity("DE-sum", "signed D*E double sum equals -[n even] E_{n,j-2}",
                       _de_sum, lambda n: range(0, n // 2)),
        FiniteIdentity("DD-sum", "signed D*D double sum for n = 2m",
                       _dd_sum, lambda m: range(0, m + 2), outer_min=1),
        FiniteIdentity("E-pair-signed-finite", "signed E-pair as a finite identity",
                       _e_pair_signed_finite, lambda n: range(0, 12)),
        FiniteIdentity("K-odd-intermediate", "intermediate form of the odd K convolution",
                       _k_odd_intermediate, lambda m: range(0, m + 1), outer_min=1),
    ]
}


def finite_first_failure(key: str, outer_max: int, j_max: Optional[int] = None):
    """First (outer, j, lhs, rhs) where the identity fails, or None."""
    if key not in FINITE_REGISTRY:
        raise KeyError(f"unknown finite identity {key!r}")
    ident = FINITE_REGISTRY[key]
    for n in range(ident.outer_min, outer_max + 1):
        for j in ident.index_box(n):
            if j_max is not None and j > j_max:
                break
            lhs, rhs = ident.sides(n, j)
            if lhs != rhs:
                return n, j, lhs, rhs
    return None


def binomial_sum_check(key: str, outer_max: int, j_max: Optional[int] = None) -> bool:
    return finite_first_failure(key, outer_max, j_max) is None
