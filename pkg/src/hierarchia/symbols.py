"""Exact Fourier-symbol algebra for the linearized GP flows.

With D = -i d_x acting as multiplication by xi, the even flows linearize to a
4x4 matrix symbol that diagonalizes with eigenvalues +-xi^{2m-1} s, where
s = sqrt(xi^2 + 4). Elements of Q[xi][s] / (s^2 - xi^2 - 4) are stored as
pairs of polynomials (a, b) meaning a(xi) + b(xi) s.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .diffpoly import Q, DiffPoly
from .exact import GaussianRational, binom

HALF = Fraction(1, 2)

__all__ = [
    "Poly",
    "SymbolElement",
    "linear_even_symbol",
    "diagonalizer",
    "symbol_check_even",
    "symbol_check_odd",
    "odd_flow_symbol",
    "operator_symbol",
]


class Poly:
    """Dense univariate polynomial in xi with Fraction coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Sequence = ()):
        c = [Fraction(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.c = c

    @classmethod
    def monomial(cls, k: int, coeff=1) -> "Poly":
        return cls([0] * k + [coeff])

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.c), len(other.c))
        return Poly([(self.c[i] if i < len(self.c) else 0) + (other.c[i] if i < len(other.c) else 0)
                     for i in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return Poly([-x for x in self.c])

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        if not self.c or not other.c:
            return Poly()
        out = [Fraction(0)] * (len(self.c) + len(other.c) - 1)
        for i, a in enumerate(self.c):
            if a:
                for j, b in enumerate(other.c):
                    out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly([1])
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return self.c == _as_poly(other).c

    def __repr__(self):
        return f"Poly({[str(x) for x in self.c]})"


def _as_poly(x) -> Poly:
    return x if isinstance(x, Poly) else Poly([x])


XI = Poly.monomial(1)
_S_SQUARED = XI * XI + 4


class SymbolElement:
    """a(xi) + b(xi) * s with s^2 = xi^2 + 4."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = _as_poly(a)
        self.b = _as_poly(b)

    def __add__(self, other):
        other = _as_symbol(other)
        return SymbolElement(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self):
        return SymbolElement(-self.a, -self.b)

    def __sub__(self, other):
        return self + (-_as_symbol(other))

    def __mul__(self, other):
        other = _as_symbol(other)
        return SymbolElement(self.a * other.a + self.b * other.b * _S_SQUARED,
                             self.a * other.b + self.b * other.a)

    __rmul__ = __mul__

    def __eq__(self, other):
        other = _as_symbol(other)
        return self.a == other.a and self.b == other.b

    def __repr__(self):
        return f"SymbolElement({self.a!r} + {self.b!r} s)"


def _as_symbol(x) -> SymbolElement:
    if isinstance(x, SymbolElement):
        return x
    return SymbolElement(_as_poly(x), 0)


S = SymbolElement(0, 1)
XI_S = SymbolElement(XI, 0)

Matrix = List[List[SymbolElement]]


def _matmul(A: Matrix, B: Matrix) -> Matrix:
    n, k, m = len(A), len(B), len(B[0])
    return [[sum((A[i][t] * B[t][j] for t in range(k)), SymbolElement()) for j in range(m)]
            for i in range(n)]


def _scale(A: Matrix, c) -> Matrix:
    return [[x * c for x in row] for row in A]


def _identity(n: int) -> Matrix:
    return [[SymbolElement(1 if i == j else 0) for j in range(n)] for i in range(n)]


def _xi_power(k: int) -> SymbolElement:
    return SymbolElement(Poly.monomial(k), 0)


def linear_even_symbol(m: int) -> Matrix:
    """Symbol of the linear part of the even flow 2m acting on (p, q*^2 pbar, pbar, qbar*^2 p)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    d2 = XI * XI + 2
    block = [
        [d2, 2, 0, 0],
        [-2, -d2, 0, 0],
        [0, 0, -d2, -2],
        [0, 0, 2, d2],
    ]
    lead = _xi_power(2 * m - 2)
    return [[lead * SymbolElement(x) for x in row] for row in block]


def diagonalizer(perturb: Optional[Tuple[int, int, Fraction]] = None) -> Tuple[Matrix, Matrix]:
    """(2s V, 2 xi W): the diagonalizing pair with denominators cleared."""
    plus_v, minus_v = XI_S + S, XI_S - S       # 2s (xi/s +- 1)
    plus_w, minus_w = S + XI_S, S - XI_S       # 2xi (s/xi +- 1)
    zero = SymbolElement()
    V = [
        [plus_v, minus_v, zero, zero],
        [minus_v, plus_v, zero, zero],
        [zero, zero, minus_v, plus_v],
        [zero, zero, plus_v, minus_v],
    ]
    W = [
        [plus_w, minus_w, zero, zero],
        [minus_w, plus_w, zero, zero],
        [zero, zero, minus_w, plus_w],
        [zero, zero, plus_w, minus_w],
    ]
    if perturb is not None:
        i, j, delta = perturb
        V[i][j] = V[i][j] + Fraction(delta)
    return V, W


def symbol_check_even(m: int, perturb_v: Optional[Tuple[int, int, Fraction]] = None) -> bool:
    """V W = I and V D W = L^{2m}, checked as (2sV)(2xiW) = 4 s xi I and
    (2sV) D (2xiW) = 4 s xi L^{2m}."""
    V, W = diagonalizer(perturb_v)
    four_s_xi = S * XI_S * 4
    if _matmul(V, W) != _scale(_identity(4), four_s_xi):
        return False
    lam = _xi_power(2 * m - 1) * S
    signs = (1, -1, 1, -1)
    D = [[lam * signs[i] if i == j else SymbolElement() for j in range(4)] for i in range(4)]
    return _matmul(_matmul(V, D), W) == _scale(linear_even_symbol(m), four_s_xi)


def operator_symbol(P: DiffPoly) -> Poly:
    """Symbol in xi = -i d_x of a constant-coefficient linear operator applied to q.

    Only real symbols are supported, which covers the odd GP main parts.
    """
    re, im = [Fraction(0)], [Fraction(0)]
    for key, c in P.items():
        if len(key) != 1 or key[0][0] != Q or key[0][2] != 1:
            raise ValueError("operator must be linear in q with constant coefficients")
        k = key[0][1]
        # d_x^k -> (i xi)^k
        val = GaussianRational.coerce(c) * GaussianRational(0, 1) ** k
        while len(re) <= k:
            re.append(Fraction(0))
            im.append(Fraction(0))
        re[k] += Fraction(val.re)
        im[k] += Fraction(val.im)
    if any(im):
        raise ValueError("symbol is not real")
    return Poly(re)


def odd_flow_symbol(k: int) -> Poly:
    """Symbol of the main part of the odd GP flow 2k+1."""
    from .hierarchy import structural_main

    return operator_symbol(structural_main("gp", 2 * k + 1))


def symbol_check_odd(m: int, drop_first: bool = False) -> bool:
    """sum_k binom(-1/2, m-k) 4^{m-k} L^{2k+1} = -xi^{2m+1}."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    total = Poly()
    for k in range(1 if drop_first else 0, m + 1):
        total = total + odd_flow_symbol(k) * (binom(-HALF, m - k) * Fraction(4) ** (m - k))
    return total == Poly.monomial(2 * m + 1, -1)
