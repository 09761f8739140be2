"""Truncated bivariate power series in X and Y with a short Laurent tail in Y.

Coefficients are exact rationals. A :class:`BiSeries` stores ``c[s][j]`` for
``0 <= s <= S`` and ``-2 <= j <= J``. The identity registry lives in
:mod:`hierarchia.identities`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, List

from .exact import binom

__all__ = [
    "BiSeries",
    "NonUnitConstant",
    "LaurentFloorExceeded",
    "series_sqrt",
    "series_inv",
]

YFLOOR = -2


class NonUnitConstant(ValueError):
    """Square root requested of a series whose constant term is not 1."""


class LaurentFloorExceeded(ArithmeticError):
    """An operation produced a nonzero Y-power below the supported floor."""


def _zero_row(J: int) -> List[Fraction]:
    return [Fraction(0)] * (J - YFLOOR + 1)


class BiSeries:
    """Truncated series sum c[s][j] X^s Y^j, j >= -2."""

    __slots__ = ("S", "J", "rows")

    def __init__(self, S: int, J: int, rows=None):
        self.S = S
        self.J = J
        width = J - YFLOOR + 1
        if rows is None:
            self.rows = [_zero_row(J) for _ in range(S + 1)]
        else:
            if len(rows) != S + 1 or any(len(r) != width for r in rows):
                raise ValueError("row shape does not match truncation orders")
            self.rows = rows

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_function(cls, fn: Callable[[int, int], object], S: int, J: int,
                      jmin: int = 0) -> "BiSeries":
        """Coefficients c[s][j] = fn(s, j) for jmin <= j <= J."""
        if jmin < YFLOOR:
            raise LaurentFloorExceeded(f"jmin {jmin} below floor {YFLOOR}")
        out = cls(S, J)
        for s in range(S + 1):
            row = out.rows[s]
            for j in range(jmin, J + 1):
                row[j - YFLOOR] = Fraction(fn(s, j))
        return out

    @classmethod
    def monomial(cls, S: int, J: int, s: int = 0, j: int = 0, c=1) -> "BiSeries":
        out = cls(S, J)
        if s <= S and YFLOOR <= j <= J:
            out.rows[s][j - YFLOOR] = Fraction(c)
        return out

    @classmethod
    def constant(cls, S: int, J: int, c=1) -> "BiSeries":
        return cls.monomial(S, J, 0, 0, c)

    @classmethod
    def X(cls, S: int, J: int) -> "BiSeries":
        return cls.monomial(S, J, 1, 0)

    @classmethod
    def Y(cls, S: int, J: int) -> "BiSeries":
        return cls.monomial(S, J, 0, 1)

    # -- access -------------------------------------------------------------
    def __getitem__(self, idx):
        s, j = idx
        if 0 <= s <= self.S and YFLOOR <= j <= self.J:
            return self.rows[s][j - YFLOOR]
        return Fraction(0)

    def __setitem__(self, idx, value):
        s, j = idx
        self.rows[s][j - YFLOOR] = Fraction(value)

    def copy(self) -> "BiSeries":
        return BiSeries(self.S, self.J, [list(r) for r in self.rows])

    def coefficient(self, s: int, j: int) -> Fraction:
        return self[s, j]

    def _like(self, other):
        if isinstance(other, BiSeries):
            if (other.S, other.J) != (self.S, self.J):
                raise ValueError("truncation orders differ")
            return other
        return BiSeries.constant(self.S, self.J, Fraction(other))

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = self._like(other)
        return BiSeries(self.S, self.J, [
            [a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)
        ])

    __radd__ = __add__

    def __neg__(self):
        return BiSeries(self.S, self.J, [[-a for a in r] for r in self.rows])

    def __sub__(self, other):
        return self + (-self._like(other))

    def __rsub__(self, other):
        return self._like(other) - self

    def __mul__(self, other):
        if not isinstance(other, BiSeries):
            c = Fraction(other)
            return BiSeries(self.S, self.J, [[a * c for a in r] for r in self.rows])
        other = self._like(other)
        S, J = self.S, self.J
        out = [_zero_row(J) for _ in range(S + 1)]
        a_rows = [(s, [(j + YFLOOR, v) for j, v in enumerate(r) if v]) for s, r in enumerate(self.rows)]
        b_rows = [(s, [(j + YFLOOR, v) for j, v in enumerate(r) if v]) for s, r in enumerate(other.rows)]
        a_rows = [(s, r) for s, r in a_rows if r]
        b_rows = [(s, r) for s, r in b_rows if r]
        for s1, r1 in a_rows:
            for s2, r2 in b_rows:
                s = s1 + s2
                if s > S:
                    continue
                row = out[s]
                for j1, v1 in r1:
                    for j2, v2 in r2:
                        j = j1 + j2
                        if j > J:
                            break
                        if j < YFLOOR:
                            raise LaurentFloorExceeded(f"Y^{j} produced in product")
                        row[j - YFLOOR] += v1 * v2
        return BiSeries(S, J, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, BiSeries):
            return self * series_inv(other)
        return self * (Fraction(1) / Fraction(other))

    def __rtruediv__(self, other):
        return self._like(other) * series_inv(self)

    def __pow__(self, k: int):
        if k < 0:
            return series_inv(self) ** (-k)
        out = BiSeries.constant(self.S, self.J)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def shift(self, ds: int = 0, dj: int = 0) -> "BiSeries":
        """Multiply by X^ds Y^dj; negative shifts must divide exactly."""
        S, J = self.S, self.J
        out = [_zero_row(J) for _ in range(S + 1)]
        for s, r in enumerate(self.rows):
            for jj, v in enumerate(r):
                if not v:
                    continue
                j = jj + YFLOOR
                ns, nj = s + ds, j + dj
                if ns < 0:
                    raise ArithmeticError(f"division by X^{-ds} is not exact")
                if nj < YFLOOR:
                    raise LaurentFloorExceeded(f"Y^{nj} produced by shift")
                if ns <= S and nj <= J:
                    out[ns][nj - YFLOOR] += v
        return BiSeries(S, J, out)

    def min_y_power(self) -> int:
        for jj in range(self.J - YFLOOR + 1):
            if any(r[jj] for r in self.rows):
                return jj + YFLOOR
        return self.J + 1

    def truncate(self, S: int, J: int) -> "BiSeries":
        if S > self.S or J > self.J:
            raise ValueError("cannot extend truncation")
        return BiSeries(S, J, [list(r[: J - YFLOOR + 1]) for r in self.rows[: S + 1]])

    def first_mismatch(self, other: "BiSeries", S: int, J: int):
        """First (s, j) in row-major order where the two series differ, or None."""
        for s in range(S + 1):
            for j in range(YFLOOR, J + 1):
                if self[s, j] != other[s, j]:
                    return s, j
        return None

    def __eq__(self, other):
        if not isinstance(other, BiSeries):
            return NotImplemented
        return (self.S, self.J) == (other.S, other.J) and self.rows == other.rows

    def __repr__(self):
        terms = []
        for s in range(min(self.S, 3) + 1):
            for j in range(YFLOOR, min(self.J, 3) + 1):
                v = self[s, j]
                if v:
                    terms.append(f"{v}*X^{s}Y^{j}")
        return f"BiSeries(S={self.S}, J={self.J}: {' + '.join(terms) or '0'} + ...)"


def _require_power_series(f: BiSeries, what: str):
    if f.min_y_power() < 0:
        raise LaurentFloorExceeded(f"{what} of a series with negative Y powers")


def series_inv(f: BiSeries) -> BiSeries:
    """Multiplicative inverse of a power series with nonzero constant term."""
    _require_power_series(f, "reciprocal")
    c0 = f[0, 0]
    if c0 == 0:
        raise NonUnitConstant("reciprocal needs a nonzero constant term")
    S, J = f.S, f.J
    nz = [(a, b, f[a, b]) for a in range(S + 1) for b in range(J + 1)
          if (a, b) != (0, 0) and f[a, b]]
    h = BiSeries(S, J)
    inv0 = 1 / c0
    for s in range(S + 1):
        for j in range(J + 1):
            acc = Fraction(1) if (s, j) == (0, 0) else Fraction(0)
            for a, b, v in nz:
                if a <= s and b <= j:
                    hv = h.rows[s - a][j - b - YFLOOR]
                    if hv:
                        acc -= v * hv
            h.rows[s][j - YFLOOR] = acc * inv0
    return h


def series_sqrt(f: BiSeries) -> BiSeries:
    """Square root of a power series with constant term 1."""
    _require_power_series(f, "square root")
    if f[0, 0] != 1:
        raise NonUnitConstant("square root needs constant term 1")
    S, J = f.S, f.J
    g = BiSeries(S, J)
    g.rows[0][0 - YFLOOR] = Fraction(1)
    for s in range(S + 1):
        for j in range(J + 1):
            if (s, j) == (0, 0):
                continue
            acc = f[s, j]
            for a in range(s + 1):
                ga = g.rows[a]
                gb = g.rows[s - a]
                for b in range(j + 1):
                    if (a, b) == (0, 0) or (a, b) == (s, j):
                        continue
                    x = ga[b - YFLOOR]
                    if x:
                        y = gb[j - b - YFLOOR]
                        if y:
                            acc -= x * y
            g.rows[s][j - YFLOOR] = acc / 2
    return g


def binomial_power(base: BiSeries, alpha) -> BiSeries:
    """(1 + h)^alpha for h with zero constant term, by the binomial series."""
    _require_power_series(base, "binomial power")
    if base[0, 0] != 1:
        raise NonUnitConstant("binomial power needs constant term 1")
    h = base - 1
    out = BiSeries.constant(base.S, base.J)
    term = BiSeries.constant(base.S, base.J)
    for k in range(1, base.S + base.J + 1):
        term = term * h
        if not any(any(r) for r in term.rows):
            break
        out = out + term * binom(alpha, k)
    return out
