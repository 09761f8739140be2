"""Closed-form coefficient families and their independent recurrence oracles.

Families (indexed by ``(n, j)``):

``C``   Catalan numbers, ``C_n`` at ``j = 0``.
``D``   coefficients of the q-bar derivative terms in the one-derivative part of sigma_n.
``E``   coefficients of the q derivative terms in the same part.
``Ft``  coefficients of the q-bar terms of pi_1 delta pi~_2 sigma_n.
``Gt``  coefficients of the q terms of pi_1 delta pi~_2 sigma_n.
``J``   q-bar coefficients of pi_1 delta sigma_n.
``K``   q coefficients of pi_1 delta sigma_n.

``coeff`` returns zero outside each family's index range. ``coeff_raw``
evaluates the bare formula wherever it makes sense, which is what the
generating-function and convolution identities need.
"""

from __future__ import annotations

import contextlib
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Tuple

from .exact import binom, catalan

FAMILIES = ("C", "D", "E", "Ft", "Gt", "J", "K")
_ALIASES = {"F": "Ft", "G": "Gt", "FT": "Ft", "GT": "Gt"}

HALF = Fraction(1, 2)

__all__ = [
    "FAMILIES",
    "coeff",
    "coeff_raw",
    "coeff_oracle",
    "in_range",
    "parity_sign",
    "k1_value",
    "k2_value",
    "k_identity_check",
    "convolution_identity_check",
    "convolution_lhs",
    "convolution_rhs",
    "CONVOLUTIONS",
    "perturbed",
    "table",
]


def _family(name: str) -> str:
    key = _ALIASES.get(name.upper(), name)
    if key not in FAMILIES:
        key = {f.upper(): f for f in FAMILIES}.get(name.upper(), name)
    if key not in FAMILIES:
        raise KeyError(f"unknown coefficient family {name!r}")
    return key


def parity_sign(k: int) -> int:
    """(-1)^k as an int, also for negative k."""
    return -1 if k % 2 else 1


def _catalan_combo(l: int) -> int:
    return catalan(l + 1) - 2 * catalan(l)


def in_range(family: str, n: int, j: int) -> bool:
    """Index ranges on which each family appears in the closed forms."""
    f = _family(family)
    if f == "C":
        return n >= 0 and j == 0
    if f == "D":
        return 0 <= j <= n // 2 - 1
    if f == "E":
        return 0 <= j <= n // 2 - 2
    if f == "Ft":
        return 0 <= j <= (n - 1) // 2 - 2
    if f == "Gt":
        return 0 <= j <= (n - 1) // 2 - 1
    # J and K are defined by coefficient extraction, so every j >= 0 counts.
    return n >= 0 and j >= 0


# -- bare formulas -------------------------------------------------------------

def _d_raw(n: int, j: int) -> Fraction:
    return Fraction(4) ** j * binom(Fraction(n, 2) - 1, j)


def _e_raw(n: int, j: int) -> Fraction:
    a = Fraction(n - 1, 2) - 1
    return sum(
        (parity_sign(l) * _catalan_combo(l) * Fraction(4) ** (j - l) * binom(a, j - l)
         for l in range(j + 1)),
        Fraction(0),
    )


def _ft_raw(n: int, j: int) -> Fraction:
    if n % 2 == 0:
        return Fraction(0)
    m = (n - 1) // 2
    return -(8 * m - 8 * j - 6) * Fraction(4) ** j * binom(m - HALF, j)


def _gt_raw(n: int, j: int) -> Fraction:
    # Unified form (valid for both parities); the separately stated even/odd
    # variants disagree with the symbolic projections.
    M = (n - 1) // 2
    s = sum(
        (catalan(k) * Fraction(4) ** (j - 1 - k) * binom(M - HALF - k, j - 1 - k)
         for k in range(j)),
        Fraction(0),
    )
    out = parity_sign(n + 1) * 4 * (M - j) * s
    if n % 2 == 1 and j >= 1:
        out += 2 * Fraction(4) ** (j - 1) * binom(Fraction(n, 2) - 1, j - 1)
    return out


def _j_raw(n: int, j: int) -> Fraction:
    if n % 2 == 0:
        return Fraction(0)
    return 2 * Fraction(4) ** j * binom(Fraction(n - 2, 2), j)


def k2_value(n: int, j: int) -> Fraction:
    """K by coefficient extraction from powers of (1 + 4u)."""
    if j < 0:
        return Fraction(0)
    if n % 2 == 0:
        return Fraction(4) ** j * binom(Fraction(n - 1, 2), j)
    a = Fraction(n - 2, 2)
    out = -Fraction(4) ** j * binom(a, j)
    if j >= 1:
        out -= 2 * Fraction(4) ** (j - 1) * binom(a, j - 1)
    return out


def k1_value(n: int, j: int) -> Fraction:
    """K as (-1)^n D_{n+1,j} + 2 [n odd] E_{n,j-2}, using the bare D, E formulas."""
    if j < 0:
        return Fraction(0)
    out = parity_sign(n) * _d_raw(n + 1, j)
    if n % 2 == 1 and j >= 2:
        out += 2 * _e_raw(n, j - 2)
    return out


_RAW = {
    "C": lambda n, j: Fraction(catalan(n)) if (j == 0 and n >= 0) else Fraction(0),
    "D": _d_raw,
    "E": _e_raw,
    "Ft": _ft_raw,
    "Gt": _gt_raw,
    "J": _j_raw,
    "K": k2_value,
}

# (family, n, j) -> additive offset; used only for negative-control runs.
_PERTURBATIONS: Dict[Tuple[str, int, int], Fraction] = {}


@contextlib.contextmanager
def perturbed(family: str, n: int, j: int, delta=1) -> Iterator[None]:
    """Temporarily add ``delta`` to one closed-form coefficient."""
    key = (_family(family), n, j)
    _PERTURBATIONS[key] = _PERTURBATIONS.get(key, Fraction(0)) + Fraction(delta)
    try:
        yield
    finally:
        _PERTURBATIONS[key] -= Fraction(delta)
        if not _PERTURBATIONS[key]:
            del _PERTURBATIONS[key]


def coeff_raw(family: str, n: int, j: int) -> Fraction:
    """Bare closed-form value, zero only for negative j."""
    f = _family(family)
    if j < 0:
        return Fraction(0)
    val = _RAW[f](n, j)
    if _PERTURBATIONS:
        val += _PERTURBATIONS.get((f, n, j), 0)
    return val


def coeff(family: str, n: int, j: int) -> Fraction:
    """Closed-form coefficient, zero outside the family's index range."""
    f = _family(family)
    if not in_range(f, n, j):
        return Fraction(0)
    return coeff_raw(f, n, j)


# -- recurrence oracles ----------------------------------------------------------

@lru_cache(maxsize=None)
def _d_oracle(n: int, j: int) -> Fraction:
    if n < 2 or not 0 <= j <= n // 2 - 1:
        return Fraction(0)
    if n == 2:
        return Fraction(1)
    p = n - 1
    out = 2 * sum((catalan(k) * _d_oracle(p - 2 * k - 1, j - 1 - k) for k in range(j)), Fraction(0))
    if 2 * j == p - 1:
        out += catalan((p - 1) // 2) * Fraction(p + 1, 2)
    else:
        out += _d_oracle(p, j)
    return out


@lru_cache(maxsize=None)
def _e_oracle(n: int, j: int) -> Fraction:
    if n < 4 or not 0 <= j <= n // 2 - 2:
        return Fraction(0)
    p = n - 1
    out = 2 * sum((catalan(k) * _e_oracle(p - 2 * k - 1, j - 1 - k) for k in range(j)), Fraction(0))
    if 2 * j == p - 3:
        out -= catalan((p - 1) // 2) * Fraction(p - 1, 2)
    else:
        out += _e_oracle(p, j)
    return out


def coeff_oracle(family: str, n: int, j: int) -> Fraction:
    """D or E computed only from their defining recurrences."""
    f = _family(family)
    if f == "D":
        return _d_oracle(n, j)
    if f == "E":
        return _e_oracle(n, j)
    raise KeyError("recurrence oracles exist for D and E only")


def k_identity_check(n: int, j: int) -> bool:
    return k1_value(n, j) == k2_value(n, j)


# -- convolution identities ----------------------------------------------------------

CONVOLUTIONS = ("J-odd", "K-odd", "K-even")


def convolution_lhs(tag: str, m: int, j: int) -> Fraction:
    if tag == "J-odd":
        return sum(
            (binom(m - HALF, m - k) * Fraction(-4) ** (m - k) * coeff_raw("J", 2 * k + 1, k - 1 - j)
             for k in range(j + 1, m + 1)),
            Fraction(0),
        )
    if tag == "K-odd":
        return -sum(
            (binom(m - HALF, m - k) * Fraction(-4) ** (m - k) * coeff_raw("K", 2 * k + 1, k - j)
             for k in range(j, m + 1)),
            Fraction(0),
        )
    if tag == "K-even":
        return sum(
            (binom(m - 1, m - k) * Fraction(-4) ** (m - k) * coeff_raw("K", 2 * k, k - 1 - j)
             for k in range(j + 1, m + 1)),
            Fraction(0),
        )
    raise KeyError(f"unknown convolution identity {tag!r}")


def convolution_rhs(tag: str, m: int, j: int) -> Fraction:
    if tag == "J-odd":
        return Fraction(2 if j == m - 1 else 0)
    if tag == "K-odd":
        return Fraction((1 if j == m else 0) + (2 if j == m - 1 else 0))
    if tag == "K-even":
        return Fraction(4) ** (m - 1 - j) * binom(HALF, m - 1 - j)
    raise KeyError(f"unknown convolution identity {tag!r}")


def convolution_index_range(tag: str, m: int) -> range:
    if tag == "J-odd":
        return range(1, m)
    if tag == "K-odd":
        return range(1, m + 1)
    return range(0, m)


def convolution_identity_check(tag: str, m: int, j: int) -> bool:
    return convolution_lhs(tag, m, j) == convolution_rhs(tag, m, j)


def table(family: str, n_values, j_values, raw: bool = False) -> List[List[Fraction]]:
    fn = coeff_raw if raw else coeff
    return [[fn(family, n, j) for j in j_values] for n in n_values]
