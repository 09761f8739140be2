"""Differential polynomials in the generators q, q-bar (NLS/GP) and u (KdV).

A monomial is keyed by a sorted tuple of ``(variable, order, power)`` triples;
the empty tuple is the constant monomial. A :class:`DiffPoly` maps keys to
nonzero :class:`~hierarchia.exact.GaussianRational` coefficients.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Dict, Iterable, Iterator, Mapping, Tuple

from .exact import ONE, ZERO, GaussianRational, format_rational

Q = "q"
QBAR = "qbar"
U = "u"
VARIABLES = (Q, QBAR, U)

Factor = Tuple[str, int, int]
Key = Tuple[Factor, ...]

__all__ = [
    "Q",
    "QBAR",
    "U",
    "DiffPoly",
    "NotDivisible",
    "d_x",
    "divide_by_q",
    "var_derivative",
    "is_total_derivative",
    "equivalent_mod_dx",
    "conjugate",
    "gen",
    "const",
    "compile_numeric",
]


class NotDivisible(ArithmeticError):
    """A monomial lacked the zeroth-order q factor required for division."""


_CONJ = {Q: QBAR, QBAR: Q, U: U}


@lru_cache(maxsize=1 << 20)
def _merge(a: Key, b: Key) -> Key:
    if not a:
        return b
    if not b:
        return a
    acc: Dict[Tuple[str, int], int] = {}
    for v, o, p in a:
        acc[(v, o)] = p
    for v, o, p in b:
        acc[(v, o)] = acc.get((v, o), 0) + p
    return tuple(sorted((v, o, p) for (v, o), p in acc.items()))


def _bump(key: Key, v: str, o: int, dv: str, do: int) -> Key:
    """Remove one (v, o) factor and add one (dv, do) factor."""
    acc = {(a, b): p for a, b, p in key}
    acc[(v, o)] -= 1
    if acc[(v, o)] == 0:
        del acc[(v, o)]
    acc[(dv, do)] = acc.get((dv, do), 0) + 1
    return tuple(sorted((a, b, p) for (a, b), p in acc.items()))


def _remove(key: Key, v: str, o: int) -> Key:
    out = []
    for a, b, p in key:
        if a == v and b == o:
            if p > 1:
                out.append((a, b, p - 1))
        else:
            out.append((a, b, p))
    return tuple(out)


class DiffPoly:
    """Immutable canonical differential polynomial."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Key, object] | None = None):
        clean: Dict[Key, GaussianRational] = {}
        if terms:
            for k, c in terms.items():
                c = GaussianRational.coerce(c)
                if c:
                    clean[tuple(k)] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: Dict[Key, GaussianRational]) -> "DiffPoly":
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    # -- container protocol -------------------------------------------------
    @property
    def terms(self) -> Dict[Key, GaussianRational]:
        return dict(self._terms)

    def items(self) -> Iterator[Tuple[Key, GaussianRational]]:
        return iter(sorted(self._terms.items()))

    def __iter__(self):
        return iter(sorted(self._terms))

    def __len__(self):
        return len(self._terms)

    def coeff(self, key: Iterable[Factor]) -> GaussianRational:
        return self._terms.get(tuple(key), ZERO)

    def constant_term(self) -> GaussianRational:
        return self._terms.get((), ZERO)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, DiffPoly):
            return self._terms == other._terms
        if isinstance(other, (int, GaussianRational)):
            return self == const(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- ring operations ----------------------------------------------------
    def __add__(self, other):
        other = _lift(other)
        if other is None:
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            s = out.get(k)
            s = c if s is None else s + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return DiffPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly._raw({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        other = _lift(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        if isinstance(other, DiffPoly):
            out: Dict[Key, GaussianRational] = {}
            for k1, c1 in self._terms.items():
                for k2, c2 in other._terms.items():
                    k = _merge(k1, k2)
                    c = c1 * c2
                    s = out.get(k)
                    out[k] = c if s is None else s + c
            return DiffPoly._raw({k: c for k, c in out.items() if c})
        try:
            c = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        if not c:
            return DiffPoly()
        return DiffPoly._raw({k: v * c for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = const(1)
        for _ in range(k):
            out = out * self
        return out

    # -- structure ----------------------------------------------------------
    def map_terms(self, fn: Callable[[Key, GaussianRational], bool]) -> "DiffPoly":
        """Keep the monomials for which ``fn(key, coeff)`` is true."""
        return DiffPoly._raw({k: c for k, c in self._terms.items() if fn(k, c)})

    def variables(self) -> set:
        return {v for k in self._terms for v, _, _ in k}

    def degree(self) -> int:
        return max((sum(p for _, _, p in k) for k in self._terms), default=0)

    # -- output -------------------------------------------------------------
    def __repr__(self):
        return f"DiffPoly({self.to_text()})"

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for k, c in self.items():
            mono = "*".join(_text_factor(v, o, p) for v, o, p in k)
            parts.append(_join_coeff_text(c, mono))
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def to_latex(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for k, c in self.items():
            mono = ""
            for v, o, p in k:
                f = _latex_factor(v, o, p)
                if mono and mono[-1].isalnum() and f[0].isalpha():
                    mono += " "
                mono += f
            pieces.append(_latex_coeff(c, mono))
        out = pieces[0]
        for p in pieces[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def to_json(self) -> list:
        return [
            {"coeff": c.to_json(), "factors": [[v, o, p] for v, o, p in k]}
            for k, c in self.items()
        ]

    @staticmethod
    def from_json(data: list) -> "DiffPoly":
        terms = {}
        for entry in data:
            key = tuple(sorted((v, int(o), int(p)) for v, o, p in entry["factors"]))
            terms[key] = GaussianRational.from_json(entry["coeff"])
        return DiffPoly(terms)


def _lift(x):
    if isinstance(x, DiffPoly):
        return x
    try:
        return const(x)
    except TypeError:
        return None


def const(c) -> DiffPoly:
    return DiffPoly({(): GaussianRational.coerce(c)})


def gen(var: str, order: int = 0, power: int = 1) -> DiffPoly:
    """The monomial (d_x^order var)^power with unit coefficient."""
    if var not in VARIABLES:
        raise ValueError(f"unknown generator {var!r}")
    if order < 0 or power < 0:
        raise ValueError("order and power must be nonnegative")
    if power == 0:
        return const(1)
    return DiffPoly._raw({((var, order, power),): ONE})


def _text_factor(v, o, p):
    name = {Q: "q", QBAR: "qbar", U: "u"}[v]
    if o:
        name += "_" + "x" * o if o <= 3 else f"_{o}x"
    return name if p == 1 else f"{name}^{p}"


def _join_coeff_text(c: GaussianRational, mono: str) -> str:
    if not mono:
        return str(c) if c.im == 0 or c.re == 0 else f"({c})"
    if c == ONE:
        return mono
    if c == -ONE:
        return "-" + mono
    if c.im == 0:
        return f"{format_rational(c.re)}*{mono}"
    if c.re == 0:
        return f"{format_rational(c.im)}i*{mono}"
    return f"({c})*{mono}"


def _latex_factor(v, o, p):
    base = {Q: "q", QBAR: r"\bar q", U: "u"}[v]
    if o == 0:
        s = base
    elif o <= 3:
        s = base + "_{" + "x" * o + "}"
    else:
        s = rf"\partial_x^{{{o}}} {base}"
        if p != 1:
            s = "(" + s + ")"
    return s if p == 1 else f"{s}^{p}"


def _latex_rational(r) -> str:
    s = format_rational(abs(r))
    if "/" in s:
        n, d = s.split("/")
        s = rf"\frac{{{n}}}{{{d}}}"
    return ("-" if r < 0 else "") + s


def _latex_coeff(c: GaussianRational, mono: str) -> str:
    if c.im == 0:
        r = c.re
        if not mono:
            return _latex_rational(r)
        if r == 1:
            return mono
        if r == -1:
            return "-" + mono
        return _latex_rational(r) + mono
    if c.re == 0:
        r = c.im
        unit = "i"
        if r == 1:
            return unit + mono
        if r == -1:
            return "-" + unit + mono
        return _latex_rational(r) + unit + mono
    sign = "+" if c.im > 0 else "-"
    body = f"({_latex_rational(c.re)}{sign}{_latex_rational(abs(c.im))}i)"
    return body + mono


# -- derivations ---------------------------------------------------------------

def d_x(P: DiffPoly) -> DiffPoly:
    """Total x-derivative (Leibniz rule)."""
    out: Dict[Key, GaussianRational] = {}
    for k, c in P._terms.items():
        for v, o, p in k:
            nk = _bump(k, v, o, v, o + 1)
            nc = c * p
            s = out.get(nk)
            out[nk] = nc if s is None else s + nc
    return DiffPoly._raw({k: c for k, c in out.items() if c})


def d_x_n(P: DiffPoly, n: int) -> DiffPoly:
    for _ in range(n):
        P = d_x(P)
    return P


def divide_by_q(P: DiffPoly) -> DiffPoly:
    """Remove one undifferentiated q from every monomial."""
    out = {}
    for k, c in P._terms.items():
        if not any(v == Q and o == 0 for v, o, _ in k):
            raise NotDivisible(f"monomial {k!r} has no q factor")
        out[_remove(k, Q, 0)] = c
    return DiffPoly._raw(out)


def conjugate(P: DiffPoly) -> DiffPoly:
    """Swap q and q-bar and conjugate coefficients."""
    out = {}
    for k, c in P._terms.items():
        nk = tuple(sorted((_CONJ[v], o, p) for v, o, p in k))
        out[nk] = c.conjugate()
    return DiffPoly._raw(out)


def partial(P: DiffPoly, var: str, order: int) -> DiffPoly:
    """Formal partial derivative with respect to the symbol d_x^order var."""
    out = {}
    for k, c in P._terms.items():
        for v, o, p in k:
            if v == var and o == order:
                out[_remove(k, v, o)] = c * p
                break
    return DiffPoly._raw(out)


def var_derivative(P: DiffPoly, var: str) -> DiffPoly:
    """Euler operator: sum over k of (-d_x)^k applied to the partial in d_x^k var."""
    orders = sorted({o for k in P._terms for v, o, _ in k if v == var})
    out = DiffPoly()
    for o in orders:
        term = partial(P, var, o)
        term = d_x_n(term, o)
        out = out + (term if o % 2 == 0 else -term)
    return out


def is_total_derivative(P: DiffPoly) -> bool:
    """True iff P is an exact x-derivative with no constant term."""
    if P.constant_term():
        return False
    return all(var_derivative(P, v).is_zero() for v in P.variables())


def equivalent_mod_dx(P: DiffPoly, R: DiffPoly) -> bool:
    return is_total_derivative(P - R)


def total_derivative_count(key: Key) -> int:
    return sum(o * p for _, o, p in key)


def derivative_factor_count(key: Key) -> int:
    return sum(p for _, o, p in key if o >= 1)


def compile_numeric(P: DiffPoly):
    """Return ``f(fields) -> array`` evaluating P on sampled generator derivatives.

    ``fields`` maps ``(variable, order)`` to a numpy array (or scalar).
    """
    terms = [(complex(c), k) for k, c in P.items()]

    def evaluate(fields):
        total = 0j
        for c, k in terms:
            val = c
            for v, o, p in k:
                f = fields[(v, o)]
                val = val * (f if p == 1 else f ** p)
            total = total + val
        return total

    evaluate.required = sorted({(v, o) for _, k in terms for v, o, _ in k})
    evaluate.max_order = max((o for _, k in terms for _, o, _ in k), default=0)
    return evaluate
