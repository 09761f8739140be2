"""Registry of exact checks driven by ``hierarchia verify``.

A check scans an index range and stops at the first failing index. Suites
group checks; ``run`` evaluates them in registry order and reports every
result plus the first failure.
"""

from __future__ import annotations

import contextlib
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from . import coefficients as cf
from . import identities as ids
from .diffpoly import Q, QBAR, DiffPoly, equivalent_mod_dx, gen, is_total_derivative
from .exact import I, catalan
from .hierarchy import (
    Hierarchy,
    delta_pi0_closed_form,
    delta_pi1_closed_form,
    flow_rhs,
    gp_flow_from_nls,
    gp_from_nls_matrix,
    hamiltonian,
    invert_lower_triangular,
    nls_from_gp_matrix,
    perturbed_row,
    perturbed_sigma,
    pi0_closed_form,
    pi1_closed_form,
    pi2_delta_closed_form,
    poisson_bracket,
    riccati_mismatches,
    sigma_nls,
    structural_form,
)
from .diffpoly import var_derivative
from .projections import (
    pi,
    pi0_recurrence_rhs,
    pi1_recurrence_rhs,
    pi2_recurrence_rhs,
    pi_tilde,
)
from . import symbols

__all__ = [
    "Check",
    "CheckResult",
    "SUITES",
    "checks",
    "run",
    "reference_hamiltonian",
    "injected",
    "parse_perturbation",
    "nmax_cap",
]

Index = Tuple[int, ...]


@dataclass(frozen=True)
class Check:
    name: str
    suite: str
    # yields (index, ok) in scan order; the first False is the reported failure
    scan: Callable[[int], Iterable[Tuple[Index, bool]]]


@dataclass
class CheckResult:
    name: str
    suite: str
    passed: bool
    cases: int
    failure: Optional[Index] = None

    def to_json(self) -> dict:
        out = {"check": self.name, "suite": self.suite,
               "status": "pass" if self.passed else "fail", "cases": self.cases}
        if self.failure is not None:
            out["first_failure"] = list(self.failure)
        return out


def nmax_cap(requested: int) -> int:
    """Honour HIERARCHIA_NMAX as an upper bound on symbolic indices."""
    cap = os.environ.get("HIERARCHIA_NMAX")
    if cap is None:
        return requested
    return min(requested, int(cap))


# -- reference Hamiltonians ---------------------------------------------------------------

def reference_hamiltonian(h: str, n: int) -> DiffPoly:
    """The first five Hamiltonian densities written out by hand.

    For GP n = 4 the gradient term is -6 q_x qbar_x: that makes the density
    H^NLS_4 - 6 H^NLS_2 + 6 H^NLS_0 - 2, a combination of conserved
    quantities. The commonly quoted +6 q_x qbar_x is not conserved.
    """
    q, qb = gen(Q), gen(QBAR)
    qx, qbx = gen(Q, 1), gen(QBAR, 1)
    qxx, qbxx = gen(Q, 2), gen(QBAR, 2)
    qbxxx = gen(QBAR, 3)
    nls = [
        q * qb,
        -I * q * qbx,
        qx * qbx + q ** 2 * qb ** 2,
        I * (q * qbxxx - 4 * q ** 2 * qb * qbx - qx * q * qb ** 2),
        qxx * qbxx - 6 * q ** 2 * qb * qbxx - 5 * q ** 2 * qbx ** 2 - 6 * q * qx * qb * qbx
        - q * qxx * qb ** 2 + 2 * q ** 3 * qb ** 3,
    ]
    if h == "nls":
        return nls[n]
    gp = [
        q * qb - 1,
        -I * q * qbx,
        qx * qbx + (q * qb - 1) ** 2,
        I * (q * qbxxx - 4 * q ** 2 * qb * qbx - qx * q * qb ** 2 + 4 * q * qbx),
        nls[4] - 6 * qx * qbx - 6 * q ** 2 * qb ** 2 + 6 * q * qb - 2,
    ]
    return gp[n]


# -- scans ------------------------------------------------------------------------------------

def _over(ns: Iterable[int], pred: Callable[[int], bool]) -> Iterator[Tuple[Index, bool]]:
    for n in ns:
        yield (n,), pred(n)


def _hamiltonian_scan(h: str):
    def scan(nmax):
        return _over(range(min(nmax, 4) + 1),
                     lambda n: equivalent_mod_dx(hamiltonian(h, n).density, reference_hamiltonian(h, n)))
    return scan


def _pi1_delta_matches(n: int) -> bool:
    return pi(var_derivative(pi_tilde(sigma_nls(n).poly, 2), QBAR), 1) == pi2_delta_closed_form(n)


def _delta_projections(n: int) -> bool:
    dsig = var_derivative(sigma_nls(n).poly, QBAR)
    return pi(dsig, 0) == delta_pi0_closed_form(n) and pi(dsig, 1) == delta_pi1_closed_form(n)


def _sig(n):
    return sigma_nls(n).poly


def _recurrence(which: int):
    def pred(n):
        nxt = _sig(n + 1)
        if which == 0:
            return pi(nxt, 0) == pi0_recurrence_rhs(_sig, n)
        if which == 1:
            return pi(nxt, 1) == pi1_recurrence_rhs(_sig, n)
        return pi_tilde(nxt, 2) == pi2_recurrence_rhs(_sig, n)
    return pred


def _pairs(rows: Iterable[int], cols: Callable[[int], Iterable[int]], pred) -> Iterator[Tuple[Index, bool]]:
    for n in rows:
        for j in cols(n):
            yield (n, j), pred(n, j)


def _genfun_scan(key: str):
    def scan(nmax):
        rep = ids.verify_identity(key)
        if rep.ok:
            yield (), True
        else:
            yield (rep.mismatch["s"], rep.mismatch["j"]), False
    return scan


def _finite_scan(key: str, outer: int = 14):
    def scan(nmax):
        bad = ids.finite_first_failure(key, max(outer, nmax))
        yield ((), True) if bad is None else ((bad[0], bad[1]), False)
    return scan


def _structural(h: str):
    def pred(n):
        try:
            structural_form(h, n)
        except Exception:
            return False
        return True
    return pred


def _equation_on_the_nose(nmax):
    q, qb = gen(Q), gen(QBAR)
    yield ("nls", 2), flow_rhs("nls", 2) == 2 * q ** 2 * qb - gen(Q, 2)
    yield ("gp", 2), flow_rhs("gp", 2) == -2 * q + 2 * q ** 2 * qb - gen(Q, 2)


def _poisson_scan(nmax):
    top = min(nmax, 6)
    for n in range(top + 1):
        for m in range(n + 1, top + 1):
            F, G = hamiltonian("nls", n), hamiltonian("nls", m)
            yield (n, m), is_total_derivative(poisson_bracket(F, G))


def _renorm_roundtrip(nmax):
    rows, _ = gp_from_nls_matrix(nmax)
    inv, back = nls_from_gp_matrix(nmax)
    for i in range(nmax + 1):
        ok = all(sum((inv[i][k] * rows[k][c] for k in range(nmax + 1)), Fraction(0))
                 == (1 if i == c else 0) for c in range(nmax + 1))
        yield (i,), ok
    # constants of the inverse map alternate: (-1)^(m+1) C_m at index 2m+1
    for m in range((nmax - 1) // 2 + 1):
        yield (2 * m + 1,), back[2 * m + 1] == cf.parity_sign(m + 1) * catalan(m)


def _catalan_values(nmax):
    rep = ids.verify_identity("catalan-gf", S=32, J=0)
    yield ((), True) if rep.ok else ((rep.mismatch["s"],), False)


def _riccati(nmax):
    bad = riccati_mismatches(nmax)
    yield ((bad[0],), False) if bad else ((), True)


def _build() -> List[Check]:
    out: List[Check] = []

    def add(name, suite, scan):
        out.append(Check(name, suite, scan))

    for h in ("nls", "gp"):
        add(f"{h}-reference-hamiltonians", "hamiltonian", _hamiltonian_scan(h))
    add("nls-realness", "hamiltonian",
        lambda nmax: _over(range(nmax + 1), lambda n: hamiltonian("nls", n).is_real()))
    add("gp-realness", "hamiltonian",
        lambda nmax: _over(range(min(nmax, 9) + 1), lambda n: hamiltonian("gp", n).is_real()))
    add("riccati", "recurrence", _riccati)
    for k in range(3):
        add(f"pi{k}-recurrence", "recurrence",
            (lambda k: lambda nmax: _over(range(1, nmax), _recurrence(k)))(k))

    add("pi0-closed-form", "closed-form",
        lambda nmax: _over(range(1, nmax + 1), lambda n: pi(_sig(n), 0) == pi0_closed_form(n)))
    add("pi1-closed-form", "closed-form",
        lambda nmax: _over(range(1, nmax + 1), lambda n: pi(_sig(n), 1) == pi1_closed_form(n)))
    add("pi1-delta-pi2-closed-form", "closed-form",
        lambda nmax: _over(range(1, nmax + 1), _pi1_delta_matches))
    add("delta-projections-closed-form", "closed-form",
        lambda nmax: _over(range(1, nmax + 1), _delta_projections))

    add("D-vs-oracle", "coeff", lambda nmax: _pairs(
        range(2, max(nmax, 30) + 1), lambda n: range(n // 2),
        lambda n, j: cf.coeff("D", n, j) == cf.coeff_oracle("D", n, j)))
    add("E-vs-oracle", "coeff", lambda nmax: _pairs(
        range(2, max(nmax, 30) + 1), lambda n: range(max(n // 2 - 1, 0)),
        lambda n, j: cf.coeff("E", n, j) == cf.coeff_oracle("E", n, j)))
    add("K-two-forms", "coeff", lambda nmax: _pairs(
        range(0, max(nmax, 30) + 1), lambda n: range(16), cf.k_identity_check))
    for tag in cf.CONVOLUTIONS:
        add(f"{tag}-convolution", "coeff", (lambda tag: lambda nmax: _pairs(
            range(1, max(nmax, 10) + 1), lambda m: cf.convolution_index_range(tag, m),
            lambda m, j: cf.convolution_identity_check(tag, m, j)))(tag))

    add("catalan-values", "genfun", _catalan_values)
    for key in ids.REGISTRY:
        add(key, "genfun", _genfun_scan(key))
    for key in ids.FINITE_REGISTRY:
        add(key, "genfun", _finite_scan(key))

    add("nls-structural", "structural",
        lambda nmax: _over(range(0, nmax + 1), _structural("nls")))
    add("gp-structural", "structural",
        lambda nmax: _over(range(1, min(nmax, 8) + 1), _structural("gp")))
    add("n2-equations", "structural", _equation_on_the_nose)

    add("nls-poisson", "poisson", _poisson_scan)

    add("symbol-even", "symbols", lambda nmax: _over(range(1, min(nmax, 10) + 1), _symbol_even))
    add("symbol-odd", "symbols", lambda nmax: _over(range(0, min(nmax, 10) + 1), _symbol_odd))

    add("renormalization-inverse", "renormalization", _renorm_roundtrip)
    add("gp-flows-from-nls", "renormalization",
        lambda nmax: _over(range(0, nmax + 1), lambda n: gp_flow_from_nls(n) == flow_rhs("gp", n)))
    return out


# -- perturbations for negative controls -------------------------------------------------------

_SYMBOL_STATE: Dict[str, object] = {}


def _symbol_even(m):
    return symbols.symbol_check_even(m, _SYMBOL_STATE.get("V"))


def _symbol_odd(m):
    return symbols.symbol_check_odd(m, drop_first=bool(_SYMBOL_STATE.get("drop")))


def parse_perturbation(text: str) -> Tuple[str, tuple]:
    """``coeff:FAMILY:n:j[:delta]``, ``genfun:KEY:s:j[:delta]``, ``sigma:n``,
    ``renorm:n:k[:delta]``, ``symbol:V:i:j`` or ``symbol:drop-first``."""
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind == "coeff" and len(parts) in (4, 5):
            return kind, (parts[1], int(parts[2]), int(parts[3]),
                          Fraction(parts[4]) if len(parts) == 5 else Fraction(1))
        if kind == "genfun" and len(parts) in (4, 5):
            if parts[1] not in ids.REGISTRY:
                raise ValueError(f"unknown identity {parts[1]!r}")
            return kind, (parts[1], int(parts[2]), int(parts[3]),
                          Fraction(parts[4]) if len(parts) == 5 else Fraction(1))
        if kind == "sigma" and len(parts) == 2:
            return kind, (int(parts[1]),)
        if kind == "renorm" and len(parts) in (3, 4):
            return kind, (int(parts[1]), int(parts[2]),
                          Fraction(parts[3]) if len(parts) == 4 else Fraction(1))
        if kind == "symbol" and parts[1:] == ["drop-first"]:
            return kind, ("drop",)
        if kind == "symbol" and len(parts) == 4 and parts[1] == "V":
            return kind, ("V", int(parts[2]), int(parts[3]))
    except (ValueError, IndexError) as exc:
        raise ValueError(f"bad perturbation {text!r}: {exc}") from None
    raise ValueError(f"bad perturbation {text!r}")


@contextlib.contextmanager
def injected(spec: Optional[Tuple[str, tuple]], warm: int = 0) -> Iterator[None]:
    if spec is None:
        yield
        return
    kind, args = spec
    if kind == "coeff":
        with cf.perturbed(*args):
            yield
    elif kind == "genfun":
        with ids.perturbed_rhs(*args):
            yield
    elif kind == "sigma":
        (n,) = args
        with perturbed_sigma(n, gen(Q) ** n * gen(QBAR) ** n, warm=warm):
            yield
    elif kind == "renorm":
        with perturbed_row(*args):
            yield
    elif kind == "symbol":
        key = "drop" if args[0] == "drop" else "V"
        _SYMBOL_STATE[key] = True if key == "drop" else (args[1], args[2], Fraction(1))
        try:
            yield
        finally:
            _SYMBOL_STATE.pop(key, None)
    else:
        raise ValueError(f"unknown perturbation kind {kind!r}")


# -- driver ----------------------------------------------------------------------------------

_REGISTRY = _build()
SUITES = tuple(dict.fromkeys(c.suite for c in _REGISTRY))


def checks(suite: str = "all", name: Optional[str] = None) -> List[Check]:
    if suite != "all" and suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}")
    sel = [c for c in _REGISTRY if suite == "all" or c.suite == suite]
    if name is not None:
        sel = [c for c in sel if c.name == name]
        if not sel:
            raise KeyError(f"unknown check {name!r}")
    return sel


def run_check(check: Check, nmax: int) -> CheckResult:
    cases = 0
    for index, ok in check.scan(nmax):
        cases += 1
        if not ok:
            return CheckResult(check.name, check.suite, False, cases, tuple(index))
    return CheckResult(check.name, check.suite, True, cases)


def run(suite: str = "all", nmax: int = 12, name: Optional[str] = None,
        perturbation: Optional[Tuple[str, tuple]] = None) -> List[CheckResult]:
    nmax = nmax_cap(nmax)
    with injected(perturbation, warm=nmax + 2):
        return [run_check(c, nmax) for c in checks(suite, name)]


def first_failure(results: Sequence[CheckResult]) -> Optional[CheckResult]:
    return next((r for r in results if not r.passed), None)
