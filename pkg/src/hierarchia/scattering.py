"""Direct scattering for the Zakharov-Shabat problem with zero and nonzero boundary data.

Only the first quadrant of the spectral surface is used: ``z = sqrt(lambda^2 - 1)``
with the principal branch (``z = lambda`` for zero boundary conditions) and
``zeta = lambda + z``.

The modified Jost columns are integrated in the stable direction: Psi^-_1 from
the left end and Psi^+_2 from the right end. With Im z > 0 the parasitic mode
decays in that direction, so the tracked column stays bounded.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from scipy.integrate import quad, solve_ivp

from .diffpoly import Q, QBAR, compile_numeric
from .hierarchy import Hamiltonian, Hierarchy, hamiltonian

__all__ = [
    "SpectralPoint",
    "Potential",
    "ScatterState",
    "NonConvergence",
    "BoundaryNotSettled",
    "PoleAtZeta",
    "ZeroDenominator",
    "dark_soliton",
    "sech_potential",
    "constant_potential",
    "dark_soliton_zetas",
    "jost_reference",
    "integrate_jost",
    "transmission",
    "transmission_dark",
    "hamiltonian_numeric",
    "expansion_check",
    "expansion_sweep",
    "ExpansionReport",
    "first_quadrant_samples",
]


class NonConvergence(RuntimeError):
    """The adaptive integrator gave up."""


class BoundaryNotSettled(ValueError):
    """The potential has not reached its boundary value at a box end."""


class PoleAtZeta(ZeroDivisionError):
    """zeta coincides with zeta_+ or zeta_- in the closed-form Jost solutions."""


class ZeroDenominator(ZeroDivisionError):
    """z = 0 makes the transmission normalization vanish."""


# -- spectral parameters -----------------------------------------------------------

@dataclass(frozen=True)
class SpectralPoint:
    lam: complex
    z: complex
    zeta: complex
    zbc: bool = False

    @classmethod
    def from_lambda(cls, lam: complex, zbc: bool = False) -> "SpectralPoint":
        lam = complex(lam)
        if zbc:
            return cls(lam, lam, 2 * lam, True)
        z = cmath.sqrt(lam * lam - 1)
        if z.imag < 0 or (z.imag == 0 and z.real < 0):
            z = -z
        p = cls(lam, z, lam + z, False)
        p.check()
        return p

    def check(self, tol: float = 1e-12) -> None:
        if self.zbc:
            return
        scale = max(1.0, abs(self.lam) ** 2)
        if abs(self.lam ** 2 - self.z ** 2 - 1) > tol * scale:
            raise ValueError("lambda^2 - z^2 != 1")
        if abs(self.zeta * (self.lam - self.z) - 1) > tol * scale:
            raise ValueError("zeta^-1 != lambda - z")


def first_quadrant_samples(count: int, min_im_z: float = 1.0,
                           radii=(1.5, 6.0), angles=(0.35, 1.5)) -> List[SpectralPoint]:
    """Deterministic lambda grid in the open first quadrant with Im z >= min_im_z."""
    pts = []
    side = max(2, int(math.ceil(math.sqrt(4 * count))))
    for r in np.linspace(radii[0], radii[1], side):
        for th in np.linspace(angles[0], angles[1], side):
            p = SpectralPoint.from_lambda(r * cmath.exp(1j * th))
            if p.z.imag >= min_im_z:
                pts.append(p)
    if len(pts) < count:
        raise ValueError("sampling box too small for the requested count")
    step = len(pts) / count
    return [pts[int(i * step)] for i in range(count)]


# -- potentials ----------------------------------------------------------------------

_X = sp.Symbol("x", real=True)


class Potential:
    """Smooth potential given by a sympy expression in the real variable x."""

    def __init__(self, expr, q_minus: complex = 0, q_plus: complex = 0,
                 box: float = 40.0, name: str = "custom"):
        self.expr = sp.sympify(expr)
        self.q_minus = complex(q_minus)
        self.q_plus = complex(q_plus)
        self.box = float(box)
        self.name = name
        self._derivs: Dict[int, Callable] = {}
        if self.zbc != (self.q_plus == 0):
            raise ValueError("both boundary values must vanish or both be unimodular")
        if not self.zbc and (abs(abs(self.q_minus) - 1) > 1e-12 or abs(abs(self.q_plus) - 1) > 1e-12):
            raise ValueError("nonzero boundary values must lie on the unit circle")

    @property
    def zbc(self) -> bool:
        return self.q_minus == 0

    def derivative(self, order: int) -> Callable:
        if order not in self._derivs:
            f = sp.lambdify(_X, sp.diff(self.expr, _X, order), "numpy")
            self._derivs[order] = lambda x, f=f: np.asarray(f(np.asarray(x, dtype=float)), dtype=complex) \
                * np.ones_like(np.asarray(x, dtype=float))
        return self._derivs[order]

    def __call__(self, x):
        return self.derivative(0)(x)

    def fields(self, x, max_order: int) -> Dict[Tuple[str, int], np.ndarray]:
        out = {}
        for k in range(max_order + 1):
            v = self.derivative(k)(x)
            out[(Q, k)] = v
            out[(QBAR, k)] = np.conj(v)
        return out

    def settled(self, tol: float = 1e-12) -> bool:
        lo, hi = self(-self.box), self(self.box)
        return abs(lo - self.q_minus) < tol and abs(hi - self.q_plus) < tol


def dark_soliton_zetas(q_minus: complex, q_plus: complex) -> Tuple[complex, complex]:
    """(zeta_+, zeta_-) with zeta_+^2 = q_+/q_-, zeta_+ in e^{i[0, pi)}, zeta_- = conj(zeta_+)."""
    zp = cmath.sqrt(complex(q_plus) / complex(q_minus))
    ang = cmath.phase(zp)
    if ang < 0 or ang >= math.pi:
        zp = -zp
    if abs(zp.imag) < 1e-15:
        zp = complex(abs(zp.real) if zp.real > 0 else zp.real, 0.0)
    return zp, zp.conjugate()


def dark_soliton(q_minus: complex, q_plus: complex, box: float = 40.0) -> Potential:
    qm, qp = complex(q_minus), complex(q_plus)
    zp, _ = dark_soliton_zetas(qm, qp)
    a, b = zp.real, zp.imag
    expr = sp.nsimplify(0)
    pref = sp.Float(qp.real, 17) + sp.I * sp.Float(qp.imag, 17)
    conj_zp = sp.Float(a, 17) - sp.I * sp.Float(b, 17)
    if b == 0:
        expr = pref * conj_zp * sp.Float(a, 17)
    else:
        expr = pref * conj_zp * (sp.Float(a, 17) + sp.I * sp.Float(b, 17) * sp.tanh(sp.Float(b, 17) * _X))
    return Potential(expr, qm, qp, box, name=f"dark({qm},{qp})")


def sech_potential(amplitude: float = 1.0, velocity: float = 0.0, box: float = 32.0) -> Potential:
    """amplitude * sech(x) * exp(i velocity x), a zero-boundary test potential."""
    expr = sp.Float(amplitude, 17) * sp.sech(_X) * sp.exp(sp.I * sp.Float(velocity, 17) * _X)
    return Potential(expr, 0, 0, box, name=f"sech({amplitude},{velocity})")


def constant_potential(value: complex = 1.0, box: float = 10.0) -> Potential:
    v = complex(value)
    return Potential(sp.Float(v.real, 17) + sp.I * sp.Float(v.imag, 17), v, v, box, name=f"const({v})")


# -- Jost solutions ---------------------------------------------------------------------

def _boundary_column(pot: Potential, p: SpectralPoint, which: str) -> np.ndarray:
    if p.zbc:
        return np.array([1, 0], complex) if which == "-1" else np.array([0, 1], complex)
    if which == "-1":
        return np.array([pot.q_minus, 1j * (p.lam - p.z)])
    return np.array([1j * (p.z - p.lam), np.conj(pot.q_plus)])


def jost_reference(x, p: SpectralPoint, which: str, q_minus: complex, q_plus: complex) -> np.ndarray:
    """Closed-form modified Jost column of the dark soliton; ``which`` is "-1" or "+2"."""
    zp, zm = dark_soliton_zetas(q_minus, q_plus)
    zeta = p.zeta
    x = np.asarray(x, dtype=float)
    if abs(zp.imag) == 0:
        # Constant background: the closed form degenerates to the boundary column.
        qm = complex(q_minus)
        col = (np.array([qm, 1j / zeta]) if which == "-1"
               else np.array([-1j / zeta, np.conj(complex(q_plus))]))
        return col[:, None] * np.ones_like(x)[None, :] if x.ndim else col
    if abs(zeta - zp) < 1e-14 or abs(zeta - zm) < 1e-14:
        raise PoleAtZeta("zeta hits a pole of the closed form")
    if which == "-1":
        qm = complex(q_minus)
        w = 2 * zp.imag / (np.exp(2 * zp.imag * x) + 1)
        ratio = (zeta - zp) / (zeta - zm)
        first = qm * ratio + 1j * qm * w / (zeta - zm)
        second = 1j / zeta * ratio * zm ** 2 - zm * w / (zeta - zm)
    elif which == "+2":
        qp = complex(q_plus)
        w = 2 * zp.imag / (np.exp(2 * zp.imag * x) + 1)
        first = -1j / zeta - zm * w / (zeta - zm)
        second = np.conj(qp) - 1j * np.conj(qp) * w / (zeta - zm)
    else:
        raise ValueError("which must be '-1' or '+2'")
    return np.array([first, second])


@dataclass
class ScatterState:
    x: np.ndarray
    psi: np.ndarray  # shape (2, len(x))
    point: SpectralPoint
    which: str
    residual: float  # in units of the local tolerance
    solution: object = field(repr=False, default=None)

    def __call__(self, x) -> np.ndarray:
        return self.solution.sol(x)


def _rhs_matrix(pot: Potential, p: SpectralPoint, gamma: int):
    q = pot.derivative(0)
    lam, z = p.lam, p.z

    def f(x, y):
        qx = complex(q(x))
        return np.array([
            (-1j * lam + 1j * z * gamma) * y[0] + qx * y[1],
            np.conj(qx) * y[0] + (1j * lam + 1j * z * gamma) * y[1],
        ])
    return f


def _defect(f, sol, rtol: float, atol: float, checks: int = 40) -> float:
    """Interior ODE residual in units of the local tolerance.

    A sample of accepted steps is re-integrated from the stored start value
    with a much tighter tolerance; the discrepancy at the step end is scaled
    by rtol*|psi| + atol.
    """
    steps = len(sol.t) - 1
    if steps < 3:
        return 0.0
    idx = np.unique(np.linspace(1, steps - 2, min(checks, steps - 2)).astype(int))
    worst = 0.0
    for k in idx:
        a, b = sol.t[k], sol.t[k + 1]
        ref = solve_ivp(f, (a, b), sol.y[:, k], method="DOP853", rtol=1e-13, atol=1e-15)
        yb = sol.y[:, k + 1]
        err = np.abs(ref.y[:, -1] - yb)
        worst = max(worst, float(np.max(err / (rtol * np.abs(yb) + atol))))
    return worst


def integrate_jost(pot: Potential, p: SpectralPoint, which: str, grid=None,
                   rtol: float = 1e-10, atol: float = 1e-12,
                   check_residual: bool = True) -> ScatterState:
    """Integrate a modified Jost column from its boundary value; ``which`` is "-1" or "+2"."""
    if which not in ("-1", "+2"):
        raise ValueError("which must be '-1' or '+2'")
    if not pot.settled():
        raise BoundaryNotSettled(f"{pot.name} has not reached its limits on [-{pot.box}, {pot.box}]")
    L = pot.box
    gamma = 1 if which == "-1" else -1
    span = (-L, L) if which == "-1" else (L, -L)
    f = _rhs_matrix(pot, p, gamma)
    y0 = _boundary_column(pot, p, which)
    sol = solve_ivp(f, span, y0, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise NonConvergence(sol.message)
    xs = np.linspace(-L, L, 201) if grid is None else np.asarray(grid, dtype=float)
    psi = sol.sol(xs)
    residual = _defect(f, sol, rtol, atol) if check_residual else float("nan")
    return ScatterState(xs, psi, p, which, residual, sol)


def transmission(pot: Potential, p: SpectralPoint, points=(-1.0, 0.0, 1.0),
                 rtol: float = 1e-11, atol: float = 1e-13) -> Tuple[complex, float]:
    """(a(lambda), spread): the Wronskian ratio and its spread over evaluation points."""
    if not p.zbc and abs(p.z) < 1e-14:
        raise ZeroDenominator("z = 0")
    left = integrate_jost(pot, p, "-1", grid=[0.0], rtol=rtol, atol=atol, check_residual=False)
    right = integrate_jost(pot, p, "+2", grid=[0.0], rtol=rtol, atol=atol, check_residual=False)
    norm = 1.0 if p.zbc else 2 * p.z * (p.lam - p.z)
    vals = []
    for x0 in points:
        a1, a2 = left(x0)
        b1, b2 = right(x0)
        vals.append((a1 * b2 - a2 * b1) / norm)
    vals = np.array(vals)
    a = complex(vals[len(vals) // 2])
    spread = float(np.max(np.abs(vals - a)) / max(abs(a), 1e-300))
    return a, spread


def transmission_dark(q_minus: complex, q_plus: complex, p: SpectralPoint) -> complex:
    """Closed-form transmission coefficient of the dark soliton."""
    zp, zm = dark_soliton_zetas(q_minus, q_plus)
    if abs(zp.imag) == 0:
        return complex(q_minus) / complex(q_plus)
    return complex(q_minus) / complex(q_plus) * (p.zeta - zp) / (p.zeta - zm)


# -- Hamiltonians by quadrature ----------------------------------------------------------

def hamiltonian_numeric(H: Hamiltonian, pot: Potential, limit: int = 400,
                        epsabs: float = 1e-13, epsrel: float = 1e-12) -> complex:
    """Adaptive quadrature of the symbolic density over the potential's box."""
    ev = compile_numeric(H.density)
    order = ev.max_order

    def integrand(x):
        return complex(ev(pot.fields(np.array([x]), order))[0]) if ev.required else complex(ev({}))

    L = pot.box
    re, _ = quad(lambda x: integrand(x).real, -L, L, limit=limit, epsabs=epsabs, epsrel=epsrel)
    im, _ = quad(lambda x: integrand(x).imag, -L, L, limit=limit, epsabs=epsabs, epsrel=epsrel)
    return complex(re, im)


@dataclass
class ExpansionReport:
    N: int
    exponent: float
    expected: int
    t_values: List[float]
    residuals: List[float]
    hamiltonians: List[complex]
    t0: float

    @property
    def deviation(self) -> float:
        return abs(self.exponent - self.expected)

    def to_json(self) -> dict:
        return {
            "N": self.N, "exponent": self.exponent, "expected": self.expected, "t0": self.t0,
            "t": self.t_values, "residual": self.residuals,
            "hamiltonians": [[h.real, h.imag] for h in self.hamiltonians],
        }


def expansion_sweep(pot: Potential, orders: Sequence[int], t0: float = 3.0, samples: int = 7,
                    hamiltonians: Optional[Sequence[complex]] = None) -> List[ExpansionReport]:
    """Fit the decay exponent of log a(lambda) minus its truncated expansion along lambda = i t.

    Zero boundary data use powers of 2 lambda and the NLS Hamiltonians; nonzero
    data use powers of 2 z, the GP Hamiltonians and subtract log(q_-/q_+).
    The transmission coefficient is computed once per sample and shared by all orders.
    """
    h = Hierarchy.NLS if pot.zbc else Hierarchy.GP
    top = max(orders)
    if hamiltonians is None:
        hamiltonians = [hamiltonian_numeric(hamiltonian(h, n), pot) for n in range(top + 1)]
    elif len(hamiltonians) < top + 1:
        raise ValueError(f"need {top + 1} Hamiltonians, got {len(hamiltonians)}")
    ts = np.geomspace(t0, 4 * t0, samples)
    base = []
    for t in ts:
        p = SpectralPoint.from_lambda(1j * t, zbc=pot.zbc)
        a, _ = transmission(pot, p)
        la = cmath.log(a)
        if not pot.zbc:
            la -= cmath.log(pot.q_minus / pot.q_plus)
        base.append((la, 2 * p.lam if pot.zbc else 2 * p.z))
    reports = []
    for N in orders:
        res = []
        for la, var in base:
            err = la
            for n in range(N + 1):
                err -= 1j * hamiltonians[n] / var ** (n + 1)
            res.append(abs(err))
        slope = float(np.polyfit(np.log(ts), np.log(res), 1)[0])
        reports.append(ExpansionReport(N, slope, -(N + 2), [float(t) for t in ts],
                                       [float(r) for r in res], list(hamiltonians[:N + 1]), t0))
    return reports


def expansion_check(pot: Potential, N: int, t0: float = 3.0, samples: int = 7,
                    hamiltonians: Optional[Sequence[complex]] = None) -> ExpansionReport:
    """Single-order version of :func:`expansion_sweep`."""
    return expansion_sweep(pot, [N], t0, samples, hamiltonians)[0]
