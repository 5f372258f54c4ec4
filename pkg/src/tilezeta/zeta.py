"""Dynamical zeta function of the multiplicative action.

Three routes are provided:

* :func:`zeta_eval` -- the determinant formula over the matrices of
  :func:`zeta_matrices` times the finite product over separating orbits;
* :func:`zeta_euler_oracle` -- a truncated Euler product over enumerated
  primitive cycles, independent of any determinant;
* :func:`zeta_rational` -- an exact rational function of ``z = base**(-alpha)``
  for lattice base groups.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from .base_group import BaseGroupResult, ChildGraph, child_graph, compute_g, edge_exponents
from .errors import ConsistencyError, SubstitutionError
from .orbits import SeparatingOrbit, _lyndon_walk, closed_separating_orbits, separating_orbits
from .substitution import WeightedSubstitution

POLE_TOL = 1e-13
TAIL_SAFETY = 10.0


@dataclass(frozen=True)
class ZetaMatrices:
    M: np.ndarray
    M_plus: np.ndarray
    M_minus: np.ndarray


@dataclass(frozen=True)
class Pole:
    """Returned instead of a value when ``alpha`` sits on (or next to) a pole."""

    alpha: complex
    det: complex

    def __str__(self) -> str:
        return f"pole at alpha={self.alpha} (|det| = {abs(self.det):.3g})"


def _power(w, alpha: complex) -> complex:
    return cmath.exp(alpha * math.log(float(w)))


def zeta_matrices(ws: WeightedSubstitution, alpha: complex) -> ZetaMatrices:
    """``M_alpha`` (all children) and ``M_alpha,+/-`` (first / last child only)."""
    pos = {a: k for k, a in enumerate(ws.alphabet)}
    d = len(pos)
    M = np.zeros((d, d), dtype=complex)
    Mp = np.zeros((d, d), dtype=complex)
    Mm = np.zeros((d, d), dtype=complex)
    for a in ws.alphabet:
        rhs = ws.rules[a]
        for c, w in rhs:
            M[pos[a], pos[c]] += _power(w, alpha)
        Mp[pos[a], pos[rhs[0][0]]] += _power(rhs[0][1], alpha)
        Mm[pos[a], pos[rhs[-1][0]]] += _power(rhs[-1][1], alpha)
    return ZetaMatrices(M, Mp, Mm)


def _det_one_minus(A: np.ndarray) -> complex:
    return complex(np.linalg.det(np.eye(A.shape[0]) - A))


def _orbits(ws, base, orbits):
    if orbits is None:
        orbits = separating_orbits(ws, base)
    return closed_separating_orbits(orbits)


def zeta_eval(ws: WeightedSubstitution, base: BaseGroupResult | None, alpha: complex,
              orbits: list[SeparatingOrbit] | None = None):
    """``det(I-M+) det(I-M-) / det(I-M) * prod_orbits (1 - c**-alpha)**-1``.

    Returns a :class:`Pole` when a denominator vanishes to within 1e-13.
    """
    alpha = complex(alpha)
    mats = zeta_matrices(ws, alpha)
    den = _det_one_minus(mats.M)
    if abs(den) < POLE_TOL:
        return Pole(alpha, den)
    value = _det_one_minus(mats.M_plus) * _det_one_minus(mats.M_minus) / den
    for orbit in _orbits(ws, base, orbits):
        f = 1 - cmath.exp(-alpha * math.log(orbit.c_float))
        if abs(f) < POLE_TOL:
            return Pole(alpha, f)
        value /= f
    return value


@dataclass(frozen=True)
class OracleResult:
    value: complex
    bound: float
    cycles: int

    def __iter__(self):
        return iter((self.value, self.bound))


@functools.lru_cache(maxsize=16)
def _oracle_cycles(graph: ChildGraph, max_len: int):
    logw = [math.log(float(e.weight)) for e in graph.edges]
    sums = []
    for ids, all_first, all_last in _lyndon_walk(graph, max_len):
        if not (all_first or all_last):
            sums.append(math.fsum(logw[k] for k in ids))
    return np.array(sums)


def tail_bound_log(ws: WeightedSubstitution, sigma: float, max_len: int) -> float:
    """Bound on the log-contribution of primitive cycles longer than ``max_len``.

    Sums ``tr(M_sigma**n) / n`` for ``max_len < n <= 2 max_len`` and closes the
    rest geometrically with the spectral radius of ``M_sigma``.
    """
    M = zeta_matrices(ws, sigma).M.real
    rho = max(abs(np.linalg.eigvals(M)))
    if rho >= 1:
        return math.inf
    P = np.linalg.matrix_power(M, max_len)
    total = 0.0
    for n in range(max_len + 1, 2 * max_len + 1):
        P = P @ M
        total += float(np.trace(P)) / n
    total += float(np.trace(P)) / (2 * max_len) * rho / (1 - rho)
    return total


def zeta_euler_oracle(ws: WeightedSubstitution, base: BaseGroupResult | None, alpha: complex,
                      max_len: int = 14, orbits: list[SeparatingOrbit] | None = None) -> OracleResult:
    """Truncated Euler product over closed orbits.

    Non-boundary primitive cycles of length <= ``max_len`` contribute
    ``(1 - w**alpha)**-1``; cycles using only first children or only last
    children are excluded and the separating orbits are multiplied back in.
    """
    alpha = complex(alpha)
    if alpha.real <= 1:
        raise SubstitutionError("the Euler product only converges for Re(alpha) > 1")
    logs = _oracle_cycles(child_graph(ws), max_len)
    log_zeta = -np.sum(np.log1p(-np.exp(alpha * logs)))
    for orbit in _orbits(ws, base, orbits):
        log_zeta -= cmath.log(1 - cmath.exp(-alpha * math.log(orbit.c_float)))
    value = complex(np.exp(log_zeta))
    tail = tail_bound_log(ws, alpha.real, max_len)
    bound = TAIL_SAFETY * abs(value) * math.expm1(tail)
    return OracleResult(value, bound, len(logs))


_z = sympy.Symbol("z")


@dataclass(frozen=True)
class RationalZeta:
    """``zeta(alpha) = p(z) / q(z)`` with ``z = base**(-alpha)``.

    Coefficients are integers in ascending degree order.
    """

    p: tuple[int, ...]
    q: tuple[int, ...]
    base: float
    base_exact: Fraction | None = None
    charpoly: tuple[int, ...] | None = None

    def __call__(self, alpha: complex) -> complex:
        z = cmath.exp(-complex(alpha) * math.log(self.base))
        return _horner(self.p, z) / _horner(self.q, z)

    def as_sympy(self):
        return (sum(c * _z ** k for k, c in enumerate(self.p))
                / sum(c * _z ** k for k, c in enumerate(self.q)))

    def __str__(self) -> str:
        return f"({_poly_str(self.p)}) / ({_poly_str(self.q)}),  z = {self.base_exact or self.base}^(-alpha)"


def _horner(coeffs, z):
    out = 0
    for c in reversed(coeffs):
        out = out * z + c
    return out


def _poly_str(coeffs) -> str:
    return str(sympy.Poly(list(reversed(coeffs)), _z).as_expr())


def _integer_polys(ws: WeightedSubstitution, base: BaseGroupResult):
    """``det(I - N(z))`` for the full, first-child and last-child matrices.

    ``N`` is ``M_alpha`` conjugated by ``diag(g**alpha)``, whose entries are
    sums of integer powers of ``z``.
    """
    g = compute_g(ws, base)
    m = edge_exponents(ws, g, base)
    pos = {a: k for k, a in enumerate(ws.alphabet)}
    d = len(pos)
    N = sympy.zeros(d, d)
    Np = sympy.zeros(d, d)
    Nm = sympy.zeros(d, d)
    for a in ws.alphabet:
        rhs = ws.rules[a]
        for i, (c, _) in enumerate(rhs):
            N[pos[a], pos[c]] += _z ** m[(a, i)]
        Np[pos[a], pos[rhs[0][0]]] += _z ** m[(a, 0)]
        Nm[pos[a], pos[rhs[-1][0]]] += _z ** m[(a, len(rhs) - 1)]
    one = sympy.eye(d)
    return [sympy.cancel((one - A).det()) for A in (N, Np, Nm)]


def zeta_rational(ws: WeightedSubstitution, base: BaseGroupResult,
                  orbits: list[SeparatingOrbit] | None = None) -> RationalZeta:
    """Exact ``p/q`` in ``z = base**(-alpha)``; requires a lattice base group."""
    if base is None or not base.is_lattice:
        raise SubstitutionError("rational form needs a lattice base group")
    den, num_p, num_m = _integer_polys(ws, base)
    expr = num_p * num_m / den
    for orbit in _orbits(ws, base, orbits):
        if orbit.c_exponent is None or orbit.c_exponent <= 0:
            raise ConsistencyError(f"orbit cycle {orbit.c} is not a positive power of the base")
        expr = expr / (1 - _z ** orbit.c_exponent)
    p_expr, q_expr = sympy.fraction(sympy.cancel(sympy.together(expr)))
    p = [int(c) for c in reversed(sympy.Poly(p_expr, _z).all_coeffs())]
    q = [int(c) for c in reversed(sympy.Poly(q_expr, _z).all_coeffs())]
    lead = next(c for c in q if c)
    if lead < 0:
        p, q = [-c for c in p], [-c for c in q]
    return RationalZeta(tuple(p), tuple(q), base.base, base.base_exact, base.charpoly)


def det_polynomial(ws: WeightedSubstitution, base: BaseGroupResult):
    """``det(I - M_alpha)`` as a sympy expression in ``z`` (lattice groups)."""
    return _integer_polys(ws, base)[0]


def det_at_one_is_zero(ws: WeightedSubstitution, base: BaseGroupResult | None = None) -> bool:
    """Exact test of ``det(I - M_1) == 0``.

    Rational weights are handled directly; natural weights through the
    integer polynomial ``det(I - N(z))`` reduced modulo the minimal
    polynomial of ``1/lam``.
    """
    if ws.is_exact:
        pos = {a: k for k, a in enumerate(ws.alphabet)}
        A = sympy.eye(len(pos))
        for a in ws.alphabet:
            for c, w in ws.rules[a]:
                A[pos[a], pos[c]] -= sympy.Rational(w.numerator, w.denominator)
        return A.det() == 0
    if ws.perron is None or base is None or not base.is_lattice:
        raise SubstitutionError("exact determinant needs rational or natural weights")
    x = sympy.Symbol("x")
    lam = ws.perron.lam
    factors = sympy.factor_list(sympy.Poly(list(ws.perron.charpoly), x))[1]
    minpoly = min((f for f, _ in factors), key=lambda f: abs(float(f.eval(lam))))
    # minimal polynomial of 1/lam is the reversal
    rev = sympy.Poly(list(reversed(minpoly.all_coeffs())), _z)
    D = sympy.together(det_polynomial(ws, base))
    num, den = sympy.fraction(D)
    return sympy.rem(sympy.Poly(num, _z), rev).is_zero


def det_derivative(ws: WeightedSubstitution, alpha: complex, h: float = 1e-5) -> complex:
    f = lambda s: _det_one_minus(zeta_matrices(ws, s).M)
    return (f(alpha + h) - f(alpha - h)) / (2 * h)


def find_real_poles(ws: WeightedSubstitution, base: BaseGroupResult | None, interval,
                    samples: int = 4001) -> list[tuple[float, int]]:
    """Real poles ``(alpha, multiplicity)`` inside the open ``interval``.

    Lattice groups use the exact denominator ``q(z)``; dense groups scan the
    sign of ``det(I - M_alpha)`` and refine by bisection then Newton.
    """
    lo, hi = map(float, interval)
    if not lo < hi:
        raise SubstitutionError("interval must satisfy lo < hi")
    if base is not None and base.is_lattice:
        poles = _lattice_poles(ws, base, lo, hi)
    else:
        poles = _dense_poles(ws, lo, hi, samples)
    if lo < 1 < hi:
        if not any(abs(a - 1) < 1e-9 for a, _ in poles):
            raise ConsistencyError("alpha = 1 is not among the detected poles")
        if abs(det_derivative(ws, 1.0)) <= 1e-9:
            raise ConsistencyError("the pole at alpha = 1 is not simple")
    return poles


def _lattice_poles(ws, base, lo, hi):
    rz = zeta_rational(ws, base)
    q = sympy.Poly(list(reversed(rz.q)), _z)
    out = []
    for factor, mult in q.sqf_list()[1]:
        for root in np.roots([float(c) for c in factor.all_coeffs()]):
            if abs(root.imag) > 1e-12 or root.real <= 0:
                continue
            alpha = -math.log(root.real) / math.log(base.base)
            if lo < alpha < hi and min(alpha - lo, hi - alpha) > 1e-9:
                out.append((_snap(alpha), mult))
    return sorted(out)


def _snap(alpha: float) -> float:
    return float(round(alpha)) if abs(alpha - round(alpha)) < 1e-11 else alpha


def _dense_poles(ws, lo, hi, samples):
    f = lambda s: _det_one_minus(zeta_matrices(ws, s).M).real
    margin = (hi - lo) * 1e-9
    xs = np.linspace(lo + margin, hi - margin, samples)
    vals = [f(x) for x in xs]
    out = []
    for k in range(len(xs) - 1):
        a, b, fa, fb = xs[k], xs[k + 1], vals[k], vals[k + 1]
        if fa == 0:
            root = a
        elif fa * fb < 0:
            for _ in range(60):
                mid = 0.5 * (a + b)
                if f(mid) * fa > 0:
                    a, fa = mid, f(mid)
                else:
                    b = mid
            root = 0.5 * (a + b)
            for _ in range(3):
                d = det_derivative(ws, root).real
                if d == 0:
                    break
                root -= f(root) / d
        else:
            continue
        out.append((_snap(float(root)), _multiplicity(ws, root)))
    return out


def _multiplicity(ws, alpha: float, tol: float = 1e-9) -> int:
    if abs(det_derivative(ws, alpha)) > tol:
        return 1
    # winding number of det(I - M) around a small circle
    f = lambda s: _det_one_minus(zeta_matrices(ws, s).M)
    r = 1e-3
    thetas = np.linspace(0, 2 * np.pi, 721)
    phases = np.unwrap([cmath.phase(f(alpha + r * cmath.exp(1j * t))) for t in thetas])
    return max(1, int(round((phases[-1] - phases[0]) / (2 * np.pi))))
