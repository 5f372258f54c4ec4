"""Weighted substitutions: exact weight algebra, iteration, primitivity and
natural weights.

A weighted substitution maps every color ``a`` to a nonempty list of
``(color, weight)`` pairs whose weights sum to one.  Weights are either
:class:`fractions.Fraction` (exact mode) or :class:`AlgebraicWeight`, a float
carrying a symbolic tag ``r * lam**e * prod(xi[c]**k)`` where ``lam`` is the
Perron root of the associate matrix and ``xi`` its Perron eigenvector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
import sympy

from .errors import SubstitutionError

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class AlgebraicWeight:
    """Float weight with a symbolic tag ``ratio * lam**power * prod(xi[c]**k)``."""

    value: float
    ratio: Fraction = Fraction(1)
    power: int = 0
    xi: tuple[tuple[str, int], ...] = ()

    def __float__(self) -> float:
        return self.value

    def __mul__(self, other):
        if isinstance(other, AlgebraicWeight):
            monomial = dict(self.xi)
            for c, k in other.xi:
                monomial[c] = monomial.get(c, 0) + k
            return AlgebraicWeight(
                self.value * other.value,
                self.ratio * other.ratio,
                self.power + other.power,
                _pack(monomial),
            )
        if isinstance(other, (int, Fraction)):
            return AlgebraicWeight(self.value * float(other), self.ratio * other, self.power, self.xi)
        return NotImplemented

    __rmul__ = __mul__

    def relabel(self, mapping: Mapping[str, str]) -> "AlgebraicWeight":
        monomial: dict[str, int] = {}
        for c, k in self.xi:
            c = mapping.get(c, c)
            monomial[c] = monomial.get(c, 0) + k
        return AlgebraicWeight(self.value, self.ratio, self.power, _pack(monomial))

    def isclose(self, other, tol: float = WEIGHT_TOL) -> bool:
        return abs(self.value - float(other)) <= tol * max(1.0, abs(self.value))

    def __str__(self) -> str:
        parts = []
        if self.ratio != 1:
            parts.append(str(self.ratio))
        if self.power:
            parts.append(f"lam^{self.power}")
        parts += [f"xi[{c}]^{k}" for c, k in self.xi]
        return "*".join(parts) or "1"


def _pack(monomial: Mapping[str, int]) -> tuple[tuple[str, int], ...]:
    return tuple(sorted((c, k) for c, k in monomial.items() if k))


Weight = Union[Fraction, AlgebraicWeight]


def parse_weight(text) -> Fraction:
    """Parse ``"p/q"`` (or an integer) into an exact weight."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str) or "." in text or "e" in text.lower():
        raise SubstitutionError(f"weights must be rational strings 'p/q', got {text!r}")
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise SubstitutionError(f"bad rational weight {text!r}") from exc


def weights_close(u: Weight, v: Weight, tol: float = WEIGHT_TOL) -> bool:
    if isinstance(u, Fraction) and isinstance(v, Fraction):
        return u == v
    return abs(float(u) - float(v)) <= tol * max(1.0, abs(float(u)))


def product(weights: Iterable[Weight]) -> Weight:
    out: Weight = Fraction(1)
    for w in weights:
        out = w * out if isinstance(w, AlgebraicWeight) else out * w
    return out


@dataclass(frozen=True)
class PerronData:
    """Perron root ``lam`` and eigenvector ``xi`` (``xi[0] == 1``) of a count matrix.

    ``charpoly`` holds integer coefficients, leading coefficient first.
    ``lam_exact`` is set when the Perron root is rational.
    """

    lam: float
    xi: tuple[float, ...]
    charpoly: tuple[int, ...]
    lam_exact: Fraction | None = None


@dataclass(frozen=True)
class WeightedSubstitution:
    alphabet: tuple[str, ...]
    rules: Mapping[str, tuple[tuple[str, Weight], ...]]
    perron: PerronData | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(
            self, "rules", {a: tuple((c, w) for c, w in rhs) for a, rhs in self.rules.items()}
        )

    @classmethod
    def exact(cls, rules: Mapping[str, Sequence[tuple[str, object]]], alphabet=None):
        """Build an exact-mode substitution from ``{color: [(color, "p/q"), ...]}``."""
        alphabet = tuple(alphabet if alphabet is not None else rules)
        return cls(alphabet, {a: tuple((c, parse_weight(w)) for c, w in rhs) for a, rhs in rules.items()})

    @property
    def is_exact(self) -> bool:
        return all(isinstance(w, Fraction) for rhs in self.rules.values() for _, w in rhs)

    @property
    def is_natural(self) -> bool:
        return self.perron is not None

    def sigma(self, a: str) -> tuple[str, ...]:
        return tuple(c for c, _ in self.rules[a])

    def tau(self, a: str) -> tuple[Weight, ...]:
        return tuple(w for _, w in self.rules[a])

    def index(self, a: str) -> int:
        return self.alphabet.index(a)

    def __str__(self) -> str:
        lines = []
        for a in self.alphabet:
            rhs = "".join(f"({c}, {w})" for c, w in self.rules.get(a, ()))
            lines.append(f"{a} -> {rhs}")
        return "\n".join(lines)


@dataclass(frozen=True)
class Violation:
    rule: str
    color: str | None
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(f"{v.rule}: {v.color}: {v.message}" for v in self.violations)


def validate(ws: WeightedSubstitution) -> ValidationReport:
    """Check the structural invariants of ``ws``; never raises on bad data."""
    report = ValidationReport()
    add = lambda rule, color, msg: report.violations.append(Violation(rule, color, msg))

    if not ws.alphabet:
        add("empty-alphabet", None, "alphabet is empty")
    seen = set()
    for a in ws.alphabet:
        if not isinstance(a, str) or not a:
            add("bad-color", a, "colors must be nonempty strings")
        if a in seen:
            add("duplicate-color", a, "color listed twice")
        seen.add(a)
    for a in ws.rules:
        if a not in seen:
            add("unknown-color", a, "rule for a color outside the alphabet")
    for a in ws.alphabet:
        rhs = ws.rules.get(a)
        if rhs is None:
            add("missing-rule", a, "no rule for this color")
            continue
        if not rhs:
            add("empty-rule", a, "right-hand side is empty")
            continue
        for c, w in rhs:
            if c not in seen:
                add("unknown-color", a, f"right-hand side uses unknown color {c!r}")
            if not isinstance(w, (Fraction, AlgebraicWeight)):
                add("bad-weight", a, f"weight {w!r} has unsupported type")
            elif not 0 < float(w) <= (1 if isinstance(w, Fraction) else 1 + WEIGHT_TOL):
                add("weight-range", a, f"weight {w} outside (0, 1]")
        weights = [w for _, w in rhs if isinstance(w, (Fraction, AlgebraicWeight))]
        if len(weights) == len(rhs):
            if all(isinstance(w, Fraction) for w in weights):
                total = sum(weights, Fraction(0))
                if total != 1:
                    add("weight-sum", a, f"weights sum to {total}, not 1")
            else:
                total = math.fsum(float(w) for w in weights)
                if abs(total - 1) >= WEIGHT_TOL:
                    add("weight-sum", a, f"weights sum to {total!r}, not 1")
    if ws.alphabet and all(len(ws.rules.get(a, ())) == 1 for a in ws.alphabet):
        add("non-expanding", None, "every rule has length 1; the substitution never expands")
    return report


def require_valid(ws: WeightedSubstitution) -> WeightedSubstitution:
    report = validate(ws)
    if not report.ok:
        raise SubstitutionError(str(report))
    return ws


def _check_word(ws: WeightedSubstitution, word: Sequence[str]) -> None:
    if not word:
        raise SubstitutionError("word must be nonempty")
    for c in word:
        if c not in ws.rules:
            raise SubstitutionError(f"unknown color {c!r}")


def apply_sigma(ws: WeightedSubstitution, word: Sequence[str], n: int) -> list[str]:
    """Return ``sigma**n(word)`` by homomorphic extension."""
    _check_word(ws, word)
    if n < 0:
        raise SubstitutionError("n must be nonnegative")
    out = list(word)
    for _ in range(n):
        out = [c for a in out for c in ws.sigma(a)]
    return out


def tau_power(ws: WeightedSubstitution, a: str, n: int) -> list[tuple[str, Weight]]:
    """The weighted word ``(sigma**n(a), tau**n(a))``.

    Entry ``k = sum_{h<i} |sigma^{n-1}(sigma(a)_h)| + j`` of the result is
    ``tau(a)_i * tau^{n-1}(sigma(a)_i)_j``.  ``n == 0`` gives ``[(a, 1)]``.
    """
    _check_word(ws, [a])
    if n < 0:
        raise SubstitutionError("n must be nonnegative")
    memo: dict[tuple[str, int], list[tuple[str, Weight]]] = {}

    def rec(b: str, m: int):
        key = (b, m)
        if key not in memo:
            if m == 0:
                memo[key] = [(b, Fraction(1))]
            else:
                word = []
                for c, w in ws.rules[b]:
                    word += [(d, _mul(w, v)) for d, v in rec(c, m - 1)]
                memo[key] = word
        return memo[key]

    return list(rec(a, n))


def _mul(u: Weight, v: Weight) -> Weight:
    if isinstance(u, AlgebraicWeight) or not isinstance(v, AlgebraicWeight):
        return u * v
    return v * u


def _sigma_map(sub) -> tuple[tuple[str, ...], dict[str, tuple[str, ...]]]:
    if isinstance(sub, WeightedSubstitution):
        return sub.alphabet, {a: sub.sigma(a) for a in sub.alphabet}
    alphabet = tuple(sub)
    return alphabet, {a: tuple(sub[a]) for a in alphabet}


def associate_matrix(sub) -> np.ndarray:
    """Count matrix ``M[a][b] = #{i : sigma(a)_i == b}`` in alphabet order.

    ``sub`` is a :class:`WeightedSubstitution` or a mapping color -> colors.
    """
    alphabet, sigma = _sigma_map(sub)
    pos = {a: k for k, a in enumerate(alphabet)}
    M = np.zeros((len(alphabet), len(alphabet)), dtype=np.int64)
    for a in alphabet:
        for c in sigma[a]:
            if c not in pos:
                raise SubstitutionError(f"unknown color {c!r} in rule for {a!r}")
            M[pos[a], pos[c]] += 1
    return M


def primitivity_witness(M: np.ndarray) -> int | None:
    """Smallest ``n <= (d-1)**2 + 1`` with ``M**n > 0`` entrywise, else None."""
    d = M.shape[0]
    if d == 0:
        return None
    B = (np.asarray(M) > 0).astype(np.int64)
    P = B.copy()
    for n in range(1, (d - 1) ** 2 + 2):
        if P.all():
            return n
        P = ((P @ B) > 0).astype(np.int64)
    return None


def is_primitive(ws) -> tuple[bool, int | None]:
    n = primitivity_witness(associate_matrix(ws))
    return n is not None, n


def charpoly(M: np.ndarray) -> tuple[int, ...]:
    poly = sympy.Matrix(np.asarray(M).tolist()).charpoly()
    return tuple(int(c) for c in poly.all_coeffs())


def perron_eigen(M: np.ndarray, tol: float = 1e-15, max_iter: int = 100_000) -> PerronData:
    """Perron root and eigenvector by power iteration from the all-ones vector.

    The root is polished by Newton steps on the integer characteristic
    polynomial; rational roots are detected and returned exactly.
    """
    M = np.asarray(M)
    if primitivity_witness(M) is None:
        raise SubstitutionError("matrix is not primitive")
    A = M.astype(float)
    x = np.ones(A.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        y = A @ x
        lam_new = float(y.max()) / float(x.max())
        x_new = y / y.max()
        delta = abs(lam_new - lam)
        x, lam = x_new, lam_new
        if delta < tol * max(1.0, lam) and np.abs(A @ x - lam * x).max() < 1e-13 * lam:
            break

    cp = charpoly(M)
    poly = np.poly1d([float(c) for c in cp])
    dpoly = poly.deriv()
    for _ in range(8):
        d = dpoly(lam)
        if d == 0:
            break
        step = poly(lam) / d
        lam -= step
        if abs(step) < 1e-16 * lam:
            break

    lam_exact = None
    x_sym = sympy.Symbol("x")
    for r in sympy.Poly(list(cp), x_sym).ground_roots():
        if r.is_Rational and r > 0 and abs(float(r) - lam) < 1e-9 * lam:
            lam_exact = Fraction(int(r.p), int(r.q))
            lam = float(lam_exact)

    if lam_exact is not None:
        null = (sympy.Matrix(M.tolist()) - sympy.Rational(lam_exact.numerator, lam_exact.denominator)
                * sympy.eye(M.shape[0])).nullspace()
        v = null[0] / null[0][0]
        xi = tuple(float(c) for c in v)
    else:
        # one inverse-iteration pass sharpens the power-iteration vector
        shift = A - lam * (1 + 1e-13) * np.eye(A.shape[0])
        try:
            z = np.linalg.solve(shift, x)
            if np.all(np.isfinite(z)) and np.all(z / z[0] > 0):
                x = z
        except np.linalg.LinAlgError:
            pass
        xi = tuple(float(c) for c in x / x[0])
    return PerronData(lam=float(lam), xi=xi, charpoly=cp, lam_exact=lam_exact)


def natural_weights(sub) -> WeightedSubstitution:
    """Weights ``xi[sigma(a)_i] / (lam * xi[a])`` from the Perron eigenpair.

    The result is exact when the Perron root is rational (the eigenvector is
    then rational too); otherwise weights are :class:`AlgebraicWeight`.
    """
    alphabet, sigma = _sigma_map(sub)
    if sum(len(sigma[a]) for a in alphabet) < 2:
        raise SubstitutionError("trivial substitution has no natural weight")
    M = associate_matrix({a: sigma[a] for a in alphabet})
    if primitivity_witness(M) is None:
        raise SubstitutionError("substitution is not primitive")
    perron = perron_eigen(M)
    pos = {a: k for k, a in enumerate(alphabet)}
    rules = {}
    if perron.lam_exact is not None:
        null = (sympy.Matrix(M.tolist())
                - sympy.Rational(perron.lam_exact.numerator, perron.lam_exact.denominator)
                * sympy.eye(len(alphabet))).nullspace()[0]
        xi = [Fraction(str(c / null[0])) for c in null]
        for a in alphabet:
            rules[a] = tuple((c, xi[pos[c]] / (perron.lam_exact * xi[pos[a]])) for c in sigma[a])
    else:
        for a in alphabet:
            rules[a] = tuple(
                (c, AlgebraicWeight(float(perron.xi[pos[c]] / (perron.lam * perron.xi[pos[a]])),
                                    power=-1, xi=_pack({c: 1, a: -1} if c != a else {})))
                for c in sigma[a]
            )
    return WeightedSubstitution(alphabet, rules, perron=perron)


def canonicalize(ws: WeightedSubstitution) -> WeightedSubstitution:
    """Inline length-one rules, then merge colors with identical rules.

    Raises :class:`SubstitutionError` on a degenerate (pure renaming) system.
    """
    alphabet = list(ws.alphabet)
    rules = {a: list(ws.rules[a]) for a in alphabet}

    while True:
        short = next((a for a in alphabet if len(rules[a]) == 1), None)
        if short is None:
            break
        target, w = rules[short][0]
        if target == short or len(alphabet) == 1:
            raise SubstitutionError("degenerate substitution")
        alphabet.remove(short)
        del rules[short]
        for a in alphabet:
            rules[a] = [(target, _mul(v, w)) if c == short else (c, v) for c, v in rules[a]]

    merged = True
    while merged:
        merged = False
        for i, a in enumerate(alphabet):
            for b in alphabet[i + 1:]:
                if _same_rule(rules[a], rules[b]):
                    alphabet.remove(b)
                    del rules[b]
                    for c in alphabet:
                        rules[c] = [(a if d == b else d, _relabel(v, b, a)) for d, v in rules[c]]
                    merged = True
                    break
            if merged:
                break

    return WeightedSubstitution(tuple(alphabet), {a: tuple(rules[a]) for a in alphabet}, perron=ws.perron)


def _same_rule(r1, r2) -> bool:
    return len(r1) == len(r2) and all(
        c1 == c2 and weights_close(w1, w2) for (c1, w1), (c2, w2) in zip(r1, r2)
    )


def _relabel(w: Weight, old: str, new: str) -> Weight:
    return w.relabel({old: new}) if isinstance(w, AlgebraicWeight) else w
