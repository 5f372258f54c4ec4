"""Child graph, cycle weights, base-group classification and the g-function."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import networkx as nx
import sympy

from .errors import CapExceeded, ConsistencyError, SubstitutionError
from .substitution import PerronData, Weight, WeightedSubstitution, product

FACTOR_CAP = 2 ** 64
DEFAULT_CYCLE_CAP = 10 ** 6
LOG_TOL = 1e-9


class Edge(NamedTuple):
    src: str
    index: int
    dst: str
    weight: Weight


@dataclass(frozen=True)
class ChildGraph:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]

    def out_edges(self, a: str) -> list[Edge]:
        return [e for e in self.edges if e.src == a]


def child_graph(ws: WeightedSubstitution) -> ChildGraph:
    """One edge ``(a, i, sigma(a)_i, tau(a)_i)`` per child slot, in alphabet order."""
    edges = tuple(
        Edge(a, i, c, w) for a in ws.alphabet for i, (c, w) in enumerate(ws.rules[a])
    )
    return ChildGraph(ws.alphabet, edges)


def simple_cycles(graph: ChildGraph, cap: int = DEFAULT_CYCLE_CAP) -> list[tuple[Edge, ...]]:
    """All edge-simple cycles (node-simple, parallel edges counted separately)."""
    G = nx.DiGraph()
    G.add_nodes_from(graph.nodes)
    parallel: dict[tuple[str, str], list[Edge]] = {}
    for e in graph.edges:
        parallel.setdefault((e.src, e.dst), []).append(e)
        G.add_edge(e.src, e.dst)
    order = {a: k for k, a in enumerate(graph.nodes)}
    found = []
    for nodes in nx.simple_cycles(G):
        start = min(range(len(nodes)), key=lambda k: order[nodes[k]])
        nodes = nodes[start:] + nodes[:start]
        hops = [parallel[(nodes[k], nodes[(k + 1) % len(nodes)])] for k in range(len(nodes))]
        for choice in itertools.product(*hops):
            found.append(tuple(choice))
            if len(found) > cap:
                raise CapExceeded(f"more than {cap} simple cycles; raise the cap")
    found.sort(key=lambda cyc: [(order[e.src], e.index) for e in cyc])
    return found


def cycle_generators(graph: ChildGraph, cap: int = DEFAULT_CYCLE_CAP) -> list[Weight]:
    """Weight products of all simple cycles.

    Every closed walk splits into simple cycles, so these generate the same
    group as all return weights.
    """
    return [product(e.weight for e in cyc) for cyc in simple_cycles(graph, cap)]


def exponent_vector(x: Fraction, cap: int = FACTOR_CAP) -> dict[int, int]:
    """Prime exponents of a positive rational."""
    if x <= 0:
        raise SubstitutionError(f"{x} is not positive")
    if x.numerator > cap or x.denominator > cap:
        raise SubstitutionError(f"{x} exceeds the factorization cap {cap}")
    vec = dict(sympy.factorint(x.numerator))
    for p, k in sympy.factorint(x.denominator).items():
        vec[p] = vec.get(p, 0) - k
    return {int(p): int(k) for p, k in vec.items() if k}


def _from_exponents(vec: dict[int, int]) -> Fraction:
    out = Fraction(1)
    for p, k in vec.items():
        out *= Fraction(p) ** k
    return out


def lattice_exponent(x: Fraction, base: Fraction) -> int | None:
    """Integer ``k`` with ``x == base**k`` exactly, or None."""
    if x == 1:
        return 0
    vx, vb = exponent_vector(x), exponent_vector(base)
    if set(vx) != set(vb):
        return None
    p = next(iter(vb))
    k = Fraction(vx[p], vb[p])
    if k.denominator != 1 or any(vx[q] != k * vb[q] for q in vb):
        return None
    return int(k)


@dataclass(frozen=True)
class BaseGroupResult:
    """``kind`` is ``"dense"`` (G = R+) or ``"lattice"`` (G = {base**n})."""

    kind: str
    base: float | None = None
    base_exact: Fraction | None = None
    charpoly: tuple[int, ...] | None = None
    generators: tuple = field(default=(), compare=False)

    @property
    def is_lattice(self) -> bool:
        return self.kind == "lattice"

    def exponent(self, x) -> int | None:
        """Integer ``k`` with ``x == base**k`` (exact when possible), or None."""
        if not self.is_lattice:
            raise SubstitutionError("dense base group has no exponent")
        if self.base_exact is not None and isinstance(x, Fraction):
            return lattice_exponent(x, self.base_exact)
        k = math.log(float(x)) / math.log(self.base)
        return round(k) if abs(k - round(k)) < LOG_TOL else None

    def __str__(self) -> str:
        if not self.is_lattice:
            return "dense (G = R+)"
        shown = self.base_exact if self.base_exact is not None else f"{self.base!r}"
        return f"lattice (G = {{{shown}^n}})"


def classify_base_group(generators, perron: PerronData | None = None) -> BaseGroupResult:
    """Dense or lattice, from cycle weights.

    Exact rationals are compared through prime-exponent vectors: the group is
    a lattice iff all vectors are collinear.  Algebraic weights are only
    accepted for natural-weight systems, whose group is generated by the
    Perron root.
    """
    generators = tuple(generators)
    if not generators:
        raise SubstitutionError("no cycle generators")
    if all(isinstance(g, Fraction) for g in generators):
        return _classify_exact(generators)
    if perron is None:
        raise SubstitutionError(
            "commensurability of non-rational weights is only decidable for natural weights"
        )
    lam = perron.lam
    for g in generators:
        k = math.log(float(g)) / math.log(lam)
        if abs(k - round(k)) > LOG_TOL:
            raise ConsistencyError(f"cycle weight {float(g)!r} is not a power of the Perron root")
    return BaseGroupResult("lattice", lam, perron.lam_exact, perron.charpoly, generators)


def _classify_exact(generators: tuple[Fraction, ...]) -> BaseGroupResult:
    for g in generators:
        if not 0 < g < 1:
            raise SubstitutionError(f"generator {g} not in (0, 1)")
    vectors = [exponent_vector(g) for g in generators]
    v1 = vectors[0]
    primes = sorted(set().union(*vectors))
    for v in vectors[1:]:
        for p, q in itertools.combinations(primes, 2):
            if v.get(p, 0) * v1.get(q, 0) != v.get(q, 0) * v1.get(p, 0):
                return BaseGroupResult("dense", generators=generators)
        if set(v) != set(v1):
            return BaseGroupResult("dense", generators=generators)
    g1 = math.gcd(*v1.values())
    unit = {p: k // g1 for p, k in v1.items()}
    p0 = next(iter(unit))
    multiples = [v[p0] // unit[p0] for v in vectors]
    step = math.gcd(*multiples)
    base = _from_exponents({p: k * step for p, k in unit.items()})
    if base < 1:
        base = 1 / base
    return BaseGroupResult("lattice", float(base), base, None, generators)


def base_group(ws: WeightedSubstitution, cap: int = DEFAULT_CYCLE_CAP) -> BaseGroupResult:
    return classify_base_group(cycle_generators(child_graph(ws), cap), ws.perron)


@dataclass(frozen=True)
class GFunction:
    values: dict

    def __getitem__(self, a: str):
        return self.values[a]


def compute_g(ws: WeightedSubstitution, base: BaseGroupResult) -> GFunction:
    """Coset representatives ``g`` with ``g(sigma(a)_i) G = g(a) tau(a)_i G``.

    Dense groups take ``g == 1``; lattices take path weights from the first
    color along a breadth-first search of the child graph.
    """
    if not base.is_lattice:
        return GFunction({a: Fraction(1) for a in ws.alphabet})
    graph = child_graph(ws)
    a0 = ws.alphabet[0]
    g: dict = {a0: Fraction(1)}
    queue = deque([a0])
    while queue:
        a = queue.popleft()
        for e in graph.out_edges(a):
            if e.dst not in g:
                g[e.dst] = _times(g[a], e.weight)
                queue.append(e.dst)
    if len(g) != len(ws.alphabet):
        raise SubstitutionError("child graph is not strongly connected")
    result = GFunction({a: g[a] for a in ws.alphabet})
    edge_exponents(ws, result, base)
    return result


def _times(u, v):
    if isinstance(u, Fraction) and isinstance(v, Fraction):
        return u * v
    return float(u) * float(v)


def edge_exponents(ws: WeightedSubstitution, g: GFunction, base: BaseGroupResult) -> dict[tuple[str, int], int]:
    """Integers ``m`` with ``tau(a)_i == g(b) / g(a) * base**(-m)`` per edge.

    Raises :class:`ConsistencyError` if some edge violates the coset
    condition, which means the base group was misclassified.
    """
    out = {}
    for e in child_graph(ws).edges:
        ga, gb = g[e.src], g[e.dst]
        if all(isinstance(x, Fraction) for x in (ga, gb, e.weight)) and base.base_exact is not None:
            k = base.exponent(gb / (ga * e.weight))
        else:
            ratio = float(gb) / (float(ga) * float(e.weight))
            k = math.log(ratio) / math.log(base.base)
            k = round(k) if abs(k - round(k)) < LOG_TOL else None
        if k is None:
            raise ConsistencyError(f"edge {e.src}[{e.index}] breaks the coset condition for g")
        out[(e.src, e.index)] = k
    return out
