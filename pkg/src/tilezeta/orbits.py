"""Closed orbits: primitive child-graph cycles and separating-line orbits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np
import sympy

from .base_group import (
    DEFAULT_CYCLE_CAP,
    BaseGroupResult,
    ChildGraph,
    Edge,
    child_graph,
    classify_base_group,
    lattice_exponent,
)
from .errors import CapExceeded, ConsistencyError, SubstitutionError
from .substitution import AlgebraicWeight, Weight, WeightedSubstitution, associate_matrix, product


@dataclass(frozen=True)
class BoundaryMaps:
    """First-letter map ``plus`` and last-letter map ``minus`` with their weights."""

    plus: dict
    minus: dict
    plus_weight: dict
    minus_weight: dict


def boundary_maps(ws: WeightedSubstitution) -> BoundaryMaps:
    return BoundaryMaps(
        plus={a: ws.rules[a][0][0] for a in ws.alphabet},
        minus={a: ws.rules[a][-1][0] for a in ws.alphabet},
        plus_weight={a: ws.rules[a][0][1] for a in ws.alphabet},
        minus_weight={a: ws.rules[a][-1][1] for a in ws.alphabet},
    )


@dataclass(frozen=True)
class PrimitiveCycle:
    edges: tuple[Edge, ...]
    weight: Weight

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def colors(self) -> tuple[str, ...]:
        return tuple(e.src for e in self.edges)


def _lyndon_walk(graph: ChildGraph, max_len: int):
    """Depth-first search over path prenecklaces (FKM order, pruned by adjacency).

    Yields ``(ids, all_first, all_last)`` for every closed Lyndon word over the
    edge alphabet, i.e. every primitive cycle in its minimal rotation.
    """
    edges = graph.edges
    n_edges = len(edges)
    last_index = {}
    for e in edges:
        last_index[e.src] = max(last_index.get(e.src, -1), e.index)
    out = {a: [k for k, e in enumerate(edges) if e.src == a] for a in graph.nodes}
    dst = [e.dst for e in edges]
    src = [e.src for e in edges]
    is_first = [e.index == 0 for e in edges]
    is_last = [e.index == last_index[e.src] for e in edges]

    word = [0] * (max_len + 1)
    stack = [(1, 1, k, is_first[k], is_last[k]) for k in reversed(range(n_edges))]
    while stack:
        t, p, k, first, last = stack.pop()
        word[t] = k
        if p == t and dst[k] == src[word[1]]:
            yield word[1:t + 1], first, last
        if t < max_len:
            floor = word[t + 1 - p]
            for j in reversed(out[dst[k]]):
                if j >= floor:
                    stack.append((t + 1, p if j == floor else t + 1, j, first and is_first[j], last and is_last[j]))


def primitive_cycles(graph: ChildGraph, max_len: int, cap: int = DEFAULT_CYCLE_CAP) -> list[PrimitiveCycle]:
    """All primitive cycles of length <= ``max_len``, each in minimal rotation.

    Per-length counts are cross-checked against necklace counts from the
    traces of the count matrix.
    """
    if max_len < 1:
        raise SubstitutionError("max_len must be at least 1")
    found = []
    for ids, _, _ in _lyndon_walk(graph, max_len):
        es = tuple(graph.edges[k] for k in ids)
        found.append(PrimitiveCycle(es, product(e.weight for e in es)))
        if len(found) > cap:
            raise CapExceeded(f"more than {cap} primitive cycles; raise the cap or lower max_len")
    counts = [0] * (max_len + 1)
    for cyc in found:
        counts[cyc.length] += 1
    expected = necklace_counts(graph, max_len)
    if counts[1:] != expected[1:]:
        raise ConsistencyError(f"cycle counts {counts[1:]} disagree with necklace counts {expected[1:]}")
    return found


def _graph_matrix(graph: ChildGraph) -> np.ndarray:
    pos = {a: k for k, a in enumerate(graph.nodes)}
    M = np.zeros((len(pos), len(pos)), dtype=object)
    M[:, :] = 0
    for e in graph.edges:
        M[pos[e.src], pos[e.dst]] += 1
    return M


def necklace_counts(graph: ChildGraph, max_len: int) -> list[int]:
    """Number of primitive cycles per length, by Moebius inversion of ``tr(M**n)``."""
    M = _graph_matrix(graph)
    traces = [0]
    P = np.identity(M.shape[0], dtype=object)
    for _ in range(max_len):
        P = P.dot(M)
        traces.append(int(np.trace(P)))
    counts = [0]
    for n in range(1, max_len + 1):
        total = sum(int(sympy.mobius(n // d)) * traces[d] for d in sympy.divisors(n))
        counts.append(total // n)
    return counts


def _cycle_of(f: dict, start: str) -> tuple[int, list[str]]:
    """Preperiod length and the cycle reached by iterating ``f`` from ``start``."""
    seen: dict[str, int] = {}
    seq = []
    x = start
    while x not in seen:
        seen[x] = len(seq)
        seq.append(x)
        x = f[x]
    mu = seen[x]
    return mu, seq[mu:]


def _min_rotation(seq):
    return min(tuple(seq[k:] + seq[:k]) for k in range(len(seq)))


def _inverse(w: Weight):
    return 1 / w if isinstance(w, Fraction) else 1.0 / float(w)


@dataclass(frozen=True)
class SeparatingOrbit:
    """A minimal set of tilings separated by the y-axis.

    ``lambda_minus``/``lambda_plus`` are the multiplicative periods of the left
    and right quarter planes; ``c`` is their least common power when they are
    commensurable (then the set is one closed orbit).
    """

    pairs: tuple[tuple[str, int], ...]
    left_cycle: tuple[str, ...]
    right_cycle: tuple[str, ...]
    lambda_minus: object
    lambda_plus: object
    commensurable: bool
    c: object = None
    c_exponent: int | None = None
    key: tuple = ()
    flag: str = ""

    @property
    def c_float(self) -> float | None:
        return None if self.c is None else float(self.c)


@dataclass(frozen=True)
class Alignment:
    """Axis tiles at the first level where both sides and their mothers are periodic.

    Heights are relative to a gap mother whose lower edge is at height one.
    """

    left: str
    left_top: object
    left_bottom: object
    right: str
    right_top: object
    right_bottom: object


def psi_alignment(ws: WeightedSubstitution, a: str, i: int) -> Alignment:
    """Axis tiles of the limit tiling obtained by zooming into the gap after child ``i`` of ``a``."""
    rhs = ws.rules[a]
    if not 0 <= i < len(rhs) - 1:
        raise SubstitutionError(f"({a}, {i}) is not an inner gap")
    bm = boundary_maps(ws)
    mu_l, _ = _cycle_of(bm.minus, rhs[i][0])
    mu_r, _ = _cycle_of(bm.plus, rhs[i + 1][0])
    # a tile's height ratio comes from its mother, so the mother must be periodic too
    n0 = max(mu_l, mu_r) + 1
    left, ltop = rhs[i][0], _one(rhs[i][1])
    lbottom = rhs[i][1]
    right, rbottom = rhs[i + 1][0], rhs[i + 1][1]
    rtop = ltop
    for _ in range(n0):
        ltop, lbottom, left = lbottom, _scale(lbottom, bm.minus_weight[left]), bm.minus[left]
        rtop, rbottom, right = rbottom, _scale(rbottom, bm.plus_weight[right]), bm.plus[right]
    return Alignment(left, ltop, lbottom, right, rtop, rbottom)


def _one(w):
    return Fraction(1) if isinstance(w, Fraction) else 1.0


def _scale(x, w):
    if isinstance(x, Fraction) and isinstance(w, Fraction):
        return x * w
    return float(x) * float(w)


def _common_power(lam_plus, lam_minus, perron) -> tuple[bool, object]:
    if isinstance(lam_plus, Fraction) and isinstance(lam_minus, Fraction):
        pair = classify_base_group([1 / lam_plus, 1 / lam_minus])
        if not pair.is_lattice:
            return False, None
        kp = lattice_exponent(lam_plus, pair.base_exact)
        km = lattice_exponent(lam_minus, pair.base_exact)
        return True, pair.base_exact ** math.lcm(kp, km)
    if perron is None:
        raise SubstitutionError("cannot decide commensurability of non-rational boundary weights")
    kp = math.log(float(lam_plus)) / math.log(perron.lam)
    km = math.log(float(lam_minus)) / math.log(perron.lam)
    if abs(kp - round(kp)) > 1e-9 or abs(km - round(km)) > 1e-9:
        raise ConsistencyError("boundary cycle weight is not a power of the Perron root")
    return True, perron.lam ** math.lcm(round(kp), round(km))


def _alignment_key(ws, align: Alignment, c, left_cycle, right_cycle) -> tuple:
    """Rotation-minimal description of one scale period of the axis tiles."""
    bm = boundary_maps(ws)
    exact = isinstance(c, Fraction) and isinstance(align.left_top, Fraction) and isinstance(align.right_top, Fraction)
    events = []
    for side, color, top, bottom, f, wt in (
        (0, align.left, align.left_top, align.left_bottom, bm.minus, bm.minus_weight),
        (1, align.right, align.right_top, align.right_bottom, bm.plus, bm.plus_weight),
    ):
        # walk one full period c downwards from the top of this side
        floor = _scale(top, _inverse(c))
        while _gt(top, floor):
            events.append((top, side, color))
            top, bottom, color = bottom, _scale(bottom, wt[color]), f[color]
    best = None
    for anchor, _, _ in events:
        row = []
        for top, side, color in events:
            r = _div(top, anchor)
            while not _gt(1, r, strict=False):
                r = _scale(r, _inverse(c))
            while _gt(_inverse(c), r, strict=False):
                r = _scale(r, c)
            row.append((r if exact else round(math.log(float(r)) / math.log(float(c)), 9), side, color))
        row = tuple(sorted(row, key=lambda x: (-float(x[0]) if exact else -x[0], x[1], x[2])))
        if best is None or row < best:
            best = row
    return best


def _gt(x, y, strict: bool = True) -> bool:
    if isinstance(x, Fraction) and isinstance(y, Fraction) or isinstance(x, int) and isinstance(y, Fraction):
        return x > y if strict else x >= y
    tol = 1e-10 * max(abs(float(x)), abs(float(y)))
    return float(x) > float(y) + tol if strict else float(x) >= float(y) - tol


def _div(x, y):
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x / y
    return float(x) / float(y)


def separating_orbits(ws: WeightedSubstitution, base: BaseGroupResult | None = None) -> list[SeparatingOrbit]:
    """Minimal sets of tilings with the y-axis as separating line.

    Every inner gap ``(a, i)`` is followed to its eventual boundary cycles.
    Commensurable gaps become closed orbits, deduplicated by the aligned
    configuration of axis tiles; incommensurable ones are reported but carry
    no ``c``.
    """
    bm = boundary_maps(ws)
    found: dict[tuple, dict] = {}
    for a in ws.alphabet:
        for i in range(len(ws.rules[a]) - 1):
            _, lcyc = _cycle_of(bm.minus, ws.rules[a][i][0])
            _, rcyc = _cycle_of(bm.plus, ws.rules[a][i + 1][0])
            lam_minus = _inverse(product(bm.minus_weight[b] for b in lcyc))
            lam_plus = _inverse(product(bm.plus_weight[b] for b in rcyc))
            ok, c = _common_power(lam_plus, lam_minus, ws.perron)
            left_key, right_key = _min_rotation(lcyc), _min_rotation(rcyc)
            if ok:
                align = psi_alignment(ws, a, i)
                key = ("closed", _alignment_key(ws, align, c, lcyc, rcyc))
            else:
                key = ("open", left_key, right_key)
            entry = found.setdefault(key, dict(
                pairs=[], left_cycle=left_key, right_cycle=right_key,
                lambda_minus=lam_minus, lambda_plus=lam_plus, commensurable=ok, c=c, key=key,
            ))
            entry["pairs"].append((a, i))
    orbits = []
    for entry in found.values():
        c = entry["c"]
        c_exp = None
        if c is not None and base is not None and base.is_lattice:
            c_exp = base.exponent(c)
            if c_exp is None:
                raise ConsistencyError(f"orbit cycle {c} is not in the base group")
        flag = ""
        if entry["commensurable"] and not _close(entry["lambda_plus"], entry["lambda_minus"]):
            flag = "lambda+ != lambda-: orbit identification relies on the alignment key"
        orbits.append(SeparatingOrbit(
            pairs=tuple(entry["pairs"]), left_cycle=entry["left_cycle"], right_cycle=entry["right_cycle"],
            lambda_minus=entry["lambda_minus"], lambda_plus=entry["lambda_plus"],
            commensurable=entry["commensurable"], c=c, c_exponent=c_exp, key=entry["key"], flag=flag,
        ))
    if len(orbits) > len(ws.alphabet) ** 2 * max(len(r) for r in ws.rules.values()):
        raise ConsistencyError("separating orbit count exceeds the pair bound")
    return orbits


def closed_separating_orbits(orbits) -> list[SeparatingOrbit]:
    return [o for o in orbits if o.commensurable]


def _close(x, y) -> bool:
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x == y
    return abs(float(x) - float(y)) <= 1e-12 * abs(float(x))
