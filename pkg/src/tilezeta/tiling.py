"""Colored tilings of the upper half-plane generated by a weighted substitution.

A tile ``(x1, x2) x (y1, y2)`` is admissible when its width equals its lower
height ``y1``.  Its children fill the strip below it: child ``i`` has width
``tau(a)_i * y1`` and spans heights ``(tau(a)_i * y1, y1)``.

Finite windows are produced from a phase, which fixes how the ancestors of
one tile are chosen; everything below the topmost ancestor follows from the
children rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

import numpy as np
import sympy

from .base_group import BaseGroupResult, GFunction, base_group, compute_g
from .errors import CapExceeded, ConsistencyError, SubstitutionError
from .orbits import _cycle_of, boundary_maps, psi_alignment
from .substitution import AlgebraicWeight, WeightedSubstitution, apply_sigma, is_primitive, tau_power

REL_TOL = 1e-9
MAX_LEVELS = 4096
DEFAULT_MAX_TILES = 10 ** 6
PHASE_DENOMINATOR = 2 ** 20


def _num(w):
    """Coordinates stay exact for rational weights and become floats otherwise."""
    return float(w) if isinstance(w, AlgebraicWeight) else w


def _mul(x, w):
    w = _num(w)
    if isinstance(x, Fraction) and isinstance(w, (Fraction, int)):
        return x * w
    return float(x) * float(w)


def _div(x, w):
    w = _num(w)
    if isinstance(x, Fraction) and isinstance(w, (Fraction, int)):
        return x / w
    return float(x) / float(w)


def _same(x, y) -> bool:
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x == y
    return abs(float(x) - float(y)) <= REL_TOL * max(1.0, abs(float(x)), abs(float(y)))


def _lt(x, y) -> bool:
    """``x < y``; for floats, values within the relative tolerance count as equal."""
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x < y
    return x < y and not _same(x, y)


@dataclass(frozen=True, order=True)
class Tile:
    x1: object
    x2: object
    y1: object
    y2: object

    @property
    def width(self):
        return self.x2 - self.x1

    @property
    def vertical_size(self):
        return self.y2 / self.y1

    def is_admissible(self) -> bool:
        return self.x1 < self.x2 and 0 < self.y1 < self.y2 and _same(self.width, self.y1)

    def translate(self, t) -> "Tile":
        return Tile(self.x1 + t, self.x2 + t, self.y1, self.y2)

    def scale(self, s) -> "Tile":
        return Tile(self.x1 * s, self.x2 * s, self.y1 * s, self.y2 * s)

    def meets(self, window) -> bool:
        """Open-rectangle intersection with ``(x0, x1, y0, y1)``."""
        x0, x1, y0, y1 = window
        return self.x1 < x1 and self.x2 > x0 and self.y1 < y1 and self.y2 > y0


@dataclass(frozen=True, order=True)
class ColoredTile:
    tile: Tile
    color: str


def children(ct: ColoredTile, ws: WeightedSubstitution) -> list[ColoredTile]:
    t = ct.tile
    rhs = ws.rules[ct.color]
    out = []
    x = t.x1
    for k, (c, w) in enumerate(rhs):
        y1 = _mul(t.y1, w)
        # the last child ends exactly on the mother's edge
        x2 = t.x2 if k == len(rhs) - 1 else x + y1
        out.append(ColoredTile(Tile(x, x2, y1, t.y1), c))
        x = x2
    return out


def _length_fn(ws: WeightedSubstitution):
    memo: dict = {}

    def length(a: str, k: int) -> int:
        if k == 0:
            return 1
        if (a, k) not in memo:
            memo[a, k] = sum(length(c, k - 1) for c in ws.sigma(a))
        return memo[a, k]

    return length


def descent_path(ws: WeightedSubstitution, a: str, k: int, i: int) -> list[tuple[str, int]]:
    """Mother colors and child indices from ``a`` down to its ``(k, i)``-descendant."""
    length = _length_fn(ws)
    if k < 0:
        raise SubstitutionError("k must be non-negative")
    if not 0 <= i < length(a, k):
        raise SubstitutionError(f"index {i} out of range for sigma^{k}({a}) of length {length(a, k)}")
    path = []
    for level in range(k, 0, -1):
        for j, c in enumerate(ws.sigma(a)):
            n = length(c, level - 1)
            if i < n:
                path.append((a, j))
                a = c
                break
            i -= n
    return path


def descendant(ct: ColoredTile, ws: WeightedSubstitution, k: int, i: int) -> ColoredTile:
    for _, j in descent_path(ws, ct.color, k, i):
        ct = children(ct, ws)[j]
    return ct


@dataclass(frozen=True)
class Patch:
    tiles: tuple[ColoredTile, ...]
    window: tuple

    def __post_init__(self):
        object.__setattr__(self, "tiles", tuple(sorted(self.tiles, key=_tile_order)))
        object.__setattr__(self, "window", tuple(self.window))

    def translate(self, t) -> "Patch":
        x0, x1, y0, y1 = self.window
        return Patch(tuple(ColoredTile(c.tile.translate(t), c.color) for c in self.tiles),
                     (x0 + t, x1 + t, y0, y1))

    def scale(self, s) -> "Patch":
        return Patch(tuple(ColoredTile(c.tile.scale(s), c.color) for c in self.tiles),
                     tuple(v * s for v in self.window))

    def colors(self) -> list[str]:
        return sorted({c.color for c in self.tiles})

    def to_dict(self) -> dict:
        enc = lambda v: str(v) if isinstance(v, Fraction) else float(v)
        return {
            "window": [enc(v) for v in self.window],
            "tiles": [
                {"x1": enc(c.tile.x1), "x2": enc(c.tile.x2), "y1": enc(c.tile.y1),
                 "y2": enc(c.tile.y2), "color": c.color}
                for c in self.tiles
            ],
        }

    @classmethod
    def from_dict(cls, data) -> "Patch":
        dec = lambda v: Fraction(v) if isinstance(v, str) else float(v)
        tiles = tuple(
            ColoredTile(Tile(dec(t["x1"]), dec(t["x2"]), dec(t["y1"]), dec(t["y2"])), t["color"])
            for t in data["tiles"]
        )
        return cls(tiles, tuple(dec(v) for v in data["window"]))


def _tile_order(ct: ColoredTile):
    t = ct.tile
    return (float(t.y1), float(t.x1), ct.color)


# phases

@dataclass(frozen=True)
class FixedPointCycle:
    """Self-similar tiling around a tile of ``color`` that is its own ``(k, index)``-descendant.

    ``origin`` is the fixed point of the similarity on the x-axis and
    ``scale`` the lower height of the distinguished tile (default ``g(color)``).
    """

    color: str
    k: int
    index: int
    origin: object = Fraction(0)
    scale: object = None


@dataclass(frozen=True)
class SeparatingPair:
    """Limit tiling of zooming into the gap after child ``i`` of ``a``; the gap lies on ``x = origin``.

    ``scale`` is the lower height of the gap's mother (default ``g(a)``).
    """

    a: str
    i: int
    origin: object = Fraction(0)
    scale: object = None


@dataclass(frozen=True)
class Random:
    """Equilibrium sample: ancestors drawn by the reversed chain of ``M_1``."""

    seed: int
    origin: object = Fraction(0)


Phase = Union[FixedPointCycle, SeparatingPair, Random]


def find_interior_cycle(ws: WeightedSubstitution, max_k: int = 6) -> FixedPointCycle | None:
    """Smallest ``(k, a, i)`` with ``sigma^k(a)_i == a`` strictly inside the word."""
    for k in range(1, max_k + 1):
        for a in ws.alphabet:
            word = apply_sigma(ws, [a], k)
            for i in range(1, len(word) - 1):
                if word[i] == a:
                    return FixedPointCycle(a, k, i)
    return None


def stationary_distribution(ws: WeightedSubstitution) -> dict:
    """Left Perron vector ``pi`` of the row-stochastic ``M_1``, normalised to sum one."""
    pos = {a: k for k, a in enumerate(ws.alphabet)}
    d = len(pos)
    if ws.is_exact:
        M = sympy.zeros(d, d)
        for a in ws.alphabet:
            for c, w in ws.rules[a]:
                M[pos[a], pos[c]] += sympy.Rational(w.numerator, w.denominator)
        null = (M.T - sympy.eye(d)).nullspace()
        if len(null) != 1:
            raise ConsistencyError("stationary vector of M_1 is not unique")
        v = null[0] / sum(null[0])
        return {a: Fraction(str(v[pos[a]])) for a in ws.alphabet}
    M = np.zeros((d, d))
    for a in ws.alphabet:
        for c, w in ws.rules[a]:
            M[pos[a], pos[c]] += float(w)
    vals, vecs = np.linalg.eig(M.T)
    k = int(np.argmin(abs(vals - 1)))
    v = np.real(vecs[:, k])
    v = v / v.sum()
    return {a: float(v[pos[a]]) for a in ws.alphabet}


def reversal_probabilities(ws: WeightedSubstitution, pi: dict | None = None) -> dict:
    """For each color, the law of its (mother color, child index): ``pi(b) tau(b)_j / pi(a)``."""
    pi = stationary_distribution(ws) if pi is None else pi
    out = {a: [] for a in ws.alphabet}
    for b in ws.alphabet:
        for j, (c, w) in enumerate(ws.rules[b]):
            out[c].append(((b, j), float(pi[b]) * float(w) / float(pi[c])))
    return out


def upward_steps(ws: WeightedSubstitution, color: str, rng: np.random.Generator,
                 probs: dict | None = None) -> Iterator[tuple[str, int]]:
    probs = reversal_probabilities(ws) if probs is None else probs
    while True:
        options = probs[color]
        p = np.array([q for _, q in options])
        (b, j) = options[rng.choice(len(options), p=p / p.sum())][0]
        yield b, j
        color = b


def upward_chain(ws: WeightedSubstitution, color: str, n: int, seed: int) -> list[tuple[str, int]]:
    rng = np.random.default_rng(seed)
    steps = upward_steps(ws, color, rng)
    return [next(steps) for _ in range(n)]


def _periodic(seq):
    while True:
        yield from seq


def _climb(ws, color, x1, y1, steps, covered, period: int | None = None) -> ColoredTile:
    """Follow ``steps`` upward until ``covered(tile)`` holds; return that ancestor."""
    b, j = next(steps)
    mark = None
    for level in range(MAX_LEVELS):
        tile = Tile(x1, x1 + y1, y1, _div(y1, ws.rules[b][j][1]))
        ct = ColoredTile(tile, color)
        ok, side = covered(tile)
        if ok:
            return ct
        if period and side is not None and level % period == 0:
            if mark is not None and mark[0] == side and _same(mark[1], (tile.x1, tile.x2)[side]):
                direction = "left" if side == 0 else "right"
                raise SubstitutionError(
                    f"window unreachable: ancestors along this cycle never grow to the {direction}"
                )
            mark = (side, (tile.x1, tile.x2)[side])
        y1 = tile.y2
        offset = sum((_num(w) for _, w in ws.rules[b][:j]), Fraction(0))
        x1 = x1 - _mul(y1, offset)
        color = b
        b, j = next(steps)
    raise CapExceeded(f"no covering ancestor within {MAX_LEVELS} levels")


def _cover_test(window, need_left=True, need_right=True, origin=None):
    x0, x1, _, y1w = window

    def covered(tile):
        if need_left and tile.x1 > x0:
            return False, 0
        if need_right and tile.x2 < x1:
            return False, 1
        if tile.y2 < y1w:
            return False, None
        return True, 0

    return covered


def _to_coord(v, exact: bool):
    if isinstance(v, AlgebraicWeight):
        return float(v)
    if exact:
        return Fraction(v)
    return float(v)


def _roots(ws, g: GFunction, base: BaseGroupResult, window, phase: Phase):
    """Top ancestors whose descendants cover ``window``."""
    exact = ws.is_exact and all(isinstance(v, Fraction) for v in window)
    x0, x1w, y0, y1w = window
    if isinstance(phase, FixedPointCycle):
        a, k, i = phase.color, phase.k, phase.index
        if k < 1:
            raise SubstitutionError("fixed-point cycle needs k >= 1")
        path = descent_path(ws, a, k, i)
        end = a
        for b, j in path:
            end = ws.rules[b][j][0]
        if end != a:
            raise SubstitutionError(f"sigma^{k}({a})_{i} is {end}, not {a}")
        weights = tau_power(ws, a, k)
        w = _num(weights[i][1])
        s = sum((_num(v) for _, v in weights[:i]), Fraction(0))
        y = _to_coord(g[a] if phase.scale is None else phase.scale, exact)
        origin = _to_coord(phase.origin, exact)
        rx1 = origin - _div(_mul(y, s), 1 - w)
        steps = _periodic(list(reversed(path)))
        return [_climb(ws, a, rx1, y, steps, _cover_test(window), period=k)]
    if isinstance(phase, SeparatingPair):
        if not 0 <= phase.i < len(ws.rules.get(phase.a, ())) - 1:
            raise SubstitutionError(f"({phase.a}, {phase.i}) is not an inner gap")
        bm = boundary_maps(ws)
        al = psi_alignment(ws, phase.a, phase.i)
        scale = _to_coord(g[phase.a] if phase.scale is None else phase.scale, exact)
        origin = _to_coord(phase.origin, exact)
        out = []
        if x0 < origin:
            _, cyc = _cycle_of(bm.minus, al.left)
            up = [(cyc[(cyc.index(al.left) - 1 - n) % len(cyc)], None) for n in range(len(cyc))]
            up = [(b, len(ws.rules[b]) - 1) for b, _ in up]
            ly1 = _mul(scale, al.left_bottom)
            covered = _cover_test(window, need_left=True, need_right=False)
            out.append(_climb(ws, al.left, origin - ly1, ly1, _periodic(up), covered, period=len(cyc)))
        if x1w > origin:
            _, cyc = _cycle_of(bm.plus, al.right)
            up = [(cyc[(cyc.index(al.right) - 1 - n) % len(cyc)], 0) for n in range(len(cyc))]
            ry1 = _mul(scale, al.right_bottom)
            covered = _cover_test(window, need_left=False, need_right=True)
            out.append(_climb(ws, al.right, origin, ry1, _periodic(up), covered, period=len(cyc)))
        return out
    if isinstance(phase, Random):
        ok, _ = is_primitive(ws)
        if not ok:
            raise SubstitutionError("equilibrium sampling needs a primitive substitution")
        rng = np.random.default_rng(phase.seed)
        pi = stationary_distribution(ws)
        colors = list(ws.alphabet)
        p = np.array([float(pi[c]) for c in colors])
        a = colors[rng.choice(len(colors), p=p / p.sum())]
        u, v = rng.random(), rng.random()
        y = _vertical_phase(g[a], base, y0, u, exact)
        frac = Fraction(v).limit_denominator(PHASE_DENOMINATOR) if exact else v
        origin = _to_coord(phase.origin, exact)
        steps = upward_steps(ws, a, rng)
        return [_climb(ws, a, origin - _mul(y, frac), y, steps, _cover_test(window))]
    raise SubstitutionError(f"unknown phase {phase!r}")


def _vertical_phase(ga, base: BaseGroupResult, ystar, u: float, exact: bool):
    """Lower height of the sampled tile, inside ``[ystar, lam * ystar)``.

    In a lattice this is the unique point of ``g(a) lam**Z`` there; for a
    dense group it is ``ystar * e**u``.
    """
    if base is None or not base.is_lattice:
        f = Fraction(math.exp(u)).limit_denominator(PHASE_DENOMINATOR) if exact else math.exp(u)
        return ystar * f
    if exact and base.base_exact is not None and isinstance(ga, Fraction):
        lam = base.base_exact
        n = math.floor(math.log(float(ystar / ga)) / math.log(float(lam)))
        y = ga * lam ** n
        while y < ystar:
            y *= lam
        while y / lam >= ystar:
            y /= lam
        return y
    lam = base.base
    n = math.ceil(math.log(float(ystar) / float(ga)) / math.log(lam) - 1e-12)
    return float(ga) * lam ** n


def expand_patch(ws: WeightedSubstitution, g: GFunction | None, base: BaseGroupResult | None,
                 window, phase: Phase, max_tiles: int = DEFAULT_MAX_TILES, check: bool = True) -> Patch:
    """All tiles meeting the open ``window`` for the tiling fixed by ``phase``.

    The result is verified with :func:`check_patch` unless ``check`` is false.
    """
    window = tuple(window)
    if len(window) != 4:
        raise SubstitutionError("window must be (x0, x1, y0, y1)")
    x0, x1, y0, y1 = window
    if not (x0 < x1 and 0 < y0 < y1):
        raise SubstitutionError("window needs x0 < x1 and 0 < y0 < y1")
    if base is None:
        base = base_group(ws)
    if g is None:
        g = compute_g(ws, base)
    found = []
    stack = _roots(ws, g, base, window, phase)
    while stack:
        ct = stack.pop()
        t = ct.tile
        if not (_lt(t.x1, x1) and _lt(x0, t.x2) and _lt(y0, t.y2)):
            continue
        if _lt(t.y1, y1):
            found.append(ct)
            if len(found) > max_tiles:
                raise CapExceeded(f"more than {max_tiles} tiles in the window")
        if _lt(y0, t.y1):
            stack.extend(children(ct, ws))
    patch = Patch(tuple(found), window)
    if check:
        problems = check_patch(patch, ws, g, base)
        if problems:
            raise ConsistencyError("generated patch is inconsistent: " + "; ".join(problems[:5]))
    return patch


def sample_equilibrium(ws: WeightedSubstitution, window, seed: int, g: GFunction | None = None,
                       base: BaseGroupResult | None = None) -> Patch:
    return expand_patch(ws, g, base, window, Random(seed))


def check_patch(patch: Patch, ws: WeightedSubstitution | None = None, g: GFunction | None = None,
                base: BaseGroupResult | None = None) -> list[str]:
    """Problems found in ``patch``; an empty list means it is valid.

    Checks admissibility, the coset condition ``y1 in g(color) G`` in lattice mode, and, band by band,
    that the tiles are disjoint and cover the window.
    """
    problems = []
    x0, x1, y0, y1 = patch.window
    for ct in patch.tiles:
        t = ct.tile
        if not t.is_admissible():
            problems.append(f"tile {t} is not admissible")
        if ws is not None and ct.color not in ws.alphabet:
            problems.append(f"tile {t} has unknown color {ct.color!r}")
        elif g is not None and base is not None and base.is_lattice:
            ratio = t.y1 / g[ct.color] if isinstance(g[ct.color], Fraction) else float(t.y1) / float(g[ct.color])
            if base.exponent(ratio) is None:
                problems.append(f"tile {t} of color {ct.color} is off its coset g(color) G")
    cuts = {y0, y1}
    for ct in patch.tiles:
        for y in (ct.tile.y1, ct.tile.y2):
            if y0 < y < y1:
                cuts.add(y)
    cuts = sorted(cuts, key=float)
    merged = [cuts[0]]
    for y in cuts[1:]:
        if not _same(y, merged[-1]):
            merged.append(y)
    by_bottom = sorted(patch.tiles, key=lambda c: float(c.tile.y1))
    for lo, hi in zip(merged, merged[1:]):
        mid = (lo + hi) / 2
        row = sorted((ct.tile for ct in by_bottom if ct.tile.y1 < mid < ct.tile.y2), key=lambda t: float(t.x1))
        row = [t for t in row if t.x2 > x0 and t.x1 < x1]
        if not row:
            problems.append(f"band ({lo}, {hi}) is uncovered")
            continue
        if row[0].x1 > x0 and not _same(row[0].x1, x0):
            problems.append(f"band ({lo}, {hi}) uncovered at the left edge")
        if row[-1].x2 < x1 and not _same(row[-1].x2, x1):
            problems.append(f"band ({lo}, {hi}) uncovered at the right edge")
        for s, t in zip(row, row[1:]):
            if not _same(s.x2, t.x1):
                kind = "overlap" if s.x2 > t.x1 else "gap"
                problems.append(f"{kind} between {s} and {t}")
    return problems
