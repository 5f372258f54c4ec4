"""Exact arithmetic on the 2-adic solenoid.

An element is a two-sided bit sequence ``alpha_n`` (``n`` in Z) read as
``sum alpha_n 2**n``.  Two sequences are identified when one ends in ``...0111``
below some index ``N`` and the other in ``...1000`` with the bits above ``N``
equal (a carry from minus infinity), and the all-ones sequence is zero.

Only eventually periodic sequences in both directions are represented::

    bits below ``low``:   left[0] = alpha[low-1], left[1] = alpha[low-2], ...  (repeating)
    bits from ``low``:    head[0] = alpha[low], head[1] = alpha[low+1], ...
    bits above the head:  right[0], right[1], ...                             (repeating)

This set contains the dyadic rationals (and all rationals) and is closed
under addition, negation and shifts.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import SubstitutionError
from .tiling import ColoredTile, Patch, Tile


def _primitive(word: tuple[int, ...]) -> tuple[int, ...]:
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and word[:d] * (n // d) == word:
            return word[:d]
    return word


@dataclass(frozen=True)
class DyadicElement:
    low: int
    head: tuple[int, ...]
    left: tuple[int, ...] = (0,)
    right: tuple[int, ...] = (0,)

    def __post_init__(self):
        for name in ("head", "left", "right"):
            word = tuple(int(b) for b in getattr(self, name))
            if any(b not in (0, 1) for b in word):
                raise SubstitutionError(f"{name} must contain bits 0/1 only")
            object.__setattr__(self, name, word)
        if not self.left or not self.right:
            raise SubstitutionError("periods must be nonempty")

    @property
    def top(self) -> int:
        """First index of the right periodic part."""
        return self.low + len(self.head)

    def bit(self, n: int) -> int:
        if n < self.low:
            return self.left[(self.low - 1 - n) % len(self.left)]
        if n < self.top:
            return self.head[n - self.low]
        return self.right[(n - self.top) % len(self.right)]

    def digits(self, lo: int, hi: int) -> list[int]:
        """``[alpha_lo, ..., alpha_(hi-1)]``."""
        return [self.bit(n) for n in range(lo, hi)]

    def __str__(self) -> str:
        return format_element(self)


def _below_periodic(x: DyadicElement, n: int) -> Fraction:
    p = len(x.left)
    bits = [x.bit(n - 1 - j) for j in range(p)]
    tail = sum(Fraction(b, 2 ** (j + 1)) for j, b in enumerate(bits))
    return Fraction(2) ** n * tail / (1 - Fraction(1, 2 ** p))


ZERO = DyadicElement(0, (), (0,), (0,))


def _from_bits(bit, low: int, top: int, p: int, q: int) -> DyadicElement:
    return DyadicElement(
        low,
        tuple(bit(n) for n in range(low, top)),
        tuple(bit(low - 1 - j) for j in range(p)),
        tuple(bit(top + j) for j in range(q)),
    )


def normalize_tilde(x: DyadicElement) -> DyadicElement:
    """Canonical representative of the class of ``x``.

    All-ones left tails are replaced by the all-zeros form (carrying into the
    lowest zero above them); periods are made primitive and the head is as
    short as possible, starting where the left period stops.
    """
    left = _primitive(x.left)
    right = _primitive(x.right)
    x = DyadicElement(x.low, x.head, left, right)
    if left == (1,):
        scan = range(x.low, x.top + len(right))
        n = next((k for k in scan if x.bit(k) == 0), None)
        if n is None:
            return ZERO
        top = max(x.top, n + 1)
        old = x
        x = _from_bits(lambda k: 0 if k < n else (1 if k == n else old.bit(k)), n, top, 1, len(right))
        left, right = x.left, x.right
    p, q = len(left), len(right)
    bit = x.bit
    # extend the left period upward as far as it goes
    b = x.low
    limit = x.top + p + q
    while b < limit and bit(b) == bit(b - p):
        b += 1
    if b >= limit:
        # purely periodic in both directions
        return _from_bits(bit, 0, 0, p, p)
    # extend the right period downward, but not below the left part
    t = max(x.top, b)
    while t > b and bit(t - 1) == bit(t - 1 + q):
        t -= 1
    return _from_bits(bit, b, t, p, q)


def is_canonical(x: DyadicElement) -> bool:
    return normalize_tilde(x) == x


def _carry_run(x: DyadicElement, y: DyadicElement, start: int, stop: int, eta: int) -> tuple[list[int], int]:
    out = []
    for n in range(start, stop):
        s = x.bit(n) + y.bit(n) + eta
        out.append(s & 1)
        eta = s >> 1
    return out, eta


def add(x: DyadicElement, y: DyadicElement) -> DyadicElement:
    """Solve ``2 eta_(n+1) + gamma_n = alpha_n + beta_n + eta_n`` and normalise.

    The carry below the common left period is the least fixed point of the
    one-period carry map (seeded with zero); the other fixed point gives the
    identified representative.
    """
    low = min(x.low, y.low)
    L = math.lcm(len(x.left), len(y.left))
    # carry entering index low - L, at the start of one full period
    _, c0 = _carry_run(x, y, low - L, low, 0)
    eta = c0 if c0 == 0 else _carry_run(x, y, low - L, low, 1)[1]
    tail, eta_low = _carry_run(x, y, low - L, low, eta)
    if eta_low != eta:
        raise SubstitutionError("carry did not settle on the left tail")
    R = math.lcm(len(x.right), len(y.right))
    top = max(x.top, y.top)
    head, eta = _carry_run(x, y, low, top, eta)
    seen = {}
    blocks = []
    # carries at period boundaries take two values, so they cycle within three periods
    while eta not in seen:
        seen[eta] = len(blocks)
        block, eta = _carry_run(x, y, top + len(blocks) * R, top + (len(blocks) + 1) * R, eta)
        blocks.append(block)
    start = seen[eta]
    for block in blocks[:start]:
        head += block
    period = [b for block in blocks[start:] for b in block]
    left = tuple(reversed(tail))
    return normalize_tilde(DyadicElement(low, tuple(head), left, tuple(period)))


def negate(x: DyadicElement) -> DyadicElement:
    """Complement every bit: ``x + negate(x)`` is the all-ones sequence, i.e. zero."""
    flip = lambda w: tuple(1 - b for b in w)
    return normalize_tilde(DyadicElement(x.low, flip(x.head), flip(x.left), flip(x.right)))


def subtract(x: DyadicElement, y: DyadicElement) -> DyadicElement:
    return add(x, negate(y))


def scale_pow2(x: DyadicElement, k: int) -> DyadicElement:
    """Multiply by ``2**k``: ``alpha_n`` moves to index ``n + k``."""
    return normalize_tilde(DyadicElement(x.low + k, x.head, x.left, x.right))


def embed_dyadic(r) -> DyadicElement:
    """Image of a dyadic rational ``r``: its binary expansion, complemented for ``r < 0``."""
    r = Fraction(r)
    den = r.denominator
    if den & (den - 1):
        raise SubstitutionError(f"{r} is not dyadic; only denominators 2**k embed exactly")
    if r < 0:
        return negate(embed_dyadic(-r))
    e = den.bit_length() - 1
    m = r.numerator
    head = tuple(int(b) for b in reversed(bin(m)[2:])) if m else ()
    return normalize_tilde(DyadicElement(-e, head))


def to_real(x: DyadicElement) -> Fraction | None:
    """The embedded real number when ``x`` lies in the image of R, else None."""
    x = normalize_tilde(x)
    if x.left != (0,):
        return None
    value = sum((Fraction(b) * Fraction(2) ** (x.low + k) for k, b in enumerate(x.head)), Fraction(0))
    if x.right == (0,):
        return value
    if x.right == (1,):
        return value - Fraction(2) ** x.top
    return None


def tilde_partner(x: DyadicElement) -> DyadicElement:
    """The other representative of the class (ending in ``...0111``), or ``x`` if there is none."""
    x = normalize_tilde(x)
    if x.left != (0,):
        return x
    n = next((k for k in range(x.low, x.top + len(x.right)) if x.bit(k) == 1), None)
    if n is None:
        return DyadicElement(0, (), (1,), (1,))
    top = max(x.top, n + 1)
    return _from_bits(lambda k: 1 if k < n else (0 if k == n else x.bit(k)), n, top, 1, len(x.right))


# the tiling of the half-plane by dyadic squares

def column_edges(x: DyadicElement, n: int) -> tuple[Fraction, Fraction]:
    """Left edges of the level-``n`` squares just right and just left of the y-axis."""
    plus = -sum_below(x, n)
    minus = plus - Fraction(2) ** n if plus == 0 else plus
    return plus, minus


def sum_below(x: DyadicElement, n: int) -> Fraction:
    """Exact ``sum_{k<n} alpha_k 2**k``, summing the periodic tail geometrically."""
    if n <= x.low:
        return _below_periodic(x, n)
    base = _below_periodic(x, x.low)
    return base + sum((Fraction(x.bit(k)) * Fraction(2) ** k for k in range(x.low, n)), Fraction(0))


def to_tiling(x: DyadicElement, depth: int, sides: str = "+") -> Patch:
    """Squares of the associated tiling met by the y-axis between heights ``2**-depth`` and ``2**depth``.

    ``sides`` selects the column just right (``"+"``) and/or just left
    (``"-"``) of the axis.  Tile colors are the types ``"0"`` (left half of
    the mother) and ``"1"`` (right half).
    """
    x = normalize_tilde(x)
    if depth < 1:
        raise SubstitutionError("depth must be positive")
    edges = {n: column_edges(x, n) for n in range(-depth, depth + 1)}
    tiles = set()
    for side in sides:
        k = {"+": 0, "-": 1}[side]
        for n in range(-depth, depth):
            size = Fraction(2) ** n
            x1 = edges[n][k]
            kind = (x1 - edges[n + 1][k]) / size
            tiles.add(ColoredTile(Tile(x1, x1 + size, size, 2 * size), str(int(kind))))
    xs = [t.tile.x1 for t in tiles] + [t.tile.x2 for t in tiles]
    window = (min(xs), max(xs), Fraction(2) ** -depth, Fraction(2) ** depth)
    return Patch(tuple(tiles), window)


def read_tiling(patch: Patch, side: str = "+") -> dict[int, int]:
    """Digits ``{n: alpha_n}`` read from the squares crossing the axis on one side."""
    out = {}
    for ct in patch.tiles:
        t = ct.tile
        hit = t.x1 <= 0 < t.x2 if side == "+" else t.x1 < 0 <= t.x2
        if hit:
            n = int(math.log2(t.y1))
            if Fraction(2) ** n != t.y1:
                raise SubstitutionError(f"square {t} is not at a dyadic level")
            out[n] = int(ct.color)
    return out


# text format: (right)head(left)e<low>, most significant bit first

_TEXT = re.compile(r"^\(([01]+)\)([01]*)\(([01]+)\)e(-?\d+)$")


def format_element(x: DyadicElement) -> str:
    r = "".join(str(b) for b in reversed(x.right))
    h = "".join(str(b) for b in reversed(x.head))
    l = "".join(str(b) for b in x.left)
    return f"({r}){h}({l})e{x.low}"


def parse_element(text: str) -> DyadicElement:
    """Inverse of :func:`format_element`; the result is normalised."""
    m = _TEXT.match(text.strip())
    if not m:
        raise SubstitutionError(f"cannot parse solenoid element {text!r}; expected (R)H(L)eN")
    r, h, l, low = m.groups()
    return normalize_tilde(DyadicElement(
        int(low),
        tuple(int(b) for b in reversed(h)),
        tuple(int(b) for b in l),
        tuple(int(b) for b in reversed(r)),
    ))
