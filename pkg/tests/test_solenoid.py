from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tilezeta.errors import SubstitutionError
from tilezeta.solenoid import (
    ZERO,
    DyadicElement,
    add,
    embed_dyadic,
    format_element,
    is_canonical,
    negate,
    normalize_tilde,
    parse_element,
    read_tiling,
    scale_pow2,
    subtract,
    tilde_partner,
    to_real,
    to_tiling,
)

F = Fraction

bits = st.lists(st.integers(0, 1), min_size=1, max_size=4).map(tuple)
elements = st.builds(
    lambda low, head, left, right: normalize_tilde(DyadicElement(low, head, left, right)),
    st.integers(-6, 6), st.lists(st.integers(0, 1), max_size=6).map(tuple), bits, bits,
)
dyadics = st.builds(lambda n, e: F(n, 2 ** e), st.integers(-200, 200), st.integers(0, 6))


class TestNormalize:
    def test_carry_from_minus_infinity(self):
        # ...111.0111 (ones below index 3, then 0 at 3) equals ...000 with a 1 at index 3
        raw = DyadicElement(0, (1, 1, 1, 0), (1,), (0,))
        assert normalize_tilde(raw) == embed_dyadic(8)

    def test_all_ones_is_zero(self):
        assert normalize_tilde(DyadicElement(0, (1, 1), (1,), (1,))) == ZERO

    def test_canonical_unchanged(self):
        x = embed_dyadic(F(5, 2))
        assert is_canonical(x) and normalize_tilde(x) == x

    @given(elements)
    def test_idempotent(self, x):
        assert normalize_tilde(x) == x
        assert x.left != (1,)

    @given(dyadics)
    def test_tilde_pairs_collapse(self, r):
        x = embed_dyadic(r)
        partner = tilde_partner(x)
        if x != ZERO:
            assert partner.left == (1,) and partner != x
        assert normalize_tilde(partner) == x

    @given(elements)
    def test_periods_primitive(self, x):
        for word in (x.left, x.right):
            n = len(word)
            assert all(word[:d] * (n // d) != word for d in range(1, n) if n % d == 0)


class TestArithmetic:
    def test_small_sums(self):
        assert add(embed_dyadic(1), embed_dyadic(1)) == embed_dyadic(2)
        assert add(embed_dyadic(F(1, 2)), embed_dyadic(F(1, 2))) == embed_dyadic(1)

    def test_negate_one(self):
        x = negate(embed_dyadic(1))
        # the bitwise complement ...1110111... is the non-canonical partner of ...111.000...
        raw = tilde_partner(x)
        assert raw.bit(0) == 0 and all(raw.bit(n) == 1 for n in range(-10, 10) if n != 0)
        assert x == embed_dyadic(-1) and to_real(x) == -1

    def test_scale(self):
        assert scale_pow2(embed_dyadic(3), 2) == embed_dyadic(12)

    def test_embed(self, frozen):
        x = embed_dyadic(F(5, 2))
        assert x.digits(-3, 4) == frozen["dyadic_5_2_digits_-3_4"]
        assert embed_dyadic(0) == ZERO

    def test_embed_rejects_non_dyadic(self):
        with pytest.raises(SubstitutionError):
            embed_dyadic(F(1, 3))

    @given(elements, elements, elements)
    def test_associative(self, x, y, z):
        assert add(add(x, y), z) == add(x, add(y, z))

    @given(elements, elements)
    def test_commutative(self, x, y):
        assert add(x, y) == add(y, x)

    @given(elements)
    def test_identity_and_inverse(self, x):
        assert add(x, ZERO) == x
        assert add(x, negate(x)) == ZERO
        assert negate(negate(x)) == x
        assert subtract(x, x) == ZERO

    @given(elements, elements, st.integers(-5, 5))
    def test_scaling_distributes(self, x, y, k):
        assert scale_pow2(add(x, y), k) == add(scale_pow2(x, k), scale_pow2(y, k))
        assert scale_pow2(scale_pow2(x, k), -k) == x

    @given(dyadics, dyadics)
    def test_embed_homomorphism(self, r, s):
        assert add(embed_dyadic(r), embed_dyadic(s)) == embed_dyadic(r + s)
        assert to_real(embed_dyadic(r)) == r

    def test_to_real_outside_image(self):
        assert to_real(DyadicElement(0, (), (1, 0), (0,))) is None


class TestText:
    def test_format(self):
        assert format_element(embed_dyadic(F(5, 2))) == "(0)101(0)e-1"

    @given(elements)
    def test_round_trip(self, x):
        assert parse_element(format_element(x)) == x

    def test_bad_text(self):
        with pytest.raises(SubstitutionError):
            parse_element("1.01")


class TestTiling:
    def test_zero(self):
        patch = to_tiling(ZERO, 4)
        assert {t.color for t in patch.tiles} == {"0"}
        assert all(t.tile.x1 == 0 for t in patch.tiles)

    def test_squares(self):
        for t in to_tiling(embed_dyadic(F(13, 8)), 6, "+-").tiles:
            assert t.tile.width == t.tile.y1 and t.tile.vertical_size == 2

    def test_round_trip_through_column(self, frozen):
        x = embed_dyadic(F(13, 8))
        digits = frozen["digits_13_8_-6_6"]
        plus = read_tiling(to_tiling(x, 6, "+"), "+")
        assert [plus[n] for n in range(-6, 6)] == digits

    def test_minus_side_reads_the_partner(self):
        """The column left of the axis reads the other representative of the same point."""
        x = embed_dyadic(F(13, 8))
        minus = read_tiling(to_tiling(x, 6, "-"), "-")
        partner = tilde_partner(x)
        assert [minus[n] for n in range(-6, 6)] == partner.digits(-6, 6)
        raw = DyadicElement(-6, tuple(minus[n] for n in range(-6, 6)), (1,), (0,))
        assert normalize_tilde(raw) == x

    @given(elements, st.integers(1, 4))
    def test_scaling_equivariance(self, x, k):
        big = to_tiling(scale_pow2(x, k), 6)
        small = to_tiling(x, 6).scale(Fraction(2) ** k)
        overlap = {t for t in small.tiles if t.tile.y2 <= Fraction(2) ** 6}
        assert overlap <= set(big.tiles)

    @given(elements, st.integers(-5, 5))
    def test_read_back(self, x, n):
        digits = read_tiling(to_tiling(x, 6))
        assert digits[n] == x.bit(n)
