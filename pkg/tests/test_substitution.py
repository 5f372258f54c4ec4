from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from tilezeta.errors import SubstitutionError
from tilezeta.substitution import (
    AlgebraicWeight,
    WeightedSubstitution,
    apply_sigma,
    associate_matrix,
    canonicalize,
    is_primitive,
    natural_weights,
    perron_eigen,
    tau_power,
    validate,
)

from conftest import exact_systems

F = Fraction


def rules_of(report):
    return {v.rule for v in report.violations}


class TestValidate:
    def test_example31_is_valid(self, systems):
        assert validate(systems["example31"]).ok

    def test_weight_sum_violation(self):
        ws = WeightedSubstitution.exact({"a": [("a", "1/2"), ("a", "1/3")]})
        report = validate(ws)
        assert not report.ok
        assert rules_of(report) == {"weight-sum"}
        assert report.violations[0].color == "a"

    def test_unknown_color(self):
        ws = WeightedSubstitution.exact({"a": [("a", "1/2"), ("z", "1/2")]})
        assert "unknown-color" in rules_of(validate(ws))

    def test_non_expanding(self):
        ws = WeightedSubstitution.exact({"a": [("b", "1")], "b": [("a", "1")]})
        assert "non-expanding" in rules_of(validate(ws))

    def test_missing_rule_and_range(self):
        ws = WeightedSubstitution(("a", "b"), {"a": (("a", F(3, 2)), ("b", F(-1, 2)))})
        assert {"missing-rule", "weight-range"} <= rules_of(validate(ws))

    def test_empty_alphabet(self):
        assert "empty-alphabet" in rules_of(validate(WeightedSubstitution((), {})))

    def test_algebraic_sum_uses_tolerance(self):
        w = AlgebraicWeight(0.5 + 1e-14)
        ws = WeightedSubstitution(("a",), {"a": (("a", w), ("a", AlgebraicWeight(0.5)))})
        assert validate(ws).ok
        w = AlgebraicWeight(0.5 + 1e-9)
        ws = WeightedSubstitution(("a",), {"a": (("a", w), ("a", AlgebraicWeight(0.5)))})
        assert "weight-sum" in rules_of(validate(ws))

    def test_decimal_weights_rejected(self):
        with pytest.raises(SubstitutionError):
            WeightedSubstitution.exact({"a": [("a", "0.5"), ("a", "0.5")]})


class TestApplySigma:
    def test_thue_morse_square(self, systems, frozen):
        assert "".join(apply_sigma(systems["thue_morse"], ["1"], 2)) == frozen["thue_morse_sigma2_1"]

    def test_example31_square(self, systems, frozen):
        assert "".join(apply_sigma(systems["example31"], ["+"], 2)) == frozen["example31_sigma2_plus"]

    def test_unknown_color(self, systems):
        with pytest.raises(SubstitutionError):
            apply_sigma(systems["example31"], ["x"], 1)

    @given(exact_systems(), st.integers(0, 3))
    def test_homomorphism(self, ws, n):
        a = ws.alphabet[0]
        assert apply_sigma(ws, [a], n + 1) == apply_sigma(ws, list(ws.sigma(a)), n)

    @given(exact_systems(), st.integers(0, 4))
    def test_length_is_matrix_row_sum(self, ws, n):
        M = np.linalg.matrix_power(associate_matrix(ws).astype(object), n) if n else np.eye(len(ws.alphabet))
        for k, a in enumerate(ws.alphabet):
            assert len(apply_sigma(ws, [a], n)) == int(sum(M[k]))


class TestTauPower:
    def test_example31_entry_four(self, systems):
        assert tau_power(systems["example31"], "+", 2)[4] == ("+", F(1, 81))

    def test_example31_matches_direct_expansion(self, systems, frozen):
        expected = [(c, F(w)) for c, w in frozen["example31_tau2_plus"]]
        assert tau_power(systems["example31"], "+", 2) == expected

    def test_zero_is_identity(self, systems):
        assert tau_power(systems["example31"], "-", 0) == [("-", F(1))]

    def test_fibonacci_canonical_powers(self, systems):
        ws = systems["fibonacci"]
        lam = ws.perron.lam
        row = tau_power(ws, "1", 2)
        assert [w.power for _, w in row] == [-2, -3, -3, -4]
        for (_, w), e in zip(row, (-2, -3, -3, -4)):
            assert w.value == pytest.approx(lam ** e, rel=1e-12)
        assert sum(float(w) for _, w in row) == pytest.approx(1, abs=1e-12)

    @given(exact_systems(), st.integers(0, 4))
    def test_weights_sum_to_one(self, ws, n):
        for a in ws.alphabet:
            assert sum(w for _, w in tau_power(ws, a, n)) == 1

    @given(exact_systems(max_colors=2), st.integers(0, 3), st.integers(0, 2))
    def test_cocycle(self, ws, n, m):
        for a in ws.alphabet:
            composed = [
                (d, w * v) for c, w in tau_power(ws, a, n) for d, v in tau_power(ws, c, m)
            ]
            assert tau_power(ws, a, n + m) == composed


class TestMatrices:
    def test_associate_matrices(self):
        assert associate_matrix({"1": "12", "2": "1"}).tolist() == [[1, 1], [1, 0]]
        assert associate_matrix({"1": "12", "2": "12"}).tolist() == [[1, 1], [1, 1]]
        assert associate_matrix({"1": "11"}).tolist() == [[2]]

    def test_primitivity(self, systems):
        assert is_primitive(systems["example31"]) == (True, 1)
        assert is_primitive(systems["thue_morse"]) == (True, 1)
        assert is_primitive({"1": "11", "2": "21"})[0] is False
        assert is_primitive({"1": "12", "2": "1"}) == (True, 2)

    def test_perron_fibonacci(self, frozen):
        p = perron_eigen(np.array([[1, 1], [1, 0]]))
        assert abs(p.lam - frozen["natural"]["fibonacci_lambda"]) < 1e-12
        assert p.xi[0] == 1 and p.xi[1] == pytest.approx(1 / p.lam, rel=1e-12)
        assert p.charpoly == tuple(frozen["natural"]["fibonacci_charpoly"])

    @pytest.mark.parametrize("M, lam", [([[1, 1], [1, 1]], 2), ([[2, 1], [1, 2]], 3)])
    def test_perron_rational(self, M, lam):
        p = perron_eigen(np.array(M))
        assert p.lam_exact == lam and p.xi == (1.0, 1.0)

    def test_perron_rejects_reducible(self):
        with pytest.raises(SubstitutionError):
            perron_eigen(np.array([[2, 0], [1, 1]]))

    @given(st.lists(st.lists(st.integers(0, 3), min_size=3, max_size=3), min_size=3, max_size=3))
    def test_perron_residual_and_root(self, rows):
        M = np.array(rows)
        ok, _ = is_primitive({str(i): "".join(str(j) * M[i, j] for j in range(3)) for i in range(3)})
        assume(ok)
        p = perron_eigen(M)
        xi = np.array(p.xi)
        assert np.abs(M @ xi - p.lam * xi).max() / np.abs(xi).max() < 1e-12 * max(1, p.lam)
        assert abs(np.polyval([float(c) for c in p.charpoly], p.lam)) < 1e-12 * p.lam ** 3


class TestNaturalWeights:
    def test_two_adic(self):
        ws = canonicalize(natural_weights({"1": "12", "2": "12"}))
        assert ws.alphabet == ("1",)
        assert ws.rules["1"] == (("1", F(1, 2)), ("1", F(1, 2)))

    def test_thue_morse(self, frozen):
        ws = natural_weights({"1": "12", "2": "21"})
        expected = frozen["natural"]["thue_morse_weights"]
        assert ws.rules["1"] == (("1", F(expected[0][0])), ("2", F(expected[0][1])))
        assert ws.rules["2"] == (("2", F(1, 2)), ("1", F(1, 2)))

    def test_fibonacci(self, frozen):
        raw = natural_weights({"1": "12", "2": "1"})
        assert raw.rules["2"][0][1].value == pytest.approx(1, abs=1e-12)
        ws = canonicalize(raw)
        assert ws.alphabet == ("1",)
        (c1, w1), (c2, w2) = ws.rules["1"]
        assert (c1, c2) == ("1", "1")
        assert abs(w1.value - frozen["natural"]["fibonacci_weights"][0]) < 1e-12
        assert abs(w2.value - frozen["natural"]["fibonacci_weights"][1]) < 1e-12
        assert (w1.power, w2.power) == (-1, -2) and w1.xi == () and w2.xi == ()

    def test_trivial(self):
        with pytest.raises(SubstitutionError):
            natural_weights({"1": "1"})

    def test_not_primitive(self):
        with pytest.raises(SubstitutionError):
            natural_weights({"1": "11", "2": "21"})


class TestCanonicalize:
    def test_example31_unchanged(self, systems):
        ws = systems["example31"]
        assert canonicalize(ws) == ws

    def test_merge_identical_rules(self):
        ws = WeightedSubstitution.exact({"1": [("1", "1/2"), ("2", "1/2")], "2": [("1", "1/2"), ("2", "1/2")]})
        assert canonicalize(ws).rules == {"1": (("1", F(1, 2)), ("1", F(1, 2)))}

    def test_degenerate(self):
        ws = WeightedSubstitution.exact({"1": [("2", "1")], "2": [("1", "1")]})
        with pytest.raises(SubstitutionError, match="degenerate"):
            canonicalize(ws)

    @given(exact_systems())
    def test_idempotent(self, ws):
        once = canonicalize(ws)
        assert canonicalize(once) == once
        assert all(len(once.rules[a]) >= 2 for a in once.alphabet)
