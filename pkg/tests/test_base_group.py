import math
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import assume, given
from hypothesis import strategies as st

from tilezeta.base_group import (
    base_group,
    child_graph,
    classify_base_group,
    compute_g,
    cycle_generators,
    edge_exponents,
    exponent_vector,
    lattice_exponent,
    simple_cycles,
)
from tilezeta.errors import ConsistencyError, SubstitutionError
from tilezeta.substitution import is_primitive, product

from conftest import exact_systems

F = Fraction


def test_child_graph_example31(systems):
    edges = [(e.src, e.index, e.dst, e.weight) for e in child_graph(systems["example31"]).edges]
    assert edges == [
        ("+", 0, "+", F(4, 9)), ("+", 1, "-", F(1, 9)), ("+", 2, "+", F(4, 9)),
        ("-", 0, "-", F(4, 9)), ("-", 1, "+", F(1, 9)), ("-", 2, "-", F(4, 9)),
    ]


def test_child_graph_small(systems):
    assert len(child_graph(systems["omega2"]).edges) == 2
    tm = child_graph(systems["thue_morse"]).edges
    assert len(tm) == 4 and {e.weight for e in tm} == {F(1, 2)}


def test_generators(systems):
    gens = cycle_generators(child_graph(systems["example31"]))
    assert F(4, 9) in gens and F(1, 81) in gens
    assert sorted(cycle_generators(child_graph(systems["omega2"]))) == [F(1, 2), F(1, 2)]
    lam = systems["fibonacci"].perron.lam
    fib = sorted(float(g) for g in cycle_generators(child_graph(systems["fibonacci"])))
    assert fib == pytest.approx([lam ** -2, lam ** -1], rel=1e-12)


def test_simple_cycles_are_simple(systems):
    for name, ws in systems.items():
        for cyc in simple_cycles(child_graph(ws)):
            nodes = [e.src for e in cyc]
            assert len(set(nodes)) == len(nodes)
            assert all(cyc[k].dst == cyc[(k + 1) % len(cyc)].src for k in range(len(cyc)))


@pytest.mark.parametrize("gens, kind, base", [
    ([F(4, 9), F(1, 81)], "dense", None),
    ([F(1, 2), F(1, 4)], "lattice", F(2)),
    ([F(1, 2)], "lattice", F(2)),
    ([F(1, 3), F(2, 3)], "dense", None),
    ([F(4, 9), F(8, 27)], "lattice", F(3, 2)),
    ([F(1, 4), F(1, 8)], "lattice", F(2)),
    ([F(1, 4), F(1, 16)], "lattice", F(4)),
])
def test_classify(gens, kind, base):
    result = classify_base_group(gens)
    assert result.kind == kind
    assert result.base_exact == base


def test_classify_needs_natural_data_for_algebraic():
    from tilezeta.substitution import AlgebraicWeight
    with pytest.raises(SubstitutionError):
        classify_base_group([AlgebraicWeight(0.3)])


@given(st.lists(st.sampled_from([F(1, 2), F(1, 4), F(1, 8), F(1, 3), F(4, 9), F(2, 3), F(1, 6)]),
                min_size=1, max_size=5), st.randoms())
def test_classify_invariant_under_order_and_duplicates(gens, rnd):
    shuffled = list(gens) + list(gens)
    rnd.shuffle(shuffled)
    a, b = classify_base_group(gens), classify_base_group(shuffled)
    assert (a.kind, a.base_exact) == (b.kind, b.base_exact)


def test_lattice_exponent():
    assert lattice_exponent(F(1, 8), F(2)) == -3
    assert lattice_exponent(F(16, 81), F(3, 2)) == -4
    assert lattice_exponent(F(1, 3), F(2)) is None
    assert exponent_vector(F(12, 5)) == {2: 2, 3: 1, 5: -1}


def test_natural_cycle_weights_are_lambda_powers():
    from tilezeta.substitution import natural_weights
    for rules in ({"1": "12", "2": "1"}, {"1": "12", "2": "21"}, {"1": "112", "2": "21"}):
        ws = natural_weights(rules)
        lam = ws.perron.lam
        for cyc in simple_cycles(child_graph(ws)):
            w = float(product(e.weight for e in cyc))
            assert abs(math.log(w) / math.log(lam) + len(cyc)) < 1e-9


class TestG:
    def test_dense_is_one(self, systems):
        ws = systems["example31"]
        g = compute_g(ws, base_group(ws))
        assert g["+"] == g["-"] == 1

    def test_omega2(self, systems):
        ws = systems["omega2"]
        assert compute_g(ws, base_group(ws))["1"] == 1

    def test_thue_morse(self, systems):
        ws = systems["thue_morse"]
        b = base_group(ws)
        g = compute_g(ws, b)
        assert (g["1"], g["2"]) == (1, F(1, 2))
        assert b.base_exact == 2

    def test_natural_lattice(self, systems):
        ws = systems["fibonacci"]
        b = base_group(ws)
        assert b.is_lattice and b.base == pytest.approx(ws.perron.lam)
        m = edge_exponents(ws, compute_g(ws, b), b)
        assert m == {("1", 0): 1, ("1", 1): 2}

    def test_misclassified_base_is_caught(self, systems):
        ws = systems["thue_morse"]
        wrong = classify_base_group([F(1, 4)])
        with pytest.raises(ConsistencyError):
            compute_g(ws, wrong)


@given(exact_systems(dyadic=True))
def test_eq5_holds_exactly_in_lattice_mode(ws):
    assume(is_primitive(ws)[0])
    b = base_group(ws)
    assert b.is_lattice
    g = compute_g(ws, b)
    m = edge_exponents(ws, g, b)
    for e in child_graph(ws).edges:
        assert g[e.dst] / (g[e.src] * e.weight) == b.base_exact ** m[(e.src, e.index)]
    for w in b.generators:
        assert b.exponent(w) is not None


@given(exact_systems(max_colors=2), st.integers(0, 2 ** 32))
def test_closed_walks_lie_in_cycle_group(ws, seed):
    """Weights of random closed walks are products of simple-cycle weights."""
    assume(is_primitive(ws)[0])
    graph = child_graph(ws)
    b = base_group(ws)
    rnd = random.Random(seed)
    for _ in range(5):
        a = rnd.choice(ws.alphabet)
        walk, node = [], a
        for _ in range(rnd.randint(1, 8)):
            e = rnd.choice(graph.out_edges(node))
            walk.append(e)
            node = e.dst
        # close the walk along the first path back to ``a`` found by search
        path = _path(graph, node, a)
        w = product(e.weight for e in walk + path)
        if b.is_lattice:
            assert b.exponent(w) is not None
        else:
            assert _in_group(w, b.generators)


def _path(graph, src, dst):
    frontier, seen = [(src, [])], {src}
    if src == dst:
        return []
    while frontier:
        node, p = frontier.pop(0)
        for e in graph.out_edges(node):
            if e.dst == dst:
                return p + [e]
            if e.dst not in seen:
                seen.add(e.dst)
                frontier.append((e.dst, p + [e]))
    raise AssertionError("graph not strongly connected")


def _in_group(w, gens):
    """Rational-span membership of the prime exponent vector of ``w``."""
    primes = sorted(set(exponent_vector(w)).union(*(exponent_vector(g) for g in gens)))
    A = sympy.Matrix([[exponent_vector(g).get(p, 0) for g in gens] for p in primes])
    v = sympy.Matrix([exponent_vector(w).get(p, 0) for p in primes])
    return A.rank() == A.row_join(v).rank()
