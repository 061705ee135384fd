import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xnet.errors import GuardError, StructuralError
from xnet.metric import EUCLIDEAN
from xnet.topology import (
    BoundedTree,
    Merged,
    Network,
    binary_type,
    canonical_form,
    double_factorial,
    edge,
    enumerate_binary_trees,
    isomorphic,
    moustaches,
    quotient,
    quotient_with_map,
    regular_components,
    trace,
)


def star(center, leaves):
    return BoundedTree.from_edges([(center, x) for x in leaves], leaves)


def to_nx(tree):
    g = nx.Graph()
    for v in tree.vertices:
        g.add_node(v, lab=v if v in tree.boundary else "*")
    g.add_edges_from(tuple(e) for e in tree.edges)
    return g


def brute_force_binary_classes(n):
    """Labelled trees on n leaves + (n-2) interior vertices via Prufer codes, up to isomorphism."""
    leaves = list(range(n))
    inner = [f"i{k}" for k in range(n - 2)]
    verts = leaves + inner
    index = {v: k for k, v in enumerate(verts)}
    classes = []
    # interior vertices of degree 3 appear exactly twice in the Prufer code, leaves never
    for code in set(itertools.permutations([index[v] for v in inner] * 2)):
        g = nx.from_prufer_sequence(list(code))
        g = nx.relabel_nodes(g, dict(enumerate(verts)))
        for v in g:
            g.nodes[v]["lab"] = v if v in leaves else "*"
        if not any(nx.is_isomorphic(g, h, node_match=lambda a, b: a["lab"] == b["lab"]) for h in classes):
            classes.append(g)
    return classes


@pytest.mark.parametrize("n", [4, 5, 6])
def test_binary_tree_count_matches_brute_force(n):
    assert len(enumerate_binary_trees(range(n))) == len(brute_force_binary_classes(n))


@pytest.mark.parametrize("n", range(3, 8))
def test_binary_tree_count_is_double_factorial(n):
    # independent recursion: each new leaf subdivides one of the 2k-3 edges
    count = 1
    for k in range(3, n):
        count *= 2 * k - 3
    trees = enumerate_binary_trees(range(n))
    assert len(trees) == count == double_factorial(2 * n - 5)
    assert len({canonical_form(t) for t in trees}) == len(trees)
    assert all(t.is_binary() for t in trees)


def test_binary_tree_small_cases():
    assert len(enumerate_binary_trees("ab")) == 1
    (t,) = enumerate_binary_trees("abc")
    assert len(t.interior) == 1 and t.degree(t.interior[0]) == 3


def test_binary_tree_errors():
    with pytest.raises(StructuralError):
        enumerate_binary_trees(["a"])
    with pytest.raises(GuardError):
        enumerate_binary_trees(range(11))


def test_canonical_form_matches_networkx_isomorphism():
    trees = enumerate_binary_trees(range(5))
    perm = {"s0": "q2", "s1": "q0", "s2": "q1"}
    for a in trees:
        b = a.relabel(perm)
        assert isomorphic(a, b)
        for c in trees:
            same = nx.is_isomorphic(to_nx(a), to_nx(c), node_match=lambda x, y: x["lab"] == y["lab"])
            assert same == isomorphic(a, c)


def test_tree_validation():
    with pytest.raises(StructuralError):
        BoundedTree.from_edges([("a", "b"), ("b", "c"), ("c", "a")], "abc")
    with pytest.raises(StructuralError):
        BoundedTree.from_edges([("a", "s"), ("s", "b")], "ab")  # interior of degree 2
    with pytest.raises(StructuralError):
        BoundedTree.from_edges([("a", "b")], "abz")


def test_quotient_examples():
    path = BoundedTree.from_edges([("a", "b"), ("b", "c")], "abc")
    q = quotient(path, [edge("a", "b")])
    assert len(q.vertices) == 2 and len(q.edges) == 1
    assert isomorphic(quotient(path, []), path)
    (t4,) = [t for t in enumerate_binary_trees("abcd")][:1]
    inner_edge = next(e for e in t4.edges if e <= set(t4.interior))
    q = quotient(t4, [inner_edge])
    assert len(q.interior) == 1 and q.degree(q.interior[0]) == 4
    assert q.boundary == frozenset("abcd")
    with pytest.raises(StructuralError):
        quotient(path, [edge("a", "c")])


def test_quotient_merges_boundary_labels():
    path = BoundedTree.from_edges([("a", "b"), ("b", "c")], "abc")
    q, proj = quotient_with_map(path, [edge("a", "b")])
    assert isinstance(proj["a"], Merged) and proj["a"] == proj["b"]
    assert proj["a"] in q.boundary


def test_quotient_promotes_low_degree_blocks():
    t = enumerate_binary_trees("abcde")[0]
    # contract both edges from one interior vertex to leaves: that block keeps boundary status
    v = next(x for x in t.interior if sum(w in t.boundary for w in t.adjacency[x]) == 2)
    leaves = [w for w in t.adjacency[v] if w in t.boundary]
    q = quotient(t, [edge(v, leaves[0])])
    for x in q.vertices:
        if 1 <= q.degree(x) <= 2:
            assert x in q.boundary


@given(st.integers(4, 7), st.data())
def test_quotient_composition(n, data):
    t = data.draw(st.sampled_from(enumerate_binary_trees(range(n))))
    edges = sorted(t.edge_list(), key=str)
    flags = data.draw(st.lists(st.integers(0, 2), min_size=len(edges), max_size=len(edges)))
    s1 = {edge(*e) for e, f in zip(edges, flags) if f == 1}
    s2 = {edge(*e) for e, f in zip(edges, flags) if f == 2}
    q1, proj = quotient_with_map(t, s1)
    s2_img = {edge(proj[u], proj[v]) for u, v in (tuple(e) for e in s2)}
    assert isomorphic(quotient(q1, s2_img), quotient(t, s1 | s2))


def test_trace_examples():
    s = star("s", "abc")
    pos = {"a": [0, 0], "b": [1, 0], "c": [3, 0], "s": [1, 0]}
    net = Network(s, pos)
    tr = trace(net)
    assert len(tr.tree.vertices) == 3 and len(tr.tree.edges) == 2
    assert tr.length() == pytest.approx(net.length(), abs=1e-15)
    assert not tr.degenerate_edges()
    good = Network(s, {"a": [0, 0], "b": [1, 0], "c": [0, 1], "s": [0.3, 0.3]})
    assert trace(good) is good
    flat = Network(s, {v: [2.0, 2.0] for v in "abcs"})
    tr = trace(flat, eps=0.0)
    assert len(tr.tree.vertices) == 1 and tr.length() == 0


def test_regular_components_examples():
    t = enumerate_binary_trees(range(5))[3]
    (only,) = regular_components(t)
    assert isomorphic(only, t)
    path = BoundedTree.from_edges([("a", "b"), ("b", "c")], "abc")
    comps = regular_components(path)
    assert sorted(len(c.edges) for c in comps) == [1, 1]
    bowtie = BoundedTree.from_edges(
        [("s", "a"), ("s", "b"), ("s", "x"), ("t", "x"), ("t", "c"), ("t", "d")], "abcdx"
    )
    comps = regular_components(bowtie)
    assert len(comps) == 2
    for c in comps:
        assert {v for v in c.vertices if c.degree(v) == 1} == set(c.boundary)
    assert sum(len(c.edges) for c in comps) == len(bowtie.edges)
    assert all("x" in c.vertices for c in comps)


def test_moustaches_examples():
    assert len(moustaches(star("s", "abc"))) == 3
    assert len(moustaches(enumerate_binary_trees("abcd")[0])) == 2
    caterpillar = BoundedTree.from_edges(
        [("a", "p"), ("b", "p"), ("p", "q"), ("c", "q"), ("q", "r"), ("d", "r"), ("e", "r")], "abcde"
    )
    assert len(moustaches(caterpillar)) == 2
    assert moustaches(BoundedTree.from_edges([("a", "b")], "ab")) == []


def test_every_binary_tree_has_moustaches():
    for n in range(3, 8):
        assert all(moustaches(t) for t in enumerate_binary_trees(range(n)))


def test_binary_type_examples():
    t = enumerate_binary_trees("abcd")[1]
    assert binary_type(t) == [(t, frozenset())]
    four = star("s", "abcd")
    types = binary_type(four)
    assert len(types) == 3
    assert {canonical_form(b) for b, _ in types} == {canonical_form(x) for x in enumerate_binary_trees("abcd")}
    path = BoundedTree.from_edges([("a", "b"), ("b", "c")], "abc")
    types = binary_type(path)
    assert len(types) == 1 and types[0][0].is_binary()


@pytest.mark.parametrize(
    "trace_tree",
    [
        BoundedTree.from_edges([("a", "b"), ("b", "c")], "abc"),
        BoundedTree.from_edges([("s", "a"), ("s", "b"), ("s", "c"), ("s", "d"), ("s", "e")], "abcde"),
        BoundedTree.from_edges([("a", "b"), ("b", "c"), ("b", "d")], "abcd"),
        BoundedTree.from_edges(
            [("s", "a"), ("s", "b"), ("s", "x"), ("t", "x"), ("t", "c"), ("t", "d")], "abcdx"
        ),
    ],
)
def test_binary_type_witness_restores_trace(trace_tree):
    results = binary_type(trace_tree)
    assert results
    for b, contracted in results:
        assert b.is_binary()
        assert isomorphic(quotient(b, contracted), trace_tree)


def test_binary_type_matches_splitting_oracle():
    # oracle: every binary tree on the boundary whose contraction of some edge subset gives the trace
    tr = BoundedTree.from_edges([("a", "b"), ("b", "c"), ("b", "d")], "abcd")
    target = canonical_form(tr)
    expected = set()
    for t in enumerate_binary_trees("abcd"):
        edges = list(t.edges)
        for k in range(len(edges) + 1):
            for sub in itertools.combinations(edges, k):
                if canonical_form(quotient(t, sub)) == target:
                    expected.add(canonical_form(t))
    assert {canonical_form(b) for b, _ in binary_type(tr)} == expected


def test_binary_type_guard():
    big = star("s", range(13))
    with pytest.raises(GuardError):
        binary_type(big)


def test_network_lengths():
    s = star("s", "abc")
    net = Network(s, {"a": [0, 0], "b": [2, 0], "c": [0, 2], "s": [0, 0]}, EUCLIDEAN)
    assert net.length() == pytest.approx(4.0)
    assert net.boundary_diameter() == pytest.approx(math.sqrt(8))
    assert net.degenerate_edges() == {edge("a", "s")}
    with pytest.raises(StructuralError):
        Network(s, {"a": [0, 0], "b": [2, 0, 1], "c": [0, 2], "s": [0, 0]})
