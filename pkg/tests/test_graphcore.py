from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netbargain import graphcore as gc
from netbargain.errors import InputError

import corpus


def names(n):
    return [f"n{i}" for i in range(n)]


@st.composite
def random_graphs(draw, max_n=8):
    n = draw(st.integers(min_value=1, max_value=max_n))
    vs = names(n)
    pairs = [(vs[i], vs[j]) for i in range(n) for j in range(i + 1, n)]
    picked = [p for p in pairs if draw(st.booleans())]
    return gc.Graph.build(picked, vs)


# -- parsing ----------------------------------------------------------------


def test_parse_basic():
    g = gc.parse_edge_list(b"a b\nb c")
    assert g.vertices == ("a", "b", "c")
    assert g.edges == (("a", "b"), ("b", "c"))


def test_parse_dedup():
    g = gc.parse_edge_list(b"a b\na b")
    assert g.edges == (("a", "b"),)


def test_parse_rejects_loop_with_line_number():
    with pytest.raises(InputError, match="line 1"):
        gc.parse_edge_list(b"a a")


def test_parse_malformed_line():
    with pytest.raises(InputError, match="line 2"):
        gc.parse_edge_list(b"a b\na b c")


def test_parse_comments_and_blanks():
    g = gc.parse_edge_list(b"# header\n\na b\n  # trailing comment line\n")
    assert g.edges == (("a", "b"),)


def test_parse_empty_file():
    g = gc.parse_edge_list(b"")
    assert g.n == 0 and g.m == 0


@given(random_graphs())
@settings(max_examples=60, deadline=None)
def test_parse_serialize_roundtrip(g):
    # isolated vertices are not representable in edge-list text
    again = gc.parse_edge_list(gc.edge_list_text(g))
    assert again.edges == g.edges
    assert set(again.vertices) == {v for e in g.edges for v in e}


@given(random_graphs())
@settings(max_examples=40, deadline=None)
def test_json_roundtrip(g):
    assert gc.graph_from_json(gc.graph_to_json(g)) == g


def test_dot_export_marks_blocking_dashed():
    g = corpus.k3()
    dot = gc.to_dot(g, dashed_edges=[("b", "c")])
    assert '"b" -- "c" [style=dashed];' in dot
    assert '"a" -- "b";' in dot
    assert dot == gc.to_dot(g, dashed_edges=[("c", "b")])


# -- sparsity ---------------------------------------------------------------


def test_sparsity_k3():
    sp = gc.compute_sparsity(corpus.k3())
    assert sp.omega == 1 and sp.density == 1


def test_sparsity_k4():
    sp = gc.compute_sparsity(corpus.k4())
    assert sp.omega == Fraction(3, 2)
    assert sp.witness is not None and len(sp.witness) == 4


def test_sparsity_single_edge_clamped():
    sp = gc.compute_sparsity(corpus.single_edge())
    assert sp.density == Fraction(1, 2)
    assert sp.omega == 1


def test_sparsity_empty_graph():
    assert gc.compute_sparsity(gc.Graph.build()).omega == 1


def test_sparsity_witness_density_matches():
    for g in (corpus.k4(), corpus.petersen(), corpus.c5()):
        sp = gc.compute_sparsity(g)
        assert Fraction(g.induced_edge_count(sp.witness), len(sp.witness)) == sp.density


@given(random_graphs(max_n=7), st.data())
@settings(max_examples=60, deadline=None)
def test_sparsity_bounds_every_subset(g, data):
    sp = gc.compute_sparsity(g)
    subset = data.draw(st.sets(st.sampled_from(g.vertices), min_size=1))
    assert g.induced_edge_count(subset) <= sp.omega * len(subset)


@given(random_graphs(max_n=9))
@settings(max_examples=25, deadline=None)
def test_flow_path_agrees_with_enumeration(g):
    if g.m == 0:
        return
    density, _ = gc._densest_subset_brute(g)
    flow_density, flow_witness = gc._densest_subset_flow(g)
    assert flow_density == density
    assert Fraction(g.induced_edge_count(flow_witness), len(flow_witness)) == flow_density


def test_flow_path_on_larger_graph():
    # K5 block plus a 19-vertex tail: 24 vertices forces the max-flow search
    vs = [f"k{i}" for i in range(5)]
    edges = [(a, b) for i, a in enumerate(vs) for b in vs[i + 1:]]
    tail = ["k0"] + [f"t{i:02d}" for i in range(19)]
    edges += list(zip(tail, tail[1:]))
    g = gc.Graph.build(edges)
    assert g.n == 24
    sp = gc.compute_sparsity(g)
    assert sp.density == 2
    assert set(sp.witness) == set(vs)


# -- bipartiteness and doubling ---------------------------------------------


def test_is_bipartite_examples():
    assert gc.is_bipartite(corpus.c4()) is not None
    assert gc.is_bipartite(corpus.k3()) is None
    assert gc.is_bipartite(gc.Graph.build()) is not None


@given(random_graphs())
@settings(max_examples=50, deadline=None)
def test_bipartite_coloring_valid(g):
    coloring = gc.is_bipartite(g)
    if coloring is not None:
        assert all(coloring[u] != coloring[v] for u, v in g.edges)


def test_double_k3_is_six_cycle():
    d = gc.bipartite_double(corpus.k3())
    host = d.host
    assert host.n == 6 and host.m == 6
    assert all(host.degree(v) == 2 for v in host.vertices)
    assert gc.is_bipartite(host) is not None
    # a connected 2-regular bipartite graph on 6 vertices is the 6-cycle
    seen = {host.vertices[0]}
    frontier = [host.vertices[0]]
    while frontier:
        v = frontier.pop()
        for w in host.neighbors(v):
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    assert len(seen) == 6


def test_double_single_edge_two_disjoint():
    d = gc.bipartite_double(corpus.single_edge())
    assert d.host.m == 2
    assert all(d.host.degree(v) == 1 for v in d.host.vertices)


def test_double_p3_two_paths():
    d = gc.bipartite_double(corpus.p3())
    host = d.host
    assert host.m == 4
    degs = sorted(host.degree(v) for v in host.vertices)
    assert degs == [1, 1, 1, 1, 2, 2]
    b1, b2 = d.side_map["b"]
    assert host.degree(b1) == 2 and host.degree(b2) == 2


@given(random_graphs())
@settings(max_examples=40, deadline=None)
def test_double_edge_count_and_sparsity(g):
    d = gc.bipartite_double(g)
    assert d.host.m == 2 * g.m
    assert gc.compute_sparsity(d.host).omega <= 2 * gc.compute_sparsity(g).omega


def test_pull_back_symmetric_average():
    d = gc.bipartite_double(corpus.k3())
    half = Fraction(1, 2)
    x_host = {v: half for v in d.host.vertices}
    x, b = gc.pull_back(d, x_host, [])
    assert x == {"a": half, "b": half, "c": half}
    assert b == ()


def test_pull_back_collapses_both_copies():
    d = gc.bipartite_double(corpus.single_edge())
    pair = d.edge_map[("u", "v")]
    x, b = gc.pull_back(d, {v: Fraction(0) for v in d.host.vertices}, list(pair))
    assert b == (("u", "v"),)
    assert len(b) == 1 < 2


def test_pull_back_averages_asymmetric_mass():
    d = gc.bipartite_double(corpus.single_edge())
    u1, u2 = d.side_map["u"]
    x_host = {v: Fraction(0) for v in d.host.vertices}
    x_host[u1] = Fraction(1)
    x, _ = gc.pull_back(d, x_host, [])
    assert x["u"] == Fraction(1, 2)


@given(random_graphs(max_n=6), st.data())
@settings(max_examples=40, deadline=None)
def test_pull_back_preserves_feasibility(g, data):
    d = gc.bipartite_double(g)
    vals = data.draw(
        st.lists(
            st.sampled_from([Fraction(0), Fraction(1, 2), Fraction(1)]),
            min_size=d.host.n,
            max_size=d.host.n,
        )
    )
    x_host = dict(zip(d.host.vertices, vals))
    # block exactly the uncovered host edges: a feasible host pair by construction
    b_host = [e for e in d.host.edges if x_host[e[0]] + x_host[e[1]] < 1]
    x, b = gc.pull_back(d, x_host, b_host)
    b_set = set(b)
    for u, v in g.edges:
        if (u, v) not in b_set:
            assert x[u] + x[v] >= 1
    assert sum(x.values(), Fraction(0)) * 2 == sum(x_host.values(), Fraction(0))
