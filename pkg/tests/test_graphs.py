"""Graph snapshots, products, and connectivity predicates."""

import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynsync.adversaries import FunctionSource, make_source, out_star
from dynsync.graphs import (
    CT_IN_CONNECTED,
    T_COMPLETE,
    Digraph,
    GraphError,
    certify_window,
    complete_graph,
    cumulative,
    digraph,
    in_neighbors,
    is_c_in_connected,
    is_c_out_connected,
    is_strongly_connected,
    product,
    self_loop_graph,
)
from helpers import (
    brute_c_in_connected,
    brute_c_out_connected,
    brute_product,
    directed_cycle,
    random_digraph_oracle,
)


def constant_source(g: Digraph) -> FunctionSource:
    return FunctionSource(nodes=g.nodes, fn=lambda t: g)


class TestDigraph:
    def test_self_loops_required(self):
        with pytest.raises(GraphError):
            Digraph((0, 1), frozenset({(0, 0), (0, 1)}))

    def test_edge_endpoints_checked(self):
        with pytest.raises(GraphError):
            digraph((0, 1), [(0, 7)])

    def test_duplicate_nodes_rejected(self):
        with pytest.raises(GraphError):
            digraph((0, 0), [])

    def test_in_out_neighbors_sorted_positionally(self):
        g = digraph((3, 1, 2), [(3, 1), (2, 1)])
        assert g.in_neighbors(1) == (3, 1, 2)
        assert g.out_neighbors(3) == (3, 1)

    def test_unknown_node_errors(self):
        g = self_loop_graph((0, 1))
        with pytest.raises(GraphError):
            g.in_neighbors(9)


class TestInNeighbors:
    def test_self_loops_only(self):
        g = self_loop_graph((0, 1, 2))
        assert in_neighbors(g, 1) == {1}

    def test_complete(self):
        g = complete_graph((0, 1, 2, 3))
        assert in_neighbors(g, 2) == {0, 1, 2, 3}

    def test_star_leaf_sees_hub_and_itself(self):
        g = out_star((0, 1, 2, 3), 0)
        assert in_neighbors(g, 2) == {0, 2}
        assert in_neighbors(g, 0) == {0}


class TestProduct:
    def test_identity_product(self):
        g = self_loop_graph((0, 1, 2))
        assert product(g, g) == g

    def test_complete_absorbs_itself(self):
        k = complete_graph((0, 1, 2, 3))
        assert product(k, k) == k

    def test_four_cycle_reaches_two_steps(self):
        c = directed_cycle(4)
        got = product(c, c)
        # oracle: enumerate all two-hop relays directly
        assert got.edges == brute_product(c, c)
        assert got.out_neighbors(0) == (0, 1, 2)

    def test_node_set_mismatch(self):
        with pytest.raises(GraphError):
            product(self_loop_graph((0, 1)), self_loop_graph((0, 2)))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 8), st.integers(0, 10**6))
    def test_matches_definitional_product(self, n, seed):
        rng = random.Random(seed)
        g = random_digraph_oracle(n, rng)
        h = random_digraph_oracle(n, rng)
        assert product(g, h).edges == brute_product(g, h)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 7), st.integers(0, 10**6))
    def test_associative(self, n, seed):
        rng = random.Random(seed)
        a, b, c = (random_digraph_oracle(n, rng) for _ in range(3))
        assert product(product(a, b), c) == product(a, product(b, c))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 7), st.integers(0, 10**6))
    def test_self_loops_preserved_and_complete_absorbs(self, n, seed):
        rng = random.Random(seed)
        h = random_digraph_oracle(n, rng)
        k = complete_graph(h.nodes)
        p = product(h, h)
        assert all((u, u) in p.edges for u in p.nodes)
        assert product(k, h).is_complete()
        assert product(h, k).is_complete()


class TestCumulative:
    def test_single_round_window_is_the_graph(self):
        g = directed_cycle(5)
        src = constant_source(g)
        assert cumulative(src, 3, 3) == g

    def test_complete_windows_stay_complete(self):
        src = constant_source(complete_graph(range(4)))
        assert cumulative(src, 1, 7).is_complete()

    @pytest.mark.parametrize("n", range(2, 9))
    def test_cycle_fills_in_n_minus_1_rounds(self, n):
        src = constant_source(directed_cycle(n))
        got = cumulative(src, 1, max(1, n - 1))
        # oracle: fold the definitional product over the same window
        acc = directed_cycle(n)
        for _ in range(n - 2):
            acc = Digraph(acc.nodes, brute_product(acc, directed_cycle(n)))
        assert got.edges == acc.edges
        assert got.is_complete()

    def test_empty_window_rejected(self):
        src = constant_source(self_loop_graph((0, 1)))
        with pytest.raises(GraphError):
            cumulative(src, 5, 4)
        with pytest.raises(GraphError):
            cumulative(src, 0, 4)


class TestConnectivity:
    def test_complete_is_n_minus_1_in_connected(self):
        for n in range(2, 8):
            assert is_c_in_connected(complete_graph(range(n)), n - 1)

    def test_cycle_is_1_in_connected(self):
        for n in range(2, 8):
            assert is_c_in_connected(directed_cycle(n), 1)

    def test_disconnected_pair(self):
        assert not is_c_in_connected(self_loop_graph((0, 1)), 1)

    def test_out_variants(self):
        assert is_c_out_connected(complete_graph(range(5)), 4)
        assert is_c_out_connected(directed_cycle(5), 1)

    def test_c_range_validated(self):
        g = complete_graph(range(4))
        for bad in (0, 4, -1):
            with pytest.raises(GraphError):
                is_c_in_connected(g, bad)
            with pytest.raises(GraphError):
                is_c_out_connected(g, bad)

    def test_matches_brute_force_enumeration(self):
        rng = random.Random(7)
        for _ in range(60):
            n = rng.randint(2, 6)
            g = random_digraph_oracle(n, rng, p=rng.uniform(0.1, 0.9))
            for c in range(1, n):
                assert is_c_in_connected(g, c) == brute_c_in_connected(g, c)
                assert is_c_out_connected(g, c) == brute_c_out_connected(g, c)

    def test_in_out_equivalence_random(self):
        rng = random.Random(99)
        for _ in range(120):
            n = rng.randint(2, 7)
            g = random_digraph_oracle(n, rng, p=rng.uniform(0.1, 0.9))
            for c in range(1, n):
                assert is_c_in_connected(g, c) == is_c_out_connected(g, c)

    def test_strong_connectivity_cross_checked(self):
        rng = random.Random(21)
        for _ in range(80):
            n = rng.randint(2, 7)
            g = random_digraph_oracle(n, rng, p=rng.uniform(0.1, 0.7))
            nxg = nx.DiGraph()
            nxg.add_nodes_from(g.nodes)
            nxg.add_edges_from(g.edges)
            assert is_strongly_connected(g) == nx.is_strongly_connected(nxg)


class TestCertifyWindow:
    def test_constant_complete_any_window(self):
        src = constant_source(complete_graph(range(4)))
        for T in (1, 2, 3):
            assert certify_window(src, T_COMPLETE, 20, T=T)

    def test_rotating_cycle_is_11_connected(self):
        src = make_source("cT_cycle", range(5), seed=3, c=1, T=1)
        cert = certify_window(src, CT_IN_CONNECTED, 40, T=1, c=1)
        assert cert.ok and cert.windows_checked == 40

    def test_star_alternation_even_windows_complete(self):
        src = make_source("star_alternation", range(4), seed=0)
        # hub->leaves round, then leaves->hub round: relaying through the
        # hub needs the in-star first, so only even-start windows are complete
        assert not cumulative(src, 1, 2).is_complete()
        assert cumulative(src, 2, 3).is_complete()
        cert = certify_window(src, T_COMPLETE, 12, T=2)
        assert not cert.ok and cert.first_failure == 1

    def test_certificate_agrees_with_public_product_route(self):
        rng = random.Random(4)
        for seed in range(8):
            src = make_source("T_complete_random", range(5), seed=seed, T=2)
            cert = certify_window(src, T_COMPLETE, 15, T=2)
            oracle = all(cumulative(src, t, t + 1).is_complete() for t in range(1, 15))
            assert cert.ok == oracle

    def test_parameter_validation(self):
        src = constant_source(complete_graph(range(3)))
        with pytest.raises(GraphError):
            certify_window(src, "nonsense", 10, T=1)
        with pytest.raises(GraphError):
            certify_window(src, T_COMPLETE, 0, T=1)
        with pytest.raises(GraphError):
            certify_window(src, CT_IN_CONNECTED, 10, T=1)  # c missing
