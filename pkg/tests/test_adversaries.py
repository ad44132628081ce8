"""Dynamic-graph generators: determinism, class guarantees, constructions."""

import pickle
import random

import pytest

from dynsync.adversaries import (
    KINDS,
    make_source,
    out_star,
    in_star,
    shifted_ring,
    random_digraph,
)
from dynsync.graphs import (
    CT_IN_CONNECTED,
    T_COMPLETE,
    GraphError,
    certify_window,
    complete_graph,
    is_c_in_connected,
    is_strongly_connected,
    self_loop_graph,
)


class TestDeterminism:
    @pytest.mark.parametrize("kind,params", [
        ("T_complete_random", {"T": 3}),
        ("cT_cycle", {"c": 2, "T": 2}),
        ("eventually_connected_sparse", {"max_quiet": 4}),
    ])
    def test_same_seed_same_sequence(self, kind, params):
        a = make_source(kind, range(5), seed=77, **params)
        b = make_source(kind, range(5), seed=77, **params)
        assert [a.graph_at(t) for t in range(1, 30)] == [b.graph_at(t) for t in range(1, 30)]

    def test_different_seeds_differ_somewhere(self):
        a = make_source("T_complete_random", range(5), seed=1, T=3)
        b = make_source("T_complete_random", range(5), seed=2, T=3)
        assert any(a.graph_at(t) != b.graph_at(t) for t in range(1, 30))

    def test_query_order_does_not_matter(self):
        a = make_source("eventually_connected_sparse", range(4), seed=5, max_quiet=3)
        b = make_source("eventually_connected_sparse", range(4), seed=5, max_quiet=3)
        forward = [a.graph_at(t) for t in range(1, 25)]
        backward = [b.graph_at(t) for t in range(24, 0, -1)][::-1]
        assert forward == backward

    def test_pickle_round_trip(self):
        src = make_source("cT_cycle", range(6), seed=9, c=1, T=2)
        copy = pickle.loads(pickle.dumps(src))
        assert [src.graph_at(t) for t in range(1, 20)] == [copy.graph_at(t) for t in range(1, 20)]


class TestKinds:
    def test_constant_complete(self):
        src = make_source("constant_complete", range(4), seed=0)
        for t in (1, 5, 100):
            assert src.graph_at(t) == complete_graph(range(4))

    def test_self_loops_only(self):
        src = make_source("self_loops_only", range(3), seed=0)
        assert src.graph_at(7) == self_loop_graph(range(3))

    def test_star_alternation_phases(self):
        src = make_source("star_alternation", range(5), seed=0, hub=2)
        assert src.graph_at(1) == out_star(tuple(range(5)), 2)
        assert src.graph_at(2) == in_star(tuple(range(5)), 2)
        assert src.graph_at(7) == out_star(tuple(range(5)), 2)

    def test_star_alternation_lead_quiet(self):
        src = make_source("star_alternation", range(4), seed=0, lead_quiet=3)
        loops = self_loop_graph(range(4))
        assert all(src.graph_at(t) == loops for t in (1, 2, 3))
        assert src.graph_at(4) == out_star(tuple(range(4)), 0)

    def test_kw_vs_kuw_shape(self):
        nodes = tuple(range(5))
        src = make_source("kw_vs_kuw", nodes, seed=0, t0=6, excluded=4)
        before = src.graph_at(3)
        # the excluded node is isolated (self-loop only) while t <= t0
        assert before.in_neighbors(4) == (4,)
        assert before.out_neighbors(4) == (4,)
        rest = tuple(range(4))
        assert all(set(before.in_neighbors(u)) == set(rest) for u in rest)
        assert src.graph_at(7).is_complete()

    def test_t_complete_random_certifies(self):
        for seed in range(5):
            for T in (1, 2, 4):
                src = make_source("T_complete_random", range(5), seed=seed, T=T)
                assert certify_window(src, T_COMPLETE, 30, T=T)

    def test_ct_cycle_certifies(self):
        cases = [(1, 1), (1, 2), (2, 2), (3, 1)]
        for seed, (c, T) in enumerate(cases):
            src = make_source("cT_cycle", range(6), seed=seed, c=c, T=T)
            assert certify_window(src, CT_IN_CONNECTED, 40, T=T, c=c)

    def test_ct_cycle_11_every_round_strongly_connected(self):
        src = make_source("cT_cycle", range(5), seed=12, c=1, T=1)
        assert certify_window(src, CT_IN_CONNECTED, 100, T=1, c=1)
        assert all(is_strongly_connected(src.graph_at(t)) for t in range(1, 101))

    def test_eventually_connected_structure(self):
        src = make_source(
            "eventually_connected_sparse", range(5), seed=3, min_quiet=1, max_quiet=5, burst_len=2
        )
        loops = self_loop_graph(range(5))
        kinds = []
        for t in range(1, 80):
            g = src.graph_at(t)
            if g == loops:
                kinds.append("q")
            else:
                assert is_strongly_connected(g)
                kinds.append("B")
        text = "".join(kinds)
        assert "B" in text and "q" in text
        # bursts come in runs of burst_len and quiet gaps never exceed max_quiet
        for run in text.strip("q").split("q"):
            if run:
                assert len(run) % 2 == 0
        gap = 0
        for ch in text:
            if ch == "q":
                gap += 1
                assert gap <= 5
            else:
                gap = 0


class TestBuildingBlocks:
    def test_shifted_ring_is_c_in_connected(self):
        rng = random.Random(0)
        for n in range(3, 9):
            for c in range(1, n):
                g = shifted_ring(tuple(range(n)), c, rng)
                assert is_c_in_connected(g, c)

    def test_random_digraph_extremes(self):
        rng = random.Random(1)
        nodes = tuple(range(4))
        assert random_digraph(nodes, 0.0, rng) == self_loop_graph(nodes)
        assert random_digraph(nodes, 1.0, rng) == complete_graph(nodes)


class TestValidation:
    def test_unknown_kind(self):
        with pytest.raises(GraphError, match="unknown graph kind"):
            make_source("banana", range(3), seed=0)

    def test_unknown_parameter_named(self):
        with pytest.raises(GraphError, match="bogus"):
            make_source("cT_cycle", range(3), seed=0, c=1, T=1, bogus=2)

    def test_missing_parameter_named(self):
        with pytest.raises(GraphError, match="'T'"):
            make_source("T_complete_random", range(3), seed=0)

    def test_bad_values(self):
        with pytest.raises(GraphError):
            make_source("cT_cycle", range(3), seed=0, c=5, T=1)
        with pytest.raises(GraphError):
            make_source("star_alternation", range(3), seed=0, hub=9)
        with pytest.raises(GraphError):
            make_source("kw_vs_kuw", range(3), seed=0, t0=0)

    def test_round_indices_start_at_one(self):
        src = make_source("constant_complete", range(3), seed=0)
        with pytest.raises(GraphError):
            src.graph_at(0)

    def test_all_kinds_registered(self):
        assert set(KINDS) == {
            "constant_complete",
            "self_loops_only",
            "T_complete_random",
            "cT_cycle",
            "eventually_connected_sparse",
            "star_alternation",
            "kw_vs_kuw",
        }
