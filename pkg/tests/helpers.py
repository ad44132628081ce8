"""Shared test fixtures: independent oracles and scenario builders.

The oracles here deliberately re-derive results from definitions
(frozenset unions, explicit path enumeration) so they share no code with
the bitmask implementations they check.
"""

from __future__ import annotations

import itertools
import random

from dynsync.engine import Scenario
from dynsync.graphs import Digraph, digraph
from dynsync.protocols import ProtocolParams


def random_digraph_oracle(n: int, rng: random.Random, p: float = 0.35) -> Digraph:
    nodes = tuple(range(n))
    edges = [(u, v) for u in nodes for v in nodes if u != v and rng.random() < p]
    return digraph(nodes, edges)


def brute_product(g: Digraph, h: Digraph) -> frozenset:
    """Definitional product edge set: (u, v) iff some w relays u -> w -> v."""
    return frozenset(
        (u, v)
        for u in g.nodes
        for v in g.nodes
        if any((u, w) in g.edges and (w, v) in h.edges for w in g.nodes)
    )


def brute_gamma_in(g: Digraph, subset: frozenset) -> set:
    return {v for v in g.nodes for s in subset if (v, s) in g.edges}


def brute_c_in_connected(g: Digraph, c: int) -> bool:
    nodes = list(g.nodes)
    n = len(nodes)
    for size in range(1, n):
        for combo in itertools.combinations(nodes, size):
            subset = frozenset(combo)
            outside = brute_gamma_in(g, subset) - subset
            if len(outside) < min(c, n - size):
                return False
    return True


def brute_gamma_out(g: Digraph, subset: frozenset) -> set:
    return {v for v in g.nodes for s in subset if (s, v) in g.edges}


def brute_c_out_connected(g: Digraph, c: int) -> bool:
    nodes = list(g.nodes)
    n = len(nodes)
    for size in range(1, n):
        for combo in itertools.combinations(nodes, size):
            subset = frozenset(combo)
            outside = brute_gamma_out(g, subset) - subset
            if len(outside) < min(c, n - size):
                return False
    return True


def directed_cycle(n: int) -> Digraph:
    return digraph(range(n), ((i, (i + 1) % n) for i in range(n)))


def enumerate_broken_path(trace, v, u, t: int, t_end: int) -> bool:
    """Exhaustive dynamic-path enumeration oracle for broken_path_exists."""
    nodes = trace.node_ids
    starts = trace.scenario.starts
    length = t_end - t + 1
    for interior in itertools.product(nodes, repeat=length - 1):
        path = (v,) + interior + (u,)
        ok = all(
            (path[k], path[k + 1]) in trace.record(t + k).graph.edges for k in range(length)
        )
        if not ok:
            continue
        if any(starts[path[k]] > t + k for k in range(length)):
            return True
    return False


def counter_scenario(
    n: int,
    starts: dict,
    graph,
    algorithm: str = "A1",
    horizon: int | None = None,
    seed: int = 0,
    **params,
) -> Scenario:
    nodes = tuple(range(n))
    s_max = max(starts.values())
    if horizon is None:
        horizon = 4 * n + s_max + 10
    return Scenario(
        node_ids=nodes,
        starts=starts,
        graph=graph,
        params=ProtocolParams(algorithm, **params),
        horizon=horizon,
        master_seed=seed,
    )
