"""Dynamic-graph adversary generators, one per connectivity class.

Every generator is a pure function of (seed, round index): replaying a
scenario reproduces the same graph sequence, and the sequence never
depends on anything the protocol does.  Each generator guarantees its
advertised class by construction; the bounded classes can additionally
be certified window-by-window with :func:`dynsync.graphs.certify_window`.

The constructions lean on two monotonicity facts about products of
self-looped graphs: the product of a chain is a superset of every single
graph in the chain, and both completeness and c in-connectivity are
preserved under adding edges.  A window therefore inherits the class of
any one snapshot inside it, so planting one "good" snapshot in every
length-T window is enough.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from .graphs import Digraph, GraphError, NodeId, complete_graph, digraph, self_loop_graph
from .rng import derive_seed, label_rng

CONSTANT_COMPLETE = "constant_complete"
SELF_LOOPS_ONLY = "self_loops_only"
T_COMPLETE_RANDOM = "T_complete_random"
CT_CYCLE = "cT_cycle"
EVENTUALLY_CONNECTED_SPARSE = "eventually_connected_sparse"
STAR_ALTERNATION = "star_alternation"
KW_VS_KUW = "kw_vs_kuw"

KINDS = (
    CONSTANT_COMPLETE,
    SELF_LOOPS_ONLY,
    T_COMPLETE_RANDOM,
    CT_CYCLE,
    EVENTUALLY_CONNECTED_SPARSE,
    STAR_ALTERNATION,
    KW_VS_KUW,
)


class GraphSource:
    """A dynamic graph: one Digraph per round index t >= 1."""

    nodes: tuple[NodeId, ...]

    def graph_at(self, t: int) -> Digraph:
        raise NotImplementedError


@dataclass
class FunctionSource(GraphSource):
    """Wrap an arbitrary round -> Digraph function (used by tests and ad-hoc scenarios)."""

    nodes: tuple[NodeId, ...]
    fn: Callable[[int], Digraph]

    def graph_at(self, t: int) -> Digraph:
        if t < 1:
            raise GraphError("round indices start at 1")
        return self.fn(t)


def random_digraph(nodes: tuple[NodeId, ...], edge_prob: float, rng: random.Random) -> Digraph:
    """Each ordered non-self pair independently with probability edge_prob, plus self-loops."""
    edges = []
    for u in nodes:
        for v in nodes:
            if u != v and rng.random() < edge_prob:
                edges.append((u, v))
    return digraph(nodes, edges)


def shifted_ring(nodes: tuple[NodeId, ...], c: int, rng: random.Random) -> Digraph:
    """A randomly relabeled ring with edges to the next c nodes along the cycle.

    This graph is c in-connected: any non-empty proper subset is entered
    by at least min(c, |complement|) outside nodes, because every maximal
    run of outside nodes feeds its last min(run length, c) members into
    the subset element that follows the run.
    """
    n = len(nodes)
    if not 1 <= c < n:
        raise GraphError(f"shift count must satisfy 1 <= c < {n}, got {c}")
    order = list(nodes)
    rng.shuffle(order)
    edges = []
    for i, u in enumerate(order):
        for k in range(1, c + 1):
            edges.append((u, order[(i + k) % n]))
    return digraph(nodes, edges)


def out_star(nodes: tuple[NodeId, ...], hub: NodeId) -> Digraph:
    return digraph(nodes, ((hub, v) for v in nodes if v != hub))


def in_star(nodes: tuple[NodeId, ...], hub: NodeId) -> Digraph:
    return digraph(nodes, ((v, hub) for v in nodes if v != hub))


@dataclass
class GeneratedSource(GraphSource):
    """A named generator instantiated with a seed; caches one Digraph per round."""

    kind: str
    nodes: tuple[NodeId, ...]
    seed: int
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)
    _build: Callable = field(init=False, repr=False, default=None)

    def __post_init__(self) -> None:
        try:
            spec = _GENERATORS[self.kind]
        except KeyError:
            raise GraphError(f"unknown graph kind {self.kind!r}") from None
        params = dict(spec.defaults)
        unknown = set(self.params) - set(spec.defaults) - set(spec.required)
        if unknown:
            raise GraphError(f"unknown parameter {sorted(unknown)[0]!r} for graph kind {self.kind!r}")
        missing = set(spec.required) - set(self.params)
        if missing:
            raise GraphError(f"graph kind {self.kind!r} requires parameter {sorted(missing)[0]!r}")
        params.update(self.params)
        self.params = params
        self._build = spec.prepare(self.nodes, self.seed, params)

    def graph_at(self, t: int) -> Digraph:
        if t < 1:
            raise GraphError("round indices start at 1")
        g = self._cache.get(t)
        if g is None:
            g = self._build(t)
            self._cache[t] = g
        return g

    def __reduce__(self):
        # closures don't pickle; rebuild from the defining arguments
        return (make_source_dict, (self.kind, self.nodes, self.seed, dict(self.params)))


def make_source_dict(kind: str, nodes, seed: int, params: dict) -> "GeneratedSource":
    return GeneratedSource(kind=kind, nodes=tuple(nodes), seed=seed, params=dict(params))


@dataclass(frozen=True)
class _GenSpec:
    required: tuple[str, ...]
    defaults: dict
    prepare: Callable  # (nodes, seed, params) -> (t -> Digraph)


def _prepare_constant_complete(nodes, seed, params):
    g = complete_graph(nodes)
    return lambda t: g


def _prepare_self_loops(nodes, seed, params):
    g = self_loop_graph(nodes)
    return lambda t: g


def _prepare_t_complete_random(nodes, seed, params):
    T = params["T"]
    p = params["edge_prob"]
    if T < 1:
        raise GraphError("T must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise GraphError("edge_prob must lie in [0, 1]")
    # one complete snapshot per T-round phase class; every length-T window
    # then contains exactly one, which makes the window product complete
    phase = label_rng(seed, "phase").randrange(T)
    complete = complete_graph(nodes)

    def build(t: int) -> Digraph:
        if t % T == phase:
            return complete
        return random_digraph(nodes, p, label_rng(seed, "round", t))

    return build


def _prepare_ct_cycle(nodes, seed, params):
    c, T, p = params["c"], params["T"], params["extra_edge_prob"]
    n = len(nodes)
    if T < 1:
        raise GraphError("T must be >= 1")
    if not 1 <= c < n:
        raise GraphError(f"c must satisfy 1 <= c < {n}, got {c}")
    if not 0.0 <= p <= 1.0:
        raise GraphError("extra_edge_prob must lie in [0, 1]")
    phase = label_rng(seed, "phase").randrange(T)

    def build(t: int) -> Digraph:
        rng = label_rng(seed, "round", t)
        if t % T == phase:
            return shifted_ring(nodes, c, rng)
        return random_digraph(nodes, p, rng)

    return build


def _prepare_eventually_connected(nodes, seed, params):
    lo, hi, burst = params["min_quiet"], params["max_quiet"], params["burst_len"]
    if not 0 <= lo <= hi:
        raise GraphError("need 0 <= min_quiet <= max_quiet")
    if burst < 1:
        raise GraphError("burst_len must be >= 1")
    quiet = self_loop_graph(nodes)
    schedule_rng = label_rng(seed, "schedule")
    # burst_starts[i] = first round of the i-th burst; extended on demand
    burst_starts: list[int] = []
    cursor = [1]

    def extend_past(t: int) -> None:
        while not burst_starts or burst_starts[-1] + burst - 1 < t:
            start = cursor[0] + schedule_rng.randint(lo, hi)
            burst_starts.append(start)
            cursor[0] = start + burst

    def build(t: int) -> Digraph:
        extend_past(t)
        for start in reversed(burst_starts):
            if start <= t:
                if t < start + burst:
                    return shifted_ring(nodes, 1, label_rng(seed, "round", t))
                break
        return quiet

    return build


def _prepare_star_alternation(nodes, seed, params):
    hub = params["hub"] if params["hub"] is not None else nodes[0]
    lead = params["lead_quiet"]
    if hub not in nodes:
        raise GraphError(f"hub {hub!r} is not a node")
    if lead < 0:
        raise GraphError("lead_quiet must be >= 0")
    quiet = self_loop_graph(nodes)
    star = out_star(nodes, hub)
    star_t = in_star(nodes, hub)

    def build(t: int) -> Digraph:
        if t <= lead:
            return quiet
        return star if (t - lead) % 2 == 1 else star_t

    return build


def _prepare_kw_vs_kuw(nodes, seed, params):
    excluded = params["excluded"] if params["excluded"] is not None else nodes[-1]
    t0 = params["t0"]
    if excluded not in nodes:
        raise GraphError(f"excluded node {excluded!r} is not a node")
    if t0 < 1:
        raise GraphError("t0 must be >= 1")
    rest = tuple(u for u in nodes if u != excluded)
    before = digraph(nodes, ((u, v) for u in rest for v in rest if u != v))
    after = complete_graph(nodes)

    def build(t: int) -> Digraph:
        return before if t <= t0 else after

    return build


_GENERATORS = {
    CONSTANT_COMPLETE: _GenSpec((), {}, _prepare_constant_complete),
    SELF_LOOPS_ONLY: _GenSpec((), {}, _prepare_self_loops),
    T_COMPLETE_RANDOM: _GenSpec(("T",), {"edge_prob": 0.3}, _prepare_t_complete_random),
    CT_CYCLE: _GenSpec(("c", "T"), {"extra_edge_prob": 0.15}, _prepare_ct_cycle),
    EVENTUALLY_CONNECTED_SPARSE: _GenSpec(
        ("max_quiet",), {"min_quiet": 0, "burst_len": 1}, _prepare_eventually_connected
    ),
    STAR_ALTERNATION: _GenSpec((), {"hub": None, "lead_quiet": 0}, _prepare_star_alternation),
    KW_VS_KUW: _GenSpec(("t0",), {"excluded": None}, _prepare_kw_vs_kuw),
}


def make_source(kind: str, nodes, seed: int, **params) -> GeneratedSource:
    """Instantiate a generator; unknown kinds or parameters raise GraphError."""
    return GeneratedSource(kind=kind, nodes=tuple(nodes), seed=seed, params=params)


def generate(kind: str, nodes, seed: int, t: int, **params) -> Digraph:
    """One-shot form of make_source(...).graph_at(t)."""
    return make_source(kind, nodes, seed, **params).graph_at(t)
