"""Directed-graph snapshots, graph products, and connectivity predicates.

A snapshot always carries a self-loop at every node, so iterated graph
products model "information can wait in place or hop along an edge each
round".  Connectivity of a snapshot is decided by exhaustive enumeration
of node subsets, which is exact and adequate at the certification scale
this package targets (n <= 16).

Node ids are opaque, totally ordered values (ints or strings); a graph
fixes their order once and all bitmask bookkeeping is positional.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

NodeId = Union[int, str]

MAX_ENUM_NODES = 16  # subset enumeration is 2**n; hard cap keeps it a desk-scale tool


class GraphError(ValueError):
    """Malformed graph, mismatched node sets, or out-of-range parameters."""


@dataclass(frozen=True)
class Digraph:
    """Immutable directed graph over a fixed ordered node set.

    Invariants enforced at construction: every node has a self-loop and
    every edge endpoint is a known node.  Adjacency in several shapes
    (per-node tuples and positional bitmasks) is precomputed because the
    simulator and the connectivity predicates hit them constantly.
    """

    nodes: tuple[NodeId, ...]
    edges: frozenset[tuple[NodeId, NodeId]]
    _index: dict = field(init=False, repr=False, compare=False)
    _in: dict = field(init=False, repr=False, compare=False)
    _out: dict = field(init=False, repr=False, compare=False)
    _in_masks: tuple = field(init=False, repr=False, compare=False)
    _out_masks: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        nodes = self.nodes
        if len(set(nodes)) != len(nodes):
            raise GraphError("duplicate node ids")
        index = {u: i for i, u in enumerate(nodes)}
        node_set = set(nodes)
        in_map: dict[NodeId, list[NodeId]] = {u: [] for u in nodes}
        out_map: dict[NodeId, list[NodeId]] = {u: [] for u in nodes}
        in_masks = [0] * len(nodes)
        out_masks = [0] * len(nodes)
        for u, v in self.edges:
            if u not in node_set or v not in node_set:
                raise GraphError(f"edge ({u!r}, {v!r}) has an endpoint outside the node set")
            out_map[u].append(v)
            in_map[v].append(u)
            out_masks[index[u]] |= 1 << index[v]
            in_masks[index[v]] |= 1 << index[u]
        for u in nodes:
            if (u, u) not in self.edges:
                raise GraphError(f"node {u!r} is missing its self-loop")
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_in", {u: tuple(sorted(vs, key=index.__getitem__)) for u, vs in in_map.items()})
        object.__setattr__(self, "_out", {u: tuple(sorted(vs, key=index.__getitem__)) for u, vs in out_map.items()})
        object.__setattr__(self, "_in_masks", tuple(in_masks))
        object.__setattr__(self, "_out_masks", tuple(out_masks))

    def __len__(self) -> int:
        return len(self.nodes)

    def index_of(self, u: NodeId) -> int:
        try:
            return self._index[u]
        except KeyError:
            raise GraphError(f"unknown node {u!r}") from None

    def in_neighbors(self, u: NodeId) -> tuple[NodeId, ...]:
        self.index_of(u)
        return self._in[u]

    def out_neighbors(self, u: NodeId) -> tuple[NodeId, ...]:
        self.index_of(u)
        return self._out[u]

    @property
    def in_masks(self) -> tuple[int, ...]:
        return self._in_masks

    @property
    def out_masks(self) -> tuple[int, ...]:
        return self._out_masks

    def in_matrix(self) -> np.ndarray:
        """uint8 matrix M with M[i, j] = 1 iff edge (node j -> node i); cached."""
        m = getattr(self, "_in_matrix", None)
        if m is None:
            n = len(self.nodes)
            m = np.zeros((n, n), dtype=np.uint8)
            for i, mask in enumerate(self._in_masks):
                while mask:
                    low = mask & -mask
                    m[i, low.bit_length() - 1] = 1
                    mask ^= low
            m.flags.writeable = False
            object.__setattr__(self, "_in_matrix", m)
        return m

    def is_complete(self) -> bool:
        full = (1 << len(self.nodes)) - 1
        return all(m == full for m in self._out_masks)


def digraph(nodes: Iterable[NodeId], edges: Iterable[tuple[NodeId, NodeId]] = ()) -> Digraph:
    """Build a snapshot from the given edges plus the mandatory self-loops."""
    nodes = tuple(nodes)
    all_edges = set(edges)
    all_edges.update((u, u) for u in nodes)
    return Digraph(nodes, frozenset(all_edges))


def complete_graph(nodes: Iterable[NodeId]) -> Digraph:
    nodes = tuple(nodes)
    return Digraph(nodes, frozenset((u, v) for u in nodes for v in nodes))


def self_loop_graph(nodes: Iterable[NodeId]) -> Digraph:
    nodes = tuple(nodes)
    return Digraph(nodes, frozenset((u, u) for u in nodes))


def in_neighbors(g: Digraph, u: NodeId) -> set[NodeId]:
    """All v with an edge v -> u; always contains u itself via the self-loop."""
    return set(g.in_neighbors(u))


def product(g: Digraph, h: Digraph) -> Digraph:
    """Relay composition: edge (u, v) iff some w has u -> w in g and w -> v in h."""
    if g.nodes != h.nodes:
        raise GraphError("graph product requires identical node sets")
    nodes = g.nodes
    n = len(nodes)
    h_rows = h.out_masks
    edges = []
    for i, u in enumerate(nodes):
        row = 0
        m = g.out_masks[i]
        while m:
            low = m & -m
            row |= h_rows[low.bit_length() - 1]
            m ^= low
        for j in range(n):
            if row >> j & 1:
                edges.append((u, nodes[j]))
    return Digraph(nodes, frozenset(edges))


def cumulative(src, t: int, t_end: int) -> Digraph:
    """The window product G(t) o G(t+1) o ... o G(t_end); G(t:t) is G(t) itself."""
    if t < 1 or t > t_end:
        raise GraphError(f"invalid window [{t}, {t_end}]")
    acc = src.graph_at(t)
    for k in range(t + 1, t_end + 1):
        acc = product(acc, src.graph_at(k))
    return acc


def _check_enum_args(g: Digraph, c: int) -> int:
    n = len(g.nodes)
    if n < 2:
        raise GraphError("connectivity is defined for graphs with at least two nodes")
    if n > MAX_ENUM_NODES:
        raise GraphError(f"subset enumeration is capped at {MAX_ENUM_NODES} nodes")
    if not 1 <= c < n:
        raise GraphError(f"c must satisfy 1 <= c < {n}, got {c}")
    return n


def _masks_c_in_connected(neighbor_masks: tuple[int, ...], c: int) -> bool:
    # For every proper non-empty subset S (as a bitmask m), the external
    # neighborhood |N(S) \ S| must be at least min(c, n - |S|).  The
    # neighborhood of S is built incrementally from the neighborhood of S
    # minus its lowest bit, so the whole sweep is O(2^n) word operations.
    n = len(neighbor_masks)
    full = (1 << n) - 1
    gamma = [0] * (full + 1)
    for m in range(1, full):
        low = m & -m
        gm = gamma[m ^ low] | neighbor_masks[low.bit_length() - 1]
        gamma[m] = gm
        need = n - m.bit_count()
        if need > c:
            need = c
        if (gm & ~m & full).bit_count() < need:
            return False
    return True


def is_c_in_connected(g: Digraph, c: int) -> bool:
    """Every proper non-empty subset has >= min(c, |complement|) external in-neighbors."""
    _check_enum_args(g, c)
    return _masks_c_in_connected(g.in_masks, c)


def is_c_out_connected(g: Digraph, c: int) -> bool:
    """Mirror of is_c_in_connected with out-neighborhoods."""
    _check_enum_args(g, c)
    return _masks_c_in_connected(g.out_masks, c)


def is_strongly_connected(g: Digraph) -> bool:
    if len(g.nodes) == 1:
        return True
    return is_c_in_connected(g, 1)


T_COMPLETE = "T_complete"
CT_IN_CONNECTED = "cT_in_connected"


@dataclass(frozen=True)
class WindowCertificate:
    """Finite-horizon certification of a dynamic-graph class.

    The class quantifies over every round; a certificate only covers the
    window starts 1 .. horizon - T + 1, which is recorded here so callers
    cannot mistake it for an unbounded guarantee.
    """

    kind: str
    T: int
    c: int | None
    horizon: int
    ok: bool
    first_failure: int | None
    windows_checked: int

    def __bool__(self) -> bool:
        return self.ok


def certify_window(src, kind: str, horizon: int, *, T: int, c: int | None = None) -> WindowCertificate:
    """Check every length-T window product in 1..horizon against a class predicate.

    kind is T_COMPLETE (window product complete) or CT_IN_CONNECTED
    (window product c in-connected).  The window product is folded on
    adjacency bitmask rows directly; graph-level ``product`` gives the
    same answer and the test suite holds the two routes together.
    """
    if kind not in (T_COMPLETE, CT_IN_CONNECTED):
        raise GraphError(f"unknown certification kind {kind!r}")
    if T < 1:
        raise GraphError("window length T must be >= 1")
    if horizon < T:
        raise GraphError("horizon must be at least the window length")
    nodes = src.nodes
    n = len(nodes)
    if kind == CT_IN_CONNECTED:
        if c is None:
            raise GraphError("c is required for cT_in_connected certification")
        if not 1 <= c < n:
            raise GraphError(f"c must satisfy 1 <= c < {n}, got {c}")
        if n > MAX_ENUM_NODES:
            raise GraphError(f"subset enumeration is capped at {MAX_ENUM_NODES} nodes")
    full = (1 << n) - 1
    first_failure = None
    checked = 0
    for t in range(1, horizon - T + 2):
        rows = list(src.graph_at(t).out_masks)
        for k in range(t + 1, t + T):
            nxt = src.graph_at(k).out_masks
            for i in range(n):
                row = 0
                m = rows[i]
                while m:
                    low = m & -m
                    row |= nxt[low.bit_length() - 1]
                    m ^= low
                rows[i] = row
        checked += 1
        if kind == T_COMPLETE:
            good = all(r == full for r in rows)
        else:
            in_masks = [0] * n
            for i in range(n):
                m = rows[i]
                while m:
                    low = m & -m
                    in_masks[low.bit_length() - 1] |= 1 << i
                    m ^= low
            good = _masks_c_in_connected(tuple(in_masks), c)
        if not good:
            first_failure = t
            break
    return WindowCertificate(
        kind=kind,
        T=T,
        c=c,
        horizon=horizon,
        ok=first_failure is None,
        first_failure=first_failure,
        windows_checked=checked,
    )
