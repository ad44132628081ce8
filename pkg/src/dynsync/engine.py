"""Deterministic round-based execution of a scenario.

A round is communication-closed: every node (active or passive) offers a
message, the round's graph decides who receives what, then all active
nodes step their state machines.  Nothing crosses rounds, so the whole
trace is a pure function of the scenario and replays byte-identically.

Passive nodes hold no state: they offer a heartbeat and their inbox is
discarded.  A node activates at the beginning of its start round and
already broadcasts a real message in that round.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .adversaries import GraphSource, make_source
from .graphs import Digraph, NodeId
from .protocols import (
    NULL,
    Message,
    NodeState,
    ProtocolParams,
    emit,
    init_state,
    message_bytes,
    step,
)
from .rng import derive_seed, node_stream


class ScenarioError(ValueError):
    """A scenario that violates its own invariants, reported before round 1."""


@dataclass(frozen=True)
class GraphSpec:
    """Serializable description of a generated dynamic graph (kind + parameters)."""

    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    node_ids: tuple[NodeId, ...]
    starts: dict
    graph: object  # GraphSpec or a prebuilt GraphSource
    params: ProtocolParams
    horizon: int
    master_seed: int
    terminate_on_detect: bool = False

    def __post_init__(self) -> None:
        if not self.node_ids:
            raise ScenarioError("scenario needs at least one node")
        if len(set(self.node_ids)) != len(self.node_ids):
            raise ScenarioError("duplicate node ids")
        missing = [u for u in self.node_ids if u not in self.starts]
        if missing:
            raise ScenarioError(f"node {missing[0]!r} has no start round")
        extra = [u for u in self.starts if u not in self.node_ids]
        if extra:
            raise ScenarioError(f"start round given for unknown node {extra[0]!r}")
        bad = [u for u in self.node_ids if self.starts[u] < 1]
        if bad:
            raise ScenarioError(f"start round of node {bad[0]!r} must be >= 1")
        if self.horizon < self.s_max:
            raise ScenarioError(
                f"horizon {self.horizon} is before the last start round {self.s_max}"
            )

    @property
    def s_max(self) -> int:
        return max(self.starts[u] for u in self.node_ids)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, master_seed=seed)


def resolve_source(scenario: Scenario) -> GraphSource:
    """The dynamic graph of a run; generated specs are seeded from ("graph",)."""
    g = scenario.graph
    if isinstance(g, GraphSpec):
        return make_source(
            g.kind, scenario.node_ids, derive_seed(scenario.master_seed, "graph"), **g.params
        )
    if isinstance(g, GraphSource):
        if tuple(g.nodes) != scenario.node_ids:
            raise ScenarioError("graph source node set differs from the scenario's")
        return g
    raise ScenarioError(f"graph must be a GraphSpec or GraphSource, got {type(g).__name__}")


def rng_stream_for(master_seed: int, node: NodeId):
    """Per-node private random stream; see dynsync.rng.node_stream."""
    return node_stream(master_seed, node)


@dataclass(frozen=True)
class RoundRecord:
    """Everything round t did, indexed positionally by scenario node order.

    ``before`` holds states at the beginning of the round (wake-up init
    included), ``after`` at the end; both are None while a node is
    passive.  ``messages`` are the offers actually transmitted on the
    node's out-edges this round.
    """

    t: int
    graph: Digraph
    active: tuple[bool, ...]
    before: tuple[Optional[NodeState], ...]
    messages: tuple[Message, ...]
    after: tuple[Optional[NodeState], ...]


@dataclass
class Trace:
    scenario: Scenario
    source: GraphSource
    rounds: list[RoundRecord]

    @property
    def horizon(self) -> int:
        return self.scenario.horizon

    @property
    def node_ids(self) -> tuple[NodeId, ...]:
        return self.scenario.node_ids

    @property
    def s_max(self) -> int:
        return self.scenario.s_max

    def index_of(self, u: NodeId) -> int:
        return self.node_ids.index(u)

    def record(self, t: int) -> RoundRecord:
        if not 1 <= t <= len(self.rounds):
            raise ScenarioError(f"round {t} outside the recorded horizon")
        return self.rounds[t - 1]

    def before_state(self, t: int, u: NodeId) -> Optional[NodeState]:
        return self.record(t).before[self.index_of(u)]

    def after_state(self, t: int, u: NodeId) -> Optional[NodeState]:
        return self.record(t).after[self.index_of(u)]

    def inbox(self, t: int, u: NodeId) -> tuple[Message, ...]:
        """The multiset delivered to u at round t, in graph in-neighbor order."""
        rec = self.record(t)
        idx = {v: i for i, v in enumerate(self.node_ids)}
        return tuple(rec.messages[idx[v]] for v in rec.graph.in_neighbors(u))

    def star_edges(self, t: int) -> frozenset:
        """Edges of round t that carried a non-null message (active, unfrozen source)."""
        rec = self.record(t)
        idx = {v: i for i, v in enumerate(self.node_ids)}
        return frozenset(
            (u, v) for (u, v) in rec.graph.edges if rec.messages[idx[u]] is not NULL
        )

    def max_message_bytes(self) -> int:
        return max(
            message_bytes(m) for rec in self.rounds for m in rec.messages
        )


def run(scenario: Scenario) -> Trace:
    """Execute the scenario for its full horizon and record everything."""
    nodes = scenario.node_ids
    n = len(nodes)
    starts = [scenario.starts[u] for u in nodes]
    params = scenario.params
    source = resolve_source(scenario)
    freeze = scenario.terminate_on_detect
    needs_rng = params.algorithm == "A4"

    states: list[Optional[NodeState]] = [None] * n
    frozen = [False] * n
    rounds: list[RoundRecord] = []
    idx = {u: i for i, u in enumerate(nodes)}

    for t in range(1, scenario.horizon + 1):
        g = source.graph_at(t)
        if g.nodes != nodes:
            raise ScenarioError(f"graph at round {t} has a different node set")
        for i in range(n):
            if starts[i] == t:
                rng = rng_stream_for(scenario.master_seed, nodes[i]) if needs_rng else None
                states[i] = init_state(nodes[i], params, rng, active_since=t)
        before = tuple(states)
        active = tuple(starts[i] <= t for i in range(n))
        messages = tuple(
            emit(states[i], params) if active[i] and not frozen[i] else NULL for i in range(n)
        )
        for i in range(n):
            if active[i] and not frozen[i]:
                inbox = [messages[idx[v]] for v in g.in_neighbors(nodes[i])]
                states[i] = step(states[i], inbox, params)
                if freeze and states[i].synch:
                    frozen[i] = True
        rounds.append(RoundRecord(t, g, active, before, messages, tuple(states)))
    return Trace(scenario=scenario, source=source, rounds=rounds)


# ---------------------------------------------------------------------------
# trace export
# ---------------------------------------------------------------------------

CSV_HEADER = "round,node,r,synch,ho_size,ok_size,n_hat,msg_bytes"


def _state_fields(state: Optional[NodeState]):
    if state is None:
        return "", "", "", "", ""
    ho = "" if state.ho is None else str(len(state.ho))
    ok = "" if state.ok is None else str(len(state.ok))
    n_hat = "" if state.n_hat is None else repr(state.n_hat)
    return str(state.r), str(int(state.synch)), ho, ok, n_hat


def trace_csv(trace: Trace) -> str:
    """Per-round, per-node end-of-round values in a fixed, documented column order."""
    lines = [CSV_HEADER]
    for rec in trace.rounds:
        for i, u in enumerate(trace.node_ids):
            r, synch, ho, ok, n_hat = _state_fields(rec.after[i])
            lines.append(
                f"{rec.t},{u},{r},{synch},{ho},{ok},{n_hat},{message_bytes(rec.messages[i])}"
            )
    return "\n".join(lines) + "\n"


def scenario_echo(scenario: Scenario) -> dict:
    """A dict form of the scenario that the loader accepts back (round-trip)."""
    if isinstance(scenario.graph, GraphSpec):
        graph = {"kind": scenario.graph.kind, **scenario.graph.params}
    else:
        graph = {"kind": f"<custom:{type(scenario.graph).__name__}>"}
    p = scenario.params
    algorithm = {"name": p.algorithm}
    for key, value in (
        ("T", p.T),
        ("c", p.c),
        ("N", p.N),
        ("eta", p.eta),
        ("n", p.n_exact),
        ("ell", p.ell_override),
    ):
        if value is not None:
            algorithm[key] = value
    return {
        "nodes": list(scenario.node_ids),
        "starts": {"map": {str(u): scenario.starts[u] for u in scenario.node_ids}},
        "graph": graph,
        "algorithm": algorithm,
        "horizon": scenario.horizon,
        "seed": scenario.master_seed,
        "terminate_on_detect": scenario.terminate_on_detect,
    }


def _state_json(state: Optional[NodeState]):
    if state is None:
        return None
    out = {"r": state.r, "synch": state.synch}
    if state.ho is not None:
        out["ho"] = sorted(state.ho)
    if state.ok is not None:
        out["ok"] = sorted(state.ok)
    if state.n_hat is not None:
        out["n_hat"] = state.n_hat
    return out


def trace_json(trace: Trace) -> str:
    """Structured trace export: scenario echo, then per-round graph/state records."""
    doc = {
        "scenario": scenario_echo(trace.scenario),
        "rounds": [
            {
                "t": rec.t,
                "graph": sorted([list(e) for e in rec.graph.edges]),
                "nodes": {
                    str(u): {
                        "active": rec.active[i],
                        "msg_bytes": message_bytes(rec.messages[i]),
                        "state": _state_json(rec.after[i]),
                    }
                    for i, u in enumerate(trace.node_ids)
                },
            }
            for rec in trace.rounds
        ],
    }
    return json.dumps(doc, indent=1)


# ---------------------------------------------------------------------------
# batches
# ---------------------------------------------------------------------------


@dataclass
class RunSummary:
    """One run boiled down for aggregation across seeds."""

    seed: int
    n: int
    s_max: int
    t_synch: Optional[int]
    detection_rounds: dict
    common_detection: Optional[int]
    simultaneous: Optional[bool]
    max_msg_bytes: int
    verdicts: dict
    ok: bool
    error: Optional[str] = None


def summarize(trace: Trace, checks: Sequence[str] = (), **check_kwargs) -> RunSummary:
    from . import verifier  # deferred: verifier reads traces, engine makes them

    verdicts = verifier.run_checks(trace, checks, **check_kwargs)
    detections = verifier.detection_rounds(trace)
    detected = [d for d in detections.values() if d is not None]
    common = detected[0] if detected and len(detected) == len(detections) and len(set(detected)) == 1 else None
    simultaneous = None
    if all(d is not None for d in detections.values()):
        simultaneous = len(set(detections.values())) == 1
    statuses = {name: v.status for name, v in verdicts.items()}
    return RunSummary(
        seed=trace.scenario.master_seed,
        n=len(trace.node_ids),
        s_max=trace.s_max,
        t_synch=verifier.find_t_synch(trace),
        detection_rounds=detections,
        common_detection=common,
        simultaneous=simultaneous,
        max_msg_bytes=trace.max_message_bytes(),
        verdicts={name: v for name, v in verdicts.items()},
        ok=all(s == verifier.HOLDS for s in statuses.values()),
    )


def _run_one(job) -> RunSummary:
    scenario, checks, check_kwargs = job
    try:
        return summarize(run(scenario), checks, **check_kwargs)
    except Exception as exc:  # collected, batch continues
        return RunSummary(
            seed=scenario.master_seed,
            n=len(scenario.node_ids),
            s_max=scenario.s_max,
            t_synch=None,
            detection_rounds={},
            common_detection=None,
            simultaneous=None,
            max_msg_bytes=0,
            verdicts={},
            ok=False,
            error=f"{type(exc).__name__}: {exc}",
        )


def derived_scenarios(template: Scenario, seeds: Sequence[int]) -> list[Scenario]:
    return [template.with_seed(s) for s in seeds]


def batch(
    scenarios: Sequence[Scenario],
    checks: Sequence[str] = (),
    parallel: int = 1,
    chunksize: int = 10,
    **check_kwargs,
) -> list[RunSummary]:
    """Run independent scenarios and summarize each; order follows the input.

    With parallel > 1 the runs are spread over worker processes.  Runs
    share nothing; per-run errors are captured in the summary and the
    batch continues.
    """
    jobs = [(s, tuple(checks), dict(check_kwargs)) for s in scenarios]
    if parallel <= 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(_run_one, jobs, chunksize=chunksize))
