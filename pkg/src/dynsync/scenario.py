"""Scenario files: JSON schema, loading, and defaults.

A scenario file names the node set, the wake-up schedule (explicit map
or a named pattern), the dynamic-graph generator, the algorithm and its
parameters, the horizon, the master seed, the checks to run, and output
paths.  Unknown keys are rejected with a diagnostic naming the key.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import jsonschema

from . import verifier
from .adversaries import KINDS
from .engine import GraphSpec, Scenario, ScenarioError
from .graphs import CT_IN_CONNECTED, T_COMPLETE
from .protocols import ProtocolParams, ProtocolError
from .rng import derive_seed, label_rng

_STARTS_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"pattern": {"const": "all_at_1"}},
            "required": ["pattern"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "pattern": {"const": "staggered"},
                "step": {"type": "integer", "minimum": 0},
            },
            "required": ["pattern", "step"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "pattern": {"const": "random"},
                "max_s": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
            },
            "required": ["pattern", "max_s"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"map": {"type": "object"}},
            "required": ["map"],
            "additionalProperties": False,
        },
    ]
}

_CERTIFY_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": [T_COMPLETE, CT_IN_CONNECTED]},
        "T": {"type": "integer", "minimum": 1},
        "c": {"type": "integer", "minimum": 1},
    },
    "required": ["kind", "T"],
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "nodes": {
            "oneOf": [
                {"type": "integer", "minimum": 1},
                {
                    "type": "array",
                    "items": {"type": ["integer", "string"]},
                    "minItems": 1,
                },
            ]
        },
        "starts": _STARTS_SCHEMA,
        "graph": {
            "type": "object",
            "properties": {"kind": {"type": "string"}, "certify": _CERTIFY_SCHEMA},
            "required": ["kind"],
        },
        "algorithm": {
            "type": "object",
            "properties": {
                "name": {"enum": ["A1", "A2", "A3", "A4", "A5"]},
                "T": {"type": "integer"},
                "c": {"type": "integer"},
                "N": {"type": "integer"},
                "eta": {"type": "number"},
                "n": {"type": "integer"},
                "ell": {"type": "integer"},
            },
            "required": ["name"],
            "additionalProperties": False,
        },
        "horizon": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "terminate_on_detect": {"type": "boolean"},
        "checks": {"type": "array", "items": {"enum": list(verifier.CHECK_NAMES)}},
        "output": {
            "type": "object",
            "properties": {
                "trace": {"type": "string"},
                "summary": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "batch": {
            "type": "object",
            "properties": {"threshold": {"type": "number", "minimum": 0, "maximum": 1}},
            "additionalProperties": False,
        },
    },
    "required": ["nodes", "graph", "algorithm", "seed"],
    "additionalProperties": False,
}


@dataclass
class LoadedScenario:
    scenario: Scenario
    checks: tuple[str, ...] = ()
    trace_path: str = "trace.json"
    summary_path: str = "summary.csv"
    threshold: float = 0.0
    certify: Optional[dict] = None  # declared class for `certify`; None = derive from kind


def _resolve_nodes(spec) -> tuple:
    if isinstance(spec, int):
        return tuple(range(spec))
    if len(set(spec)) != len(spec):
        raise ScenarioError("duplicate node ids in 'nodes'")
    kinds = {type(u) for u in spec}
    if len(kinds) > 1:
        raise ScenarioError("'nodes' must be all-int or all-string, not mixed")
    return tuple(spec)


def _resolve_starts(spec, nodes, master_seed: int) -> dict:
    if spec is None:
        spec = {"pattern": "all_at_1"}
    if "map" in spec:
        raw = spec["map"]
        by_str = {str(u): u for u in nodes}
        starts = {}
        for key, value in raw.items():
            if key not in by_str:
                raise ScenarioError(f"starts map names unknown node {key!r}")
            if not isinstance(value, int) or value < 1:
                raise ScenarioError(f"start round for node {key!r} must be an integer >= 1")
            starts[by_str[key]] = value
        return starts
    pattern = spec["pattern"]
    if pattern == "all_at_1":
        return {u: 1 for u in nodes}
    if pattern == "staggered":
        return {u: 1 + i * spec["step"] for i, u in enumerate(nodes)}
    rng = label_rng(spec.get("seed", derive_seed(master_seed, "starts")))
    return {u: rng.randint(1, spec["max_s"]) for u in nodes}


def _resolve_params(spec) -> ProtocolParams:
    try:
        return ProtocolParams(
            algorithm=spec["name"],
            T=spec.get("T"),
            c=spec.get("c"),
            N=spec.get("N"),
            eta=spec.get("eta"),
            n_exact=spec.get("n"),
            ell_override=spec.get("ell"),
        )
    except ProtocolError as exc:
        raise ScenarioError(f"algorithm: {exc}") from exc


def default_horizon(n: int, s_max: int) -> int:
    return 4 * n + s_max + 10


def load_scenario(doc: dict) -> LoadedScenario:
    """Validate a scenario document and build the executable Scenario.

    Raises ScenarioError with a diagnostic naming the offending key on
    any schema or invariant violation.
    """
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"scenario key {path!r}: {exc.message}") from exc
    nodes = _resolve_nodes(doc["nodes"])
    seed = doc["seed"]
    starts = _resolve_starts(doc.get("starts"), nodes, seed)
    params = _resolve_params(doc["algorithm"])
    graph_doc = dict(doc["graph"])
    kind = graph_doc.pop("kind")
    certify = graph_doc.pop("certify", None)
    if kind not in KINDS:
        raise ScenarioError(f"graph kind {kind!r} is not one of {sorted(KINDS)}")
    s_max = max(starts.values())
    horizon = doc.get("horizon", default_horizon(len(nodes), s_max))
    try:
        scenario = Scenario(
            node_ids=nodes,
            starts=starts,
            graph=GraphSpec(kind=kind, params=graph_doc),
            params=params,
            horizon=horizon,
            master_seed=seed,
            terminate_on_detect=doc.get("terminate_on_detect", False),
        )
        # instantiating the source validates the generator parameters now,
        # not at round 1 of a run
        from .engine import resolve_source

        resolve_source(scenario)
    except (ScenarioError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"graph: {exc}") from exc
    output = doc.get("output", {})
    return LoadedScenario(
        scenario=scenario,
        checks=tuple(doc.get("checks", ())),
        trace_path=output.get("trace", "trace.json"),
        summary_path=output.get("summary", "summary.csv"),
        threshold=doc.get("batch", {}).get("threshold", 0.0),
        certify=certify,
    )


def declared_class(loaded: LoadedScenario) -> dict:
    """The connectivity class a scenario claims, for `certify`.

    An explicit graph.certify section wins; otherwise the generator kind
    implies one (constant_complete and T_complete_random are T-complete,
    cT_cycle is (c, T) in-connected).  Unbounded kinds have no bounded
    class to certify and raise.
    """
    if loaded.certify is not None:
        return dict(loaded.certify)
    spec = loaded.scenario.graph
    if not isinstance(spec, GraphSpec):
        raise ScenarioError("custom graph sources carry no declared class")
    if spec.kind == "constant_complete":
        return {"kind": T_COMPLETE, "T": 1}
    if spec.kind == "T_complete_random":
        return {"kind": T_COMPLETE, "T": spec.params["T"]}
    if spec.kind == "cT_cycle":
        return {"kind": CT_IN_CONNECTED, "T": spec.params["T"], "c": spec.params["c"]}
    raise ScenarioError(
        f"graph kind {spec.kind!r} declares no bounded connectivity class; "
        "add a graph.certify section"
    )
