"""The five synchronization protocols as pure node state machines.

A node is a value: ``step`` maps (state, received message multiset) to a
new state and ``emit`` maps a state to the outgoing message.  All
randomness lives in ``init_state`` (the estimator sketch of A4), so
replaying a round with the same inputs is bit-identical.

Algorithm tags (the scenario-file contract):

  A1  counter synchronization only, no detection flag logic
  A2  detection by counter threshold; assumes bounded-window broadcast
  A3  detection by heard-of census against a connectivity budget
  A4  randomized detection by cardinality estimate; needs a size bound
  A5  detection by exact-size readiness census

All five share one counter rule: any received heartbeat (null message)
resets the local counter to zero, otherwise it becomes one plus the
minimum received counter.  The node's own message is always in the
received multiset (self-loop), so the multiset is never empty.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .estimator import (
    EXPONENT_MAX,
    EXPONENT_MIN,
    EXPONENT_WIDTH_BYTES,
    EstimatorVector,
    ell_of,
    estimate,
    pointwise_min_many,
    sample_vector,
)
from .graphs import NodeId

ALGORITHMS = ("A1", "A2", "A3", "A4", "A5")


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class NullMessage:
    """Heartbeat of a passive node: detectable, carries nothing."""


NULL = NullMessage()


@dataclass(frozen=True, slots=True)
class CounterMessage:
    r: int


@dataclass(frozen=True, slots=True)
class CensusMessage:
    r: int
    ho: frozenset


@dataclass(frozen=True, slots=True)
class EstimateMessage:
    r: int
    y: EstimatorVector


@dataclass(frozen=True, slots=True)
class ReadyMessage:
    r: int
    ho: frozenset
    ok: frozenset


Message = Union[NullMessage, CounterMessage, CensusMessage, EstimateMessage, ReadyMessage]

_PAYLOAD = {
    "A1": CounterMessage,
    "A2": CounterMessage,
    "A3": CensusMessage,
    "A4": EstimateMessage,
    "A5": ReadyMessage,
}


@dataclass(frozen=True)
class ProtocolParams:
    """Algorithm choice plus exactly the parameters that algorithm needs."""

    algorithm: str
    T: Optional[int] = None
    c: Optional[int] = None
    N: Optional[int] = None
    eta: Optional[float] = None
    n_exact: Optional[int] = None
    ell_override: Optional[int] = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ProtocolError(f"unknown algorithm {self.algorithm!r}")
        required = {
            "A1": (),
            "A2": ("T",),
            "A3": ("T", "c"),
            "A4": ("N", "eta"),
            "A5": ("n_exact",),
        }[self.algorithm]
        optional = ("ell_override",) if self.algorithm == "A4" else ()
        for name in ("T", "c", "N", "eta", "n_exact", "ell_override"):
            value = getattr(self, name)
            if name in required and value is None:
                raise ProtocolError(f"{self.algorithm} requires parameter {name!r}")
            if name not in required and name not in optional and value is not None:
                raise ProtocolError(f"{self.algorithm} does not take parameter {name!r}")
        if self.T is not None and self.T < 1:
            raise ProtocolError(f"T must be >= 1, got {self.T}")
        if self.c is not None and self.c < 1:
            raise ProtocolError(f"c must be >= 1, got {self.c}")
        if self.n_exact is not None and self.n_exact < 1:
            raise ProtocolError(f"n_exact must be >= 1, got {self.n_exact}")
        if self.algorithm == "A4":
            if self.N < 1:
                raise ProtocolError(f"N must be >= 1, got {self.N}")
            if not 0.0 < self.eta <= 0.5:
                raise ProtocolError(f"eta must lie in (0, 1/2], got {self.eta}")
            if self.ell_override is not None and self.ell_override < 1:
                raise ProtocolError(f"ell_override must be >= 1, got {self.ell_override}")

    @property
    def ell(self) -> int:
        if self.algorithm != "A4":
            raise ProtocolError("ell is only defined for A4")
        return self.ell_override if self.ell_override is not None else ell_of(self.N, self.eta)


@dataclass(frozen=True, slots=True)
class NodeState:
    """Per-node protocol state at a round boundary.

    Only the fields of the configured algorithm are populated; the rest
    stay None.  ``active_since`` records the node's wake-up round.
    """

    node: NodeId
    r: int
    synch: bool
    active_since: int
    ho: Optional[frozenset] = None
    ok: Optional[frozenset] = None
    y: Optional[EstimatorVector] = None
    n_hat: Optional[float] = None


def init_state(
    node: NodeId,
    params: ProtocolParams,
    rng: Optional[np.random.Generator] = None,
    active_since: int = 1,
) -> NodeState:
    """State at the beginning of the node's wake-up round."""
    algo = params.algorithm
    if algo in ("A1", "A2"):
        return NodeState(node=node, r=0, synch=False, active_since=active_since)
    if algo == "A3":
        return NodeState(node=node, r=0, synch=False, active_since=active_since, ho=frozenset((node,)))
    if algo == "A4":
        if rng is None:
            raise ProtocolError("A4 needs the node's random stream at init")
        y = sample_vector(params.ell, params.N, params.eta, rng)
        return NodeState(node=node, r=0, synch=False, active_since=active_since, y=y, n_hat=0.0)
    return NodeState(
        node=node,
        r=0,
        synch=False,
        active_since=active_since,
        ho=frozenset((node,)),
        ok=frozenset(),
    )


_counter_cache: dict[int, CounterMessage] = {}


def emit(state: NodeState, params: ProtocolParams) -> Message:
    """The message an active node broadcasts this round; never a heartbeat."""
    algo = params.algorithm
    if algo in ("A1", "A2"):
        msg = _counter_cache.get(state.r)
        if msg is None:
            msg = _counter_cache[state.r] = CounterMessage(state.r)
        return msg
    if algo == "A3":
        return CensusMessage(state.r, state.ho)
    if algo == "A4":
        return EstimateMessage(state.r, state.y)
    return ReadyMessage(state.r, state.ho, state.ok)


def step(state: NodeState, received, params: ProtocolParams) -> NodeState:
    """One round of the configured algorithm.

    ``received`` is the full multiset delivered to the node this round:
    one message per in-neighbor in the round's graph, the node's own
    message included.  An empty multiset, a missing own message (no
    non-null entries), or a payload of the wrong variant can only come
    from a misconfigured harness and raises ProtocolError.
    """
    if not received:
        raise ProtocolError("empty receive multiset (self-loop guarantees at least one message)")
    algo = params.algorithm
    payload_cls = _PAYLOAD[algo]
    has_null = False
    non_null = []
    for m in received:
        if m.__class__ is NullMessage:
            has_null = True
        elif m.__class__ is payload_cls:
            non_null.append(m)
        else:
            raise ProtocolError(f"unexpected message variant {m.__class__.__name__} in an {algo} run")
    if not non_null:
        raise ProtocolError("receive multiset lacks the node's own message")

    if has_null:
        r = 0
    else:
        r = 1 + min(m.r for m in non_null)

    if algo == "A1":
        return NodeState(node=state.node, r=r, synch=state.synch, active_since=state.active_since)

    if algo == "A2":
        synch = state.synch or r >= params.T
        return NodeState(node=state.node, r=r, synch=synch, active_since=state.active_since)

    if algo == "A3":
        ho = frozenset().union(*(m.ho for m in non_null))
        # ceil(c*(r+1)/T) - c, in exact integer arithmetic
        threshold = -(-params.c * (r + 1) // params.T) - params.c
        synch = state.synch or len(ho) <= threshold
        return NodeState(node=state.node, r=r, synch=synch, active_since=state.active_since, ho=ho)

    if algo == "A4":
        y = pointwise_min_many([m.y for m in non_null])
        n_hat = estimate(y)
        synch = state.synch or n_hat < 2.0 * r / 3.0
        return NodeState(
            node=state.node,
            r=r,
            synch=synch,
            active_since=state.active_since,
            y=y,
            n_hat=n_hat,
        )

    ho = frozenset().union(*(m.ho for m in non_null))
    ok = frozenset().union(*(m.ok for m in non_null))
    if len(ho) == params.n_exact:
        ok = ok | {state.node}
    synch = state.synch or len(ok) == params.n_exact
    return NodeState(
        node=state.node,
        r=r,
        synch=synch,
        active_since=state.active_since,
        ho=ho,
        ok=ok,
    )


# ---------------------------------------------------------------------------
# canonical wire encoding
#
# One byte of variant tag, then the payload fields in declaration order.
# Counters are unsigned LEB128 varints; node-id sets are a count followed
# by the ids in ascending order (each id tagged int/str); estimator
# vectors are a length followed by fixed-width little-endian exponents.
# ---------------------------------------------------------------------------

TAG_NULL = 0
TAG_COUNTER = 1
TAG_CENSUS = 2
TAG_ESTIMATE = 3
TAG_READY = 4

_ID_INT = 0
_ID_STR = 1


def _uvarint(n: int) -> bytes:
    if n < 0:
        raise ProtocolError(f"varint needs a nonnegative value, got {n}")
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def _uvarint_len(n: int) -> int:
    length = 1
    while n > 0x7F:
        n >>= 7
        length += 1
    return length


def _zigzag(k: int) -> int:
    return k << 1 if k >= 0 else ((-k) << 1) - 1


def _encode_id(u: NodeId) -> bytes:
    if isinstance(u, bool) or not isinstance(u, (int, str)):
        raise ProtocolError(f"node ids on the wire must be int or str, got {type(u).__name__}")
    if isinstance(u, int):
        return bytes((_ID_INT,)) + _uvarint(_zigzag(u))
    raw = u.encode("utf-8")
    return bytes((_ID_STR,)) + _uvarint(len(raw)) + raw


def _id_len(u: NodeId) -> int:
    if isinstance(u, int):
        return 1 + _uvarint_len(_zigzag(u))
    raw_len = len(u.encode("utf-8"))
    return 1 + _uvarint_len(raw_len) + raw_len


def _encode_id_set(s: frozenset) -> bytes:
    parts = [_uvarint(len(s))]
    parts.extend(_encode_id(u) for u in sorted(s))
    return b"".join(parts)


def encode_message(m: Message) -> bytes:
    cls = m.__class__
    if cls is NullMessage:
        return bytes((TAG_NULL,))
    if cls is CounterMessage:
        return bytes((TAG_COUNTER,)) + _uvarint(m.r)
    if cls is CensusMessage:
        return bytes((TAG_CENSUS,)) + _uvarint(m.r) + _encode_id_set(m.ho)
    if cls is EstimateMessage:
        exps = m.y.exponents
        if exps.size and (exps.min() < EXPONENT_MIN or exps.max() > EXPONENT_MAX):
            raise ProtocolError("grid exponent out of wire range")
        return (
            bytes((TAG_ESTIMATE,))
            + _uvarint(m.r)
            + _uvarint(len(m.y))
            + exps.astype("<i2").tobytes()
        )
    if cls is ReadyMessage:
        return bytes((TAG_READY,)) + _uvarint(m.r) + _encode_id_set(m.ho) + _encode_id_set(m.ok)
    raise ProtocolError(f"cannot encode {cls.__name__}")


def message_bytes(m: Message) -> int:
    """len(encode_message(m)) computed without building the bytes."""
    cls = m.__class__
    if cls is NullMessage:
        return 1
    if cls is CounterMessage:
        return 1 + _uvarint_len(m.r)
    if cls is CensusMessage:
        return 1 + _uvarint_len(m.r) + _uvarint_len(len(m.ho)) + sum(_id_len(u) for u in m.ho)
    if cls is EstimateMessage:
        return 1 + _uvarint_len(m.r) + _uvarint_len(len(m.y)) + EXPONENT_WIDTH_BYTES * len(m.y)
    if cls is ReadyMessage:
        return (
            1
            + _uvarint_len(m.r)
            + _uvarint_len(len(m.ho))
            + sum(_id_len(u) for u in m.ho)
            + _uvarint_len(len(m.ok))
            + sum(_id_len(u) for u in m.ok)
        )
    raise ProtocolError(f"cannot size {cls.__name__}")


def _read_uvarint(buf: bytes, pos: int) -> tuple[int, int]:
    shift = 0
    value = 0
    while True:
        b = buf[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos
        shift += 7


def _unzigzag(z: int) -> int:
    return (z >> 1) ^ -(z & 1)


def _read_id(buf: bytes, pos: int) -> tuple[NodeId, int]:
    tag = buf[pos]
    pos += 1
    if tag == _ID_INT:
        z, pos = _read_uvarint(buf, pos)
        return _unzigzag(z), pos
    if tag == _ID_STR:
        length, pos = _read_uvarint(buf, pos)
        return buf[pos : pos + length].decode("utf-8"), pos + length
    raise ProtocolError(f"bad id tag {tag}")


def _read_id_set(buf: bytes, pos: int) -> tuple[frozenset, int]:
    count, pos = _read_uvarint(buf, pos)
    ids = []
    for _ in range(count):
        u, pos = _read_id(buf, pos)
        ids.append(u)
    return frozenset(ids), pos


def decode_message(buf: bytes) -> Message:
    tag = buf[0]
    pos = 1
    if tag == TAG_NULL:
        return NULL
    r, pos = _read_uvarint(buf, pos)
    if tag == TAG_COUNTER:
        return CounterMessage(r)
    if tag == TAG_CENSUS:
        ho, pos = _read_id_set(buf, pos)
        return CensusMessage(r, ho)
    if tag == TAG_ESTIMATE:
        length, pos = _read_uvarint(buf, pos)
        exps = np.frombuffer(buf, dtype="<i2", count=length, offset=pos).astype(np.int32)
        return EstimateMessage(r, EstimatorVector(exps))
    if tag == TAG_READY:
        ho, pos = _read_id_set(buf, pos)
        ok, pos = _read_id_set(buf, pos)
        return ReadyMessage(r, ho, ok)
    raise ProtocolError(f"bad message tag {tag}")
