"""Post-hoc checkers over a recorded trace.

The checkers machine-verify, on one execution: the synchronization
hierarchy (counters equal and incrementing; flags raised only after the
fact; flags raised everywhere; flags raised in unison), the counter
bounds that the protocols promise (broken-path ceiling, relay ceiling,
wake-up floor, heard-of growth floor), the detection-time bounds of the
individual algorithms, and the census claim that detection implies a
complete node inventory.

Verdicts are three-valued: a property can hold, be violated (always with
a concrete witness reproducible from the trace), or be inconclusive at
the recorded horizon when it quantifies over an unbounded future.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .engine import Trace

HOLDS = "holds"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive-at-horizon"

_EXIT = {HOLDS: 0, VIOLATED: 1, INCONCLUSIVE: 2}

LEMMA_KINDS = ("L2a", "L2b", "L3", "L4")
BOUND_KINDS = ("T2", "T3", "T4", "C1")


@dataclass
class Verdict:
    name: str
    status: str
    witness: Optional[dict] = None
    measured: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return _EXIT[self.status]


def exit_code(verdicts) -> int:
    codes = [v.exit_code for v in verdicts]
    if 1 in codes:
        return 1
    if 2 in codes:
        return 2
    return 0


class _TraceData:
    """Positional numpy views of a trace, shared by the checkers."""

    def __init__(self, trace: Trace) -> None:
        nodes = trace.node_ids
        n = len(nodes)
        H = len(trace.rounds)
        self.trace = trace
        self.nodes = nodes
        self.n = n
        self.H = H
        self.starts = np.array([trace.scenario.starts[u] for u in nodes], dtype=np.int64)
        self.s_max = int(self.starts.max())
        r_before = np.full((H + 1, n), np.nan)
        synch_before = np.zeros((H + 1, n), dtype=bool)
        synch_after = np.zeros((H + 1, n), dtype=bool)
        ho_before = np.full((H + 1, n), -1, dtype=np.int64)
        for rec in trace.rounds:
            t = rec.t
            for i in range(n):
                s = rec.before[i]
                if s is not None:
                    r_before[t, i] = s.r
                    synch_before[t, i] = s.synch
                    if s.ho is not None:
                        ho_before[t, i] = len(s.ho)
                a = rec.after[i]
                if a is not None:
                    synch_after[t, i] = a.synch
        self.r_before = r_before
        self.synch_before = synch_before
        self.synch_after = synch_after
        self.ho_before = ho_before
        self._adj: dict[int, np.ndarray] = {}
        self._t_synch: tuple = ()
        self._detections: Optional[dict] = None

    def adjacency(self, t: int) -> np.ndarray:
        """A[i, j] = 1 iff round t has the edge (node j -> node i)."""
        return self.trace.record(t).graph.in_matrix()

    def passive(self, t: int) -> np.ndarray:
        return self.starts > t


def _data(trace: Trace) -> _TraceData:
    td = getattr(trace, "_verifier_data", None)
    if td is None:
        td = _TraceData(trace)
        trace._verifier_data = td
    return td


# ---------------------------------------------------------------------------
# synchronization hierarchy
# ---------------------------------------------------------------------------


def find_t_synch(trace: Trace) -> Optional[int]:
    """Earliest round from which all counters are equal and step by one.

    Requires a stable suffix of at least two rounds (one observed
    increment), so coincidental one-round equality does not count.
    Returns None when no such round exists by the horizon.
    """
    td = _data(trace)
    if td._t_synch:
        return td._t_synch[0]
    r, H, s_max = td.r_before, td.H, td.s_max
    t_synch = None
    if H - 1 >= s_max:
        block = r[s_max : H + 1]  # row i is round s_max + i
        equal = ~np.isnan(block).any(axis=1) & (block == block[:, :1]).all(axis=1)
        inc = (block[1:] == block[:-1] + 1).all(axis=1)
        good = equal[:-1] & equal[1:] & inc
        for i in range(good.size - 1, -1, -1):
            if not good[i]:
                break
            t_synch = s_max + i
    td._t_synch = (t_synch,)
    return t_synch


def detection_rounds(trace: Trace) -> dict:
    """First round during which each node's flag turns true (None if never)."""
    td = _data(trace)
    if td._detections is None:
        out = {}
        for i, u in enumerate(td.nodes):
            hits = np.nonzero(td.synch_after[1:, i])[0]
            out[u] = int(hits[0]) + 1 if hits.size else None
        td._detections = out
    return dict(td._detections)


_UNSET = object()


def check_detection(trace: Trace, t_synch=_UNSET) -> Verdict:
    """Flags are never raised before t_synch, and everyone raises one eventually."""
    td = _data(trace)
    if t_synch is _UNSET:
        t_synch = find_t_synch(trace)
    detections = detection_rounds(trace)
    measured = {"t_synch": t_synch, "detection_rounds": detections}
    flagged = np.nonzero(td.synch_before)
    if t_synch is None:
        return Verdict("detection", INCONCLUSIVE, measured=measured)
    for t, i in zip(*flagged):
        if t < t_synch:
            witness = {"round": int(t), "node": td.nodes[i], "t_synch": t_synch}
            return Verdict("detection", VIOLATED, witness=witness, measured=measured)
    if all(td.synch_after[td.H, i] for i in range(td.n)):
        return Verdict("detection", HOLDS, measured=measured)
    return Verdict("detection", INCONCLUSIVE, measured=measured)


def check_simultaneity(trace: Trace) -> Verdict:
    """All pairwise-active nodes agree on the flag value at every common round."""
    td = _data(trace)
    for t in range(1, td.H + 1):
        active = np.nonzero(td.starts <= t)[0]
        if active.size < 2:
            continue
        flags = td.synch_before[t, active]
        if flags.any() and not flags.all():
            on = td.nodes[active[int(np.nonzero(flags)[0][0])]]
            off = td.nodes[active[int(np.nonzero(~flags)[0][0])]]
            witness = {"round": int(t), "flag_true": on, "flag_false": off}
            return Verdict("simultaneity", VIOLATED, witness=witness)
    final = td.synch_after[td.H]
    if final.any() and not final.all():
        on = td.nodes[int(np.nonzero(final)[0][0])]
        off = td.nodes[int(np.nonzero(~final)[0][0])]
        witness = {"round": td.H, "flag_true": on, "flag_false": off, "end_of_round": True}
        return Verdict("simultaneity", VIOLATED, witness=witness)
    detections = detection_rounds(trace)
    common = set(detections.values())
    measured = {"common_detection_round": common.pop() if len(common) == 1 else None}
    return Verdict("simultaneity", HOLDS, measured=measured)


# ---------------------------------------------------------------------------
# broken paths
# ---------------------------------------------------------------------------


def broken_path_exists(trace: Trace, v, u, t: int, t_end: int) -> bool:
    """Whether some dynamic path v -> ... -> u over rounds [t, t_end] carries a heartbeat.

    Forward sweep over (node, brokenness) pairs; an edge is broken when
    its source is still passive in that round.
    """
    td = _data(trace)
    if not 1 <= t <= t_end <= td.H:
        raise ValueError(f"invalid round interval [{t}, {t_end}] for horizon {td.H}")
    frontier = {(v, False)}
    for k in range(t, t_end + 1):
        g = trace.record(k).graph
        nxt = set()
        for w, broken in frontier:
            b = broken or trace.scenario.starts[w] > k
            for x in g.out_neighbors(w):
                nxt.add((x, b))
        frontier = nxt
    return (u, True) in frontier


# ---------------------------------------------------------------------------
# counter and census bounds
# ---------------------------------------------------------------------------


def _lemma_l2_sweep(td: _TraceData, cap: int, want: set) -> dict:
    """One pass over all round intervals of length <= cap, checking both
    the broken-path ceiling (L2a) and the relay ceiling (L2b).

    A ring of sliding windows, one per interval start, carries per end
    node whether a broken path ending there exists and which nodes have
    a dynamic path into it; both advance by one 0/1 matrix product per
    round, so the sweep is O(H * cap * n^2) word operations.
    """
    n, H, r = td.n, td.H, td.r_before
    witnesses: dict[str, Optional[dict]] = {k: None for k in want}
    if H < 2:
        return witnesses
    cap = max(1, min(cap, H - 1))
    r_nan = np.isnan(r)
    r_inf = np.where(r_nan, np.inf, r)
    starts = np.zeros(cap, dtype=np.int64)  # 0 marks an unused ring slot
    B = np.zeros((cap, n, 1), dtype=np.uint8)
    R = np.zeros((cap, n, n), dtype=np.uint8)
    eye = np.eye(n, dtype=np.uint8)
    want_a = "L2a" in want
    want_b = "L2b" in want
    for k in range(1, H):
        slot = (k - 1) % cap
        starts[slot] = k
        B[slot] = 0
        R[slot] = eye
        A = td.adjacency(k)
        passive_k = td.passive(k).astype(np.uint8)[None, :, None]
        np.minimum(A[None] @ np.bitwise_or(B, passive_k), 1, out=B)
        np.minimum(A[None] @ R, 1, out=R)
        t_prime = k + 1
        used = starts > 0
        ru = r[t_prime]
        defined = ~r_nan[t_prime]
        dt = (t_prime - starts)[:, None]
        Bb = B[:, :, 0].astype(bool)
        if want_a and witnesses["L2a"] is None:
            viol = Bb & (used[:, None] & defined[None]) & (ru[None] > dt - 1)
            if viol.any():
                s_i, u_i = min(np.argwhere(viol), key=lambda e: (starts[e[0]], e[1]))
                witnesses["L2a"] = {
                    "t": int(starts[s_i]),
                    "t_prime": t_prime,
                    "node": td.nodes[u_i],
                    "r": float(ru[u_i]),
                    "bound": int(dt[s_i, 0] - 1),
                }
        if want_b and witnesses["L2b"] is None:
            Rb = R.astype(bool)
            rt_inf = r_inf[starts]
            minv = np.where(Rb, rt_inf[:, None, :], np.inf).min(axis=2)
            reached_undef = (Rb & r_nan[starts][:, None, :]).any(axis=2)
            viol = (
                ~Bb
                & (used[:, None] & defined[None])
                & (reached_undef | (ru[None] > minv + dt))
            )
            if viol.any():
                s_i, u_i = min(np.argwhere(viol), key=lambda e: (starts[e[0]], e[1]))
                witnesses["L2b"] = {
                    "t": int(starts[s_i]),
                    "t_prime": t_prime,
                    "node": td.nodes[u_i],
                    "r": float(ru[u_i]),
                    "bound": float(minv[s_i, u_i] + dt[s_i, 0]),
                }
        if all(witnesses[k_] is not None for k_ in want):
            break
    return witnesses


def _check_l3(td: _TraceData) -> Optional[dict]:
    """Wake-up floor r_u(t) >= t - s_max, with equality when the last waker
    has a dynamic path into u since s_max."""
    r, H, s_max, n = td.r_before, td.H, td.s_max, td.n
    latest = td.starts == s_max
    reach = None
    for t in range(s_max, H + 1):
        floor = t - s_max
        below = r[t] < floor
        if below.any():
            i = int(np.nonzero(below)[0][0])
            return {"round": t, "node": td.nodes[i], "r": float(r[t, i]), "floor": floor}
        if t > s_max:
            A = td.adjacency(t - 1).astype(bool)
            reach = A if reach is None else (A.astype(np.uint8) @ reach.astype(np.uint8)) > 0
            heard_latest = (reach & latest[None]).any(axis=1)
            exact = heard_latest & (r[t] != floor)
            if exact.any():
                i = int(np.nonzero(exact)[0][0])
                return {
                    "round": t,
                    "node": td.nodes[i],
                    "r": float(r[t, i]),
                    "expected_exactly": floor,
                }
    return None


def _check_l4(td: _TraceData, c: int, T: int) -> Optional[dict]:
    """Census growth floor |HO_u(t)| >= min((1-c) + (c/T)(r_u(t)+1), n), scaled by T."""
    n = td.n
    for t in range(1, td.H + 1):
        active = td.starts <= t
        ho = td.ho_before[t]
        r = td.r_before[t]
        bound = np.minimum(T * (1 - c) + c * (r + 1), float(T * n))
        viol = active & (T * ho < bound)
        if viol.any():
            i = int(np.nonzero(viol)[0][0])
            return {
                "round": t,
                "node": td.nodes[i],
                "ho_size": int(ho[i]),
                "bound": float(bound[i] / T),
            }
    return None


def check_all_lemmas(
    trace: Trace, interval_cap: int = 12, include_l4: bool = False
) -> dict[str, Verdict]:
    """All lemma checks in one pass; L4 only on request (it presumes the
    dynamic graph was certified for the run's (c, T) class)."""
    td = _data(trace)
    out: dict[str, Verdict] = {}
    sweep = _lemma_l2_sweep(td, interval_cap, {"L2a", "L2b"})
    for which in ("L2a", "L2b"):
        w = sweep[which]
        status = VIOLATED if w is not None else HOLDS
        out[f"lemma:{which}"] = Verdict(
            f"lemma:{which}", status, witness=w, measured={"interval_cap": interval_cap}
        )
    w3 = _check_l3(td)
    out["lemma:L3"] = Verdict("lemma:L3", VIOLATED if w3 else HOLDS, witness=w3)
    if include_l4:
        params = trace.scenario.params
        if params.algorithm != "A3":
            raise ValueError("the census growth floor (L4) only applies to A3 runs")
        w4 = _check_l4(td, params.c, params.T)
        out["lemma:L4"] = Verdict("lemma:L4", VIOLATED if w4 else HOLDS, witness=w4)
    return out


def check_lemma_bounds(trace: Trace, which: str, interval_cap: int = 12) -> Verdict:
    """One lemma invariant: L2a | L2b | L3 | L4 (see check_all_lemmas)."""
    if which not in LEMMA_KINDS:
        raise ValueError(f"unknown lemma {which!r}")
    td = _data(trace)
    if which in ("L2a", "L2b"):
        w = _lemma_l2_sweep(td, interval_cap, {which})[which]
        return Verdict(
            f"lemma:{which}",
            VIOLATED if w else HOLDS,
            witness=w,
            measured={"interval_cap": interval_cap},
        )
    if which == "L3":
        w = _check_l3(td)
        return Verdict("lemma:L3", VIOLATED if w else HOLDS, witness=w)
    params = trace.scenario.params
    if params.algorithm != "A3":
        raise ValueError("the census growth floor (L4) only applies to A3 runs")
    w = _check_l4(td, params.c, params.T)
    return Verdict("lemma:L4", VIOLATED if w else HOLDS, witness=w)


# ---------------------------------------------------------------------------
# counting and detection-time bounds
# ---------------------------------------------------------------------------


def check_counting(trace: Trace) -> Verdict:
    """At its detection round, every detecting node's census equals the node set."""
    if trace.scenario.params.algorithm != "A3":
        raise ValueError("the counting check applies to A3 runs")
    detections = detection_rounds(trace)
    full = set(trace.node_ids)
    any_detected = False
    for u, d in detections.items():
        if d is None:
            continue
        any_detected = True
        ho = trace.after_state(d, u).ho
        if set(ho) != full:
            witness = {"node": u, "round": d, "ho": sorted(ho), "expected": sorted(full)}
            return Verdict("counting", VIOLATED, witness=witness)
    if not any_detected or any(d is None for d in detections.values()):
        return Verdict("counting", INCONCLUSIVE, measured={"detection_rounds": detections})
    return Verdict("counting", HOLDS, measured={"detection_rounds": detections})


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def check_bound_theorem(trace: Trace, which: str) -> Verdict:
    """Detection-time bound of the configured algorithm on its graph class.

    T2: common detection exactly T rounds after the last wake-up
        (transition during round s_max + T - 1, flags visible one later).
    T3: common detection round < s_max + ceil(T(n-1)/c) + T.
    T4: common detection round <= s_max + 2n (per run; the probabilistic
        statement is aggregated by the batch layer).
    C1: counter-threshold detection with T = N on an always strongly
        connected graph, within N rounds of the last wake-up.
    """
    if which not in BOUND_KINDS:
        raise ValueError(f"unknown bound {which!r}")
    td = _data(trace)
    params = trace.scenario.params
    name = f"bound:{which}"
    detections = detection_rounds(trace)
    if any(d is None for d in detections.values()):
        return Verdict(name, INCONCLUSIVE, measured={"detection_rounds": detections})
    rounds = set(detections.values())
    s_max = td.s_max
    measured = {"detection_rounds": detections, "s_max": s_max}
    if len(rounds) != 1:
        return Verdict(name, VIOLATED, witness={"detection_rounds": detections}, measured=measured)
    d = rounds.pop()
    measured["common_detection_round"] = d
    measured["rounds_after_s_max"] = d - s_max + 1
    measured["flags_visible_round"] = d + 1
    if which == "T2":
        expected = s_max + params.T - 1
        measured["expected_round"] = expected
        ok = d == expected
    elif which == "T3":
        n = td.n
        bound = s_max + _ceil_div(params.T * (n - 1), params.c) + params.T
        measured["bound"] = bound
        ok = d < bound
    elif which == "T4":
        bound = s_max + 2 * td.n
        measured["bound"] = bound
        ok = d <= bound
    else:  # C1
        if params.algorithm != "A2":
            raise ValueError("C1 checks an A2 run configured with T = N")
        measured["N"] = params.T
        ok = d - s_max + 1 <= params.T
    if ok:
        return Verdict(name, HOLDS, measured=measured)
    return Verdict(name, VIOLATED, witness={"common_detection_round": d}, measured=measured)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

CHECK_NAMES = (
    "synchronization",
    "detection",
    "simultaneity",
    "counting",
    "lemmas",
    "lemma:L2a",
    "lemma:L2b",
    "lemma:L3",
    "lemma:L4",
    "bound:T2",
    "bound:T3",
    "bound:T4",
    "bound:C1",
)


def run_checks(
    trace: Trace,
    names: Sequence[str],
    lemma_cap: int = 12,
    l4_certified: bool = False,
) -> dict[str, Verdict]:
    """Run the named checks; "lemmas" expands to every applicable lemma.

    L4 is included only for A3 runs whose graph class the caller has
    certified (l4_certified); an uncertified class would make a floor
    derived from that class meaningless.
    """
    out: dict[str, Verdict] = {}
    for name in names:
        if name not in CHECK_NAMES:
            raise ValueError(f"unknown check {name!r}")
        if name == "synchronization":
            t_synch = find_t_synch(trace)
            status = HOLDS if t_synch is not None else INCONCLUSIVE
            out[name] = Verdict(name, status, measured={"t_synch": t_synch})
        elif name == "detection":
            out[name] = check_detection(trace)
        elif name == "simultaneity":
            out[name] = check_simultaneity(trace)
        elif name == "counting":
            out[name] = check_counting(trace)
        elif name == "lemmas":
            include_l4 = l4_certified and trace.scenario.params.algorithm == "A3"
            out.update(check_all_lemmas(trace, interval_cap=lemma_cap, include_l4=include_l4))
        elif name.startswith("lemma:"):
            out[name] = check_lemma_bounds(trace, name.split(":", 1)[1], interval_cap=lemma_cap)
        else:
            out[name] = check_bound_theorem(trace, name.split(":", 1)[1])
    return out
