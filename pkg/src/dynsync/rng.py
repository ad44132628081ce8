"""Deterministic seed derivation and per-subsystem random streams.

All randomness in a run flows from a single master seed.  Independent
subsystems get their own streams by hashing a label path into a child
seed: the dynamic-graph generator draws from ("graph",), node ``u``
from ("node", u), a random start schedule from ("starts",).  Protocol
randomness therefore cannot influence the graph sequence or the wake-up
schedule and vice versa, which makes the adversary oblivious by
construction rather than by discipline.
"""

from __future__ import annotations

import hashlib
import random

import numpy as np


def derive_seed(master: int, *path: object) -> int:
    """Derive a reproducible 128-bit child seed from a master seed and a label path."""
    text = repr(master) + "".join("/" + repr(p) for p in path)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "big")


def node_stream(master_seed: int, node: object) -> np.random.Generator:
    """The private random stream of one node.

    Derived only from (master seed, node id); never from the graph or the
    schedule.  The bulk draws a node makes (the exponential sketch at
    activation) go through numpy, so the stream is a numpy Generator.
    """
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, "node", node)))


def label_rng(seed: int, *path: object) -> random.Random:
    """A stdlib Random seeded from (seed, label path); used by graph generators."""
    return random.Random(derive_seed(seed, *path))
