"""Deterministic, replica-independent random streams.

Streams are derived counter-style from (seed, replica_index): no replica's
stream depends on how many others ran or in which order, so results are
identical for any worker count.  Seed 0 is reserved for "draw fresh entropy",
which callers must resolve once and record.
"""

from __future__ import annotations

import hashlib
import secrets

import numpy as np


def resolve_seed(seed: int) -> int:
    """Replace the reserved seed 0 by fresh entropy; pass others through."""
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    if seed == 0:
        return secrets.randbits(62) + 1
    return seed


def rng_streams(seed: int, replica_index: int) -> np.random.Generator:
    """Independent stream for one replica of a seeded run."""
    if replica_index < 0:
        raise ValueError("replica_index must be nonnegative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replica_index,))
    return np.random.default_rng(ss)


def stream_fingerprint(seed: int, replica_index: int) -> int:
    """Stable 64-bit identifier of a replica stream, recorded for audits."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replica_index,))
    return int(ss.generate_state(1, np.uint64)[0])


def aux_stream(seed: int, label: str) -> np.random.Generator:
    """Named side stream (vertex selection and the like), disjoint from replicas.

    The label is hashed into a second spawn-key coordinate, so auxiliary
    streams can never collide with replica streams.
    """
    digest = hashlib.sha256(label.encode()).digest()
    key = int.from_bytes(digest[:8], "little")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(key, 1))
    return np.random.default_rng(ss)
