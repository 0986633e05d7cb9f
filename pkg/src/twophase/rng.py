"""Deterministic random substreams.

Every random quantity in the package is drawn from a stream that is a pure
function of a 64-bit master seed and a tuple of labels, e.g.
``generator(seed, "weights")`` or ``generator(seed, r, "phase1")``.  Labels may
be ints, floats or strings; they are hashed into the entropy of a
:class:`numpy.random.SeedSequence`.

Monte Carlo replicates that need one uniform per edge use a counter-based
Philox stream instead, so that replicate ``r`` can be regenerated on its own
without drawing replicates ``0..r-1`` first.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def _label_words(labels) -> list[int]:
    h = hashlib.blake2b(repr(tuple(labels)).encode("utf-8"), digest_size=16)
    d = h.digest()
    return [int.from_bytes(d[:8], "little"), int.from_bytes(d[8:], "little")]


def seed_sequence(master_seed: int, *labels) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed) & MASK64, *_label_words(labels)])


def generator(master_seed: int, *labels) -> np.random.Generator:
    """A PCG64 generator for the substream ``(master_seed, *labels)``."""
    return np.random.default_rng(seed_sequence(master_seed, *labels))


def stream_key(master_seed: int, *labels) -> int:
    """64-bit integer key for ``(master_seed, *labels)``; handy for nesting."""
    return int(seed_sequence(master_seed, *labels).generate_state(1, np.uint64)[0])


def replicate_uniforms(master_seed: int, label, start: int, stop: int, width: int) -> np.ndarray:
    """Uniforms for replicates ``start..stop-1``, one row of ``width`` per replicate.

    Row ``r`` depends only on ``(master_seed, label, r, width)``: the Philox
    counter is positioned at the replicate's own block, so chunked and
    one-shot generation agree bit for bit.
    """
    if stop <= start:
        return np.empty((0, width))
    key = seed_sequence(master_seed, "replicates", label).generate_state(2, np.uint64)
    blocks = (width + 3) // 4 if width else 1
    bg = np.random.Philox(key=key, counter=[start * blocks, 0, 0, 0])
    raw = np.random.Generator(bg).random((stop - start) * blocks * 4)
    return raw.reshape(stop - start, blocks * 4)[:, :width]
