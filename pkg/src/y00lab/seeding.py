"""Deterministic per-task random streams."""

import hashlib

import numpy as np


def _label_word(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode()).digest()[:4], "big")


def rng_for(seed: int, index: int = 0, label: str = "") -> np.random.Generator:
    """Generator keyed by (master seed, task index, stream label).

    Independent of execution order, so parallel runs reproduce serial ones.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(index), _label_word(label)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def blocks(total: int, block: int):
    """(index, start, stop) for fixed-size blocks covering range(total)."""
    for i, start in enumerate(range(0, total, block)):
        yield i, start, min(start + block, total)
