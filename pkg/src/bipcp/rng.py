"""Counter-based random streams keyed by (seed, purpose, index).

Every stream is a Philox generator whose key is derived from the tuple, so a
trial's randomness never depends on which worker ran it or in what order.
"""

from __future__ import annotations

import numpy as np

GRAPH = 1
TRIAL = 2
AUX = 3


def stream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) % (1 << 64), spawn_key=(int(tag), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def graph_rng(seed: int) -> np.random.Generator:
    return stream(seed, GRAPH)


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return stream(master_seed, TRIAL, trial)


def trial_graph_seed(master_seed: int, trial: int) -> int:
    """Graph seed for trial ``trial`` of an annealed experiment."""
    return int(stream(master_seed, AUX, trial).integers(0, 1 << 63))
