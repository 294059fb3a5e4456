"""Counter-derived random streams.

Every stochastic object (a loop proposal, a frame path, a replica) draws
from its own generator keyed by ``(seed, tag, index)``.  Results therefore
do not depend on how work is scheduled across processes.
"""

import zlib

import numpy as np


def _tag_id(tag):
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed, tag, index=0):
    """Independent generator for item ``index`` of the stream ``tag``."""
    if seed is None:
        raise ValueError("a seed is required; entropy defaults are not used")
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(_tag_id(tag), int(index)))
    return np.random.default_rng(seq)


def as_generator(rng):
    """Accept a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
