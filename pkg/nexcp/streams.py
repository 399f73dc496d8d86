"""
Counter-based random substreams.

Every substream is a Philox generator keyed by (base seed, *labels). The same
key always yields the same stream, independent of the order in which trials or
steps are executed.
"""

from __future__ import annotations

import zlib
from typing import Union

import numpy as np

Label = Union[int, str]

# Purpose labels; data streams never share a key with swap-index draws.
COVARIATES = "covariates"
NOISE = "noise"
SWAP = "swap"
PERMUTATION = "permutation"
CONTAMINATION = "contamination"
FUZZ = "fuzz"


def _word(label: Label) -> int:
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    if label < 0:
        raise ValueError("integer stream labels must be nonnegative")
    return int(label)


def substream(seed: int, *labels: Label) -> np.random.Generator:
    """Return the generator for the stream identified by ``seed`` and ``labels``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be a 64-bit unsigned value")
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_word(l) for l in labels))
    return np.random.Generator(np.random.Philox(sequence))
