"""Counter-based seed splitting.

All randomness in the package flows from a single integer seed.  Subsystems
derive independent streams from (seed, *labels) so the draws one component
makes never shift another component's stream when code is reordered.
"""

from __future__ import annotations

import zlib

import numpy as np


def _label_key(label: object) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    return zlib.crc32(str(label).encode("utf-8"))


def derive_rng(seed: int, *labels: object) -> np.random.Generator:
    """Independent generator for the stream named by ``labels`` under ``seed``."""
    key = tuple(_label_key(lb) for lb in labels)
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))
