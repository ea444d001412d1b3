"""Counter-based random streams (Philox) with a fixed lane layout.

A stream address is ``(seed; domain, replicate, component)``.  The address
words occupy the three *high* words of the 256-bit Philox counter, so draws
within a stream only advance the low word: distinct addresses can never
overlap until 2**64 blocks have been consumed from one stream.  Variates
within a stream are indexed by their draw position (mode index, step index,
...), which the calling modules document per use.

Because the stream is a pure function of its address, replication-parallel
sampling is reproducible regardless of batching or thread scheduling.
"""

from __future__ import annotations

import numpy as np

DOMAIN_FIELD = 1
DOMAIN_TORUS = 2
DOMAIN_PATH = 3

_MASK64 = (1 << 64) - 1


def stream(seed: int, domain: int, replicate: int = 0,
           component: int = 0) -> np.random.Generator:
    """Generator for the (seed; domain, replicate, component) substream."""
    counter = np.array([0, replicate & _MASK64, component & _MASK64,
                        domain & _MASK64], dtype=np.uint64)
    bitgen = np.random.Philox(key=np.uint64(seed & _MASK64), counter=counter)
    return np.random.Generator(bitgen)
