"""Named random substreams derived from a single root seed.

Each consumer (topology, catalog, workload, ...) draws from its own
generator so that changing one stream never perturbs another.
"""
import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), key]))
