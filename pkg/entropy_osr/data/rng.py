"""
Seeded random streams.

Every stochastic draw flows from one 64-bit root seed. Named streams (and any
extra integer keys, such as a class id and a sample index) become the spawn key
of a :class:`numpy.random.SeedSequence`, so streams are independent of each
other and of the order in which they are created.
"""
import numpy as np

from ..errors import ConfigError

RNG_ALGORITHM = "numpy.PCG64/SeedSequence"

STREAMS = {
    "init": 1,
    "noise": 2,
    "partition": 3,
    "episode": 4,
    "eval": 5,
    "gradcheck": 6,
}


def make_rng(seed: int, stream: str, *keys: int) -> np.random.Generator:
    try:
        stream_id = STREAMS[stream]
    except KeyError:
        raise ConfigError(f"Unknown random stream {stream}", code="rng_stream")
    sequence = np.random.SeedSequence(
        entropy=int(seed), spawn_key=(stream_id, *(int(k) for k in keys))
    )
    return np.random.Generator(np.random.PCG64(sequence))
