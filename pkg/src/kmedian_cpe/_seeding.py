import numpy as np


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Accept ``None``, an int, a sequence of ints or a ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)
