"""Seeded random streams.

Every random draw in the package goes through a numpy ``Generator`` backed by
PCG64.  Child streams are derived from a root seed plus a tuple of integer
keys, so that e.g. trial 17 of an experiment always sees the same numbers
whether trials run serially or in parallel, and so that independent roles
(measurement matrix vs. validation matrix) never share a lineage.
"""
import numpy as np


def make_rng(seed=0, *keys):
    """Return a Generator for ``seed`` and the derivation path ``keys``."""
    if isinstance(seed, np.random.Generator):
        if keys:
            raise TypeError("cannot derive keyed children from a live Generator")
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(rng):
    """Accept a Generator, an integer seed or None (seed 0)."""
    if rng is None:
        return make_rng(0)
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(rng)
