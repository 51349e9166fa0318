"""Deterministic random substreams.

One 64-bit master seed fans out into independent streams through the
counter-based Philox generator, keyed by SHA-256 of
``(seed, context, index)``. The same triple yields the same stream on
every platform and under any thread count.
"""

import hashlib

import numpy as np


def substream(seed, context, index=0):
    """Return a ``numpy.random.Generator`` for the given context.

    Parameters
    ----------
    seed : int
        Master seed of the run.
    context : str
        Free-form label, e.g. ``"grid-radii"`` or ``"orbit-restart"``.
    index : int
        Per-item counter within the context (ball index, restart number).
    """
    digest = hashlib.sha256(f"{seed}|{context}|{index}".encode()).digest()
    key = int.from_bytes(digest[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))
