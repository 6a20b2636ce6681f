"""Named random substreams derived from a single seed.

Every stage of a pipeline asks for ``substream(seed, "stage", rep)`` instead of
sharing one generator, so adding a stage or changing ``--jobs`` never shifts the
draws of another stage.
"""

import hashlib

import numpy as np


def _name_key(name: str | int) -> int:
    if isinstance(name, int):
        return name
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def substream_seed(seed: int, *names: str | int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, *(_name_key(n) for n in names)])


def substream(seed: int, *names: str | int) -> np.random.Generator:
    """Generator for the stream ``seed/names[0]/names[1]/...``."""
    return np.random.default_rng(substream_seed(seed, *names))


def child_seed(seed: int, *names: str | int) -> int:
    """Integer seed for APIs that take an ``int`` (e.g. scikit-learn)."""
    return int(substream_seed(seed, *names).generate_state(1)[0])
