"""Per-component random streams derived from one run seed."""

import numpy as np

from utils.errors import ConfigError

# Fixed spawn index per component; append new names, never reorder.
COMPONENTS = (
    "plant",
    "sensor",
    "excitation",
    "estimation_starts",
)


def component_rng(seed: int, component: str) -> np.random.Generator:
    """Return the generator for ``component`` under ``seed``.

    Streams are independent of each other, so adding draws to one component
    leaves every other component's numbers unchanged.
    """
    if seed is None:
        raise ConfigError("a seed is required; wall-clock seeding is not supported")
    try:
        index = COMPONENTS.index(component)
    except ValueError:
        raise ConfigError(f"unknown random component: {component!r}") from None
    sequence = np.random.SeedSequence(int(seed), spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(sequence))
