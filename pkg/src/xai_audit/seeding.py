"""Deterministic seed derivation shared by every stochastic stage."""

from __future__ import annotations

import numpy as np


def derive_seed(master: int, *keys: int) -> int:
    """A 32-bit seed that depends only on ``master`` and ``keys``.

    Adding a new key never changes the seeds of existing ones, so a sweep can
    grow without perturbing earlier runs.
    """
    entropy = [int(master) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def rng_for(master: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *keys))


# stream keys used inside one pipeline run
SPLIT, MODEL, PERMUTATION, SHAP_BACKGROUND, SHAP_INSTANCES, SHAP_COALITIONS = range(6)
