"""Shared plumbing: seed derivation and stable serialization helpers."""

from __future__ import annotations

import json

import numpy as np

from .errors import InvalidParameterError


def derive_seed(root: int, *path: int) -> int:
    """Derive a child seed from a root seed and an integer counter path.

    Scheme: ``SeedSequence([root, *path])`` reduced to one 32-bit word.
    The same (root, path) always yields the same child, and distinct paths
    decorrelate, so sub-tasks can be scheduled in any order.
    """
    parts = [int(root)] + [int(p) for p in path]
    if any(p < 0 for p in parts):
        raise InvalidParameterError("seeds and counter parts must be non-negative")
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


def rng_from(seed: int) -> np.random.Generator:
    """Validated generator construction: seeds are non-negative integers."""
    seed = int(seed)
    if seed < 0:
        raise InvalidParameterError(f"rng seed must be non-negative, got {seed}")
    return np.random.default_rng(seed)


def stable_json(obj) -> str:
    """Serialize with sorted keys and no whitespace: byte-stable across runs."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def fnum(x) -> str:
    """Shortest round-trip decimal form of a float, for text exports."""
    return repr(float(x))
