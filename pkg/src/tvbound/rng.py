"""Counter-based, splittable 64-bit random streams.

Output ``i`` of stream ``key`` is ``mix64(key + (i + 1) * GOLDEN)``, the
SplitMix64 construction evaluated at an explicit counter.  Because every value
is a pure function of (key, counter), any block of any stream can be produced
independently, which makes simulations reproducible under any parallel
schedule.  Per-trial keys are derived by mixing (master seed, trial index).
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# Domain separators for independent substreams of one trial.
SAMPLE_DOMAIN = 0
MUTATION_DOMAIN = 0x5851F42D4C957F2D


def mix64(z: int) -> int:
    """SplitMix64 finaliser on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorised :func:`mix64` on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return int(seed)


def trial_keys(master_seed: int, trial_indices, domain: int = SAMPLE_DOMAIN) -> np.ndarray:
    """Stream keys for the given trial indices of one master seed."""
    base = np.uint64(mix64(check_seed(master_seed) ^ domain))
    t = np.asarray(trial_indices, dtype=np.uint64)
    return mix64_array(base + (t + np.uint64(1)) * np.uint64(GOLDEN))


def raw_block(keys: np.ndarray, count: int, offset: int = 0) -> np.ndarray:
    """uint64 outputs ``offset .. offset+count-1`` of each stream, shape (len(keys), count)."""
    keys = np.asarray(keys, dtype=np.uint64)
    ctr = np.arange(offset + 1, offset + count + 1, dtype=np.uint64) * np.uint64(GOLDEN)
    return mix64_array(keys[:, None] + ctr[None, :])


def open_unit(bits: np.ndarray) -> np.ndarray:
    """Map uint64 words to doubles in (0, 1] with 53 bits of resolution."""
    return ((bits >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53


def stream_uniforms(key: int, count: int) -> np.ndarray:
    """Uniforms in (0, 1] from one stream."""
    return open_unit(raw_block(np.array([key], dtype=np.uint64), count))[0]
