"""Counter-based deterministic random numbers.

Every random draw in the package is a pure function of (seed, stream, index)
through a splitmix64-style mixer, so site tables and bath states are bitwise
reproducible regardless of chunking, vectorization, or evaluation order.
"""

from __future__ import annotations

import numpy as np

# stream identifiers, one per kind of draw
STREAM_THETA = 1
STREAM_PHI = 2
STREAM_SPECIES = 3
STREAM_NARROWED = 4
STREAM_THERMAL_COS = 5
STREAM_THERMAL_PHI = 6

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniform(seed: int, stream: int, index, extra: int = 0) -> np.ndarray:
    """Uniform [0, 1) keyed by (seed, stream, index, extra); vectorized over index."""
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):   # uint64 arithmetic wraps by design
        h = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GAMMA
        h = _mix(h + np.uint64(stream))
        h = _mix(h + np.uint64(extra & 0xFFFFFFFFFFFFFFFF) * _GAMMA)
        h = _mix(h + (idx + np.uint64(1)) * _GAMMA)
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


def uniform_angle(seed: int, stream: int, index, extra: int = 0) -> np.ndarray:
    """Uniform on [0, 2*pi)."""
    return 2.0 * np.pi * uniform(seed, stream, index, extra)


def uniform_symmetric(seed: int, stream: int, index, extra: int = 0) -> np.ndarray:
    """Uniform on [-1, 1) (used for cos(theta) on the sphere)."""
    return 2.0 * uniform(seed, stream, index, extra) - 1.0
