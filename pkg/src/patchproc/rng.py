"""Splittable counter-keyed random streams shared by the Python and numba paths.

Each realization owns a stream derived from (master_seed, stream_id) through
SplitMix64, so results are bit-identical no matter how realizations are
distributed across threads. The numba kernels in ``_kernels`` implement the
same recurrence; ``tests/test_ssa.py`` pins the two paths against each other.
"""
from __future__ import annotations

from dataclasses import dataclass

_MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_U53 = 2.0 ** -53


@dataclass(frozen=True)
class RngSpec:
    """Identifies one reproducible stream."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.master_seed < 2 ** 64):
            raise ValueError("master_seed must fit in 64 bits")
        if self.stream_id < 0:
            raise ValueError("stream_id must be nonnegative")


def splitmix64(x: int) -> int:
    z = (x + GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream_init(master_seed: int, stream_id: int) -> int:
    """Initial generator state for a (seed, stream) pair."""
    return splitmix64((master_seed + stream_id * GAMMA) & _MASK)


class Stream:
    """Iterated SplitMix64 stream producing U(0,1) doubles."""

    __slots__ = ("state",)

    def __init__(self, spec: RngSpec):
        self.state = stream_init(spec.master_seed, spec.stream_id)

    def uniform(self) -> float:
        self.state = splitmix64(self.state)
        return (self.state >> 11) * _U53
