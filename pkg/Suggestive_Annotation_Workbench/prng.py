"""
splitmix64 generator used wherever the workbench needs randomness
(phantom noise, phantom geometry jitter, random-query baseline).

The generator is a value: every draw returns the drawn value together with
the advanced generator, so callers thread the state explicitly and two runs
from the same seed reproduce each other bit for bit on any platform.
"""

import math
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SplitMix64:
    state: int = 0

    @classmethod
    def seeded(cls, seed: int) -> "SplitMix64":
        return cls(seed & MASK64)

    def next_u64(self) -> tuple[int, "SplitMix64"]:
        state = (self.state + GAMMA) & MASK64
        return mix64(state), SplitMix64(state)

    def next_f64(self) -> tuple[float, "SplitMix64"]:
        """Uniform float in [0, 1) from the top 53 bits."""
        value, rng = self.next_u64()
        return (value >> 11) * 2.0 ** -53, rng

    def uniform_int(self, n: int) -> tuple[int, "SplitMix64"]:
        """
        Uniform integer in [0, n) by rejection sampling on the high bits:
        keep the top bit_length(n - 1) bits of each draw, accept when < n.
        """
        if n <= 0:
            raise ValueError(f"uniform_int needs n >= 1, got {n}")
        bits = (n - 1).bit_length()
        rng = self
        while True:
            value, rng = rng.next_u64()
            candidate = value >> (64 - bits)
            if candidate < n:
                return candidate, rng

    def u64_block(self, count: int) -> tuple[np.ndarray, "SplitMix64"]:
        """`count` consecutive draws as a uint64 array (same sequence as next_u64)."""
        steps = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
            z = z ^ (z >> np.uint64(31))
        return z, SplitMix64((self.state + count * GAMMA) & MASK64)

    def f64_block(self, count: int) -> tuple[np.ndarray, "SplitMix64"]:
        values, rng = self.u64_block(count)
        return (values >> np.uint64(11)).astype(np.float64) * 2.0 ** -53, rng

    def normal_block(self, count: int) -> tuple[np.ndarray, "SplitMix64"]:
        """
        `count` standard normals, Box–Muller cosine branch. Each normal
        consumes two consecutive uniforms (u1, u2).
        """
        uniforms, rng = self.f64_block(2 * count)
        u1 = 1.0 - uniforms[0::2]
        u2 = uniforms[1::2]
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2), rng


def derive_seed(seed: int, index: int) -> int:
    """Independent stream seed for item `index` of a seeded collection."""
    return mix64((seed + (index + 1) * GAMMA) & MASK64)
