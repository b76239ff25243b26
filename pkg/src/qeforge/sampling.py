"""Deterministic sample-point generation inside coordinate boxes.

Points come from a Halton low-discrepancy sequence; the seed offsets the
start index, so identical (seed, box, count) always yield identical points.
"""

from __future__ import annotations

import numpy as np

_PRIMES = (2, 3, 5, 7, 11, 13)


def _radical_inverse(index: int, base: int) -> float:
    result = 0.0
    f = 1.0 / base
    while index > 0:
        result += f * (index % base)
        index //= base
        f /= base
    return result


def halton_point(index: int, dim: int) -> np.ndarray:
    if dim > len(_PRIMES):
        raise ValueError(f"halton sequence supports up to {len(_PRIMES)} dims")
    return np.array([_radical_inverse(index, _PRIMES[d]) for d in range(dim)])


class Box:
    """Axis-aligned coordinate box with named axes."""

    def __init__(self, bounds):
        """``bounds``: sequence of (lo, hi) pairs, one per coordinate."""
        self.bounds = [(float(lo), float(hi)) for lo, hi in bounds]
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"empty box interval [{lo}, {hi}]")
        self.dim = len(self.bounds)

    @classmethod
    def from_dict(cls, d: dict, coords) -> "Box":
        return cls([tuple(d[name]) for name in coords])

    def to_dict(self, coords) -> dict:
        return {name: list(b) for name, b in zip(coords, self.bounds)}

    def map_unit(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return lo + u * (hi - lo)

    def sample(self, count: int, seed: int = 42, reject=None, max_tries: int = 4096):
        """``count`` Halton points in the box, skipping any that ``reject``.

        ``reject(point) -> bool`` lets callers drop points where a field
        evaluation fails (singular loci); the sequence index just advances.
        """
        points = []
        index = seed + 1
        tries = 0
        while len(points) < count:
            if tries >= max_tries:
                raise RuntimeError(
                    f"could not find {count} admissible sample points "
                    f"after {max_tries} tries"
                )
            p = self.map_unit(halton_point(index, self.dim))
            index += 1
            tries += 1
            if reject is not None and reject(p):
                continue
            points.append(p)
        return points
