"""Internal helpers: bitmask sets, exact integerization, derived RNG streams."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


def mask_of(items: Iterable[int]) -> int:
    m = 0
    for j in items:
        m |= 1 << j
    return m


def bits_of(mask: int) -> list[int]:
    out = []
    b = 0
    while mask:
        if mask & 1:
            out.append(b)
        mask >>= 1
        b += 1
    return out


def set_of(mask: int) -> frozenset[int]:
    return frozenset(bits_of(mask))


def submasks(mask: int):
    """Yield every submask of ``mask``, including 0 and ``mask`` itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def integerize(values: Sequence) -> tuple[list[int], int]:
    """Scale floats/Fractions to exact integers over a common denominator.

    Floats are dyadic rationals, so Fraction conversion is exact and the
    returned integers represent the inputs with no rounding at all.
    """
    fracs = [Fraction(v) for v in values]
    if not fracs:
        return [], 1
    denom = math.lcm(*(f.denominator for f in fracs))
    return [int(f * denom) for f in fracs], denom


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Per-trial generator, independent of how trials are scheduled."""
    return np.random.default_rng(np.random.SeedSequence((seed, trial)))
