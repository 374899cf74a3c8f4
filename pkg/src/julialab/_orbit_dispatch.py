"""Shared forward-orbit construction policy for long-horizon statistics.

A direct float orbit on a repelling Julia set is only trustworthy when it
repeats exactly (a bit-identical float cycle); any other orbit leaves the
set within ~50 steps, outward or inward.  Polynomial maps fall back to the
potential-tube orbit; rational maps with a true denominator have no
stabilizer here and may only iterate directly.
"""

from __future__ import annotations

import numpy as np

from . import orbits
from .rational_map import ESCAPE_RADIUS, RationalMap


def forward_orbit(map: RationalMap, z0: complex, n: int) -> np.ndarray:
    """Length-n forward orbit of z0 suitable for ergodic averages."""
    z0 = complex(z0)
    num = np.ascontiguousarray(map.numerator.coeffs)
    den = np.ascontiguousarray(map.denominator.coeffs)
    out = np.empty(n, dtype=np.complex128)
    if map.is_polynomial:
        if orbits.exact_float_cycle(num, den, z0, 64) > 0:
            written = orbits.direct_orbit_fill(num, den, z0, out, ESCAPE_RADIUS)
            if written == n:
                return out
        return orbits.stabilized_orbit(map, z0, n)
    written = orbits.direct_orbit_fill(num, den, z0, out, ESCAPE_RADIUS)
    if written < n:
        raise ValueError(
            f"orbit left Julia neighborhood after {written} steps "
            "(no orbit stabilizer for maps with a nontrivial denominator)"
        )
    return out
