"""Long-horizon orbit kernels.

Direct float iteration on a uniformly expanding Julia set loses the set
after ~50 steps: a 1 ulp transversal error grows like lambda^n.  For
polynomial maps we therefore re-project every iterate onto the Green
potential level set {G = TUBE_LEVEL} just outside J.  The projected
dynamics is the external-angle d-tupling, whose invariant measure is the
harmonic (= Brolin-Lyubich) measure, so long pseudo-orbits built this way
equidistribute exactly like typical orbits for the measure the sampler
targets.  Each step remains forward-consistent with T to ~1 ulp.

Rational maps with a nontrivial denominator have no basin-of-infinity
potential here; they fall back to direct iteration with escape flags.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .rational_map import RationalMap

ESCAPE_RADIUS = 1e6
TUBE_LEVEL = 1e-12
GREEN_ESCAPE = 1e6
GREEN_MAX_ITER = 400


@njit(cache=True, nogil=True)
def _poly_val(c, z):
    acc = c[len(c) - 1]
    for i in range(len(c) - 2, -1, -1):
        acc = acc * z + c[i]
    return acc


@njit(cache=True, nogil=True)
def _poly_val_pair(c, dc, z):
    p = c[len(c) - 1]
    for i in range(len(c) - 2, -1, -1):
        p = p * z + c[i]
    dp = dc[len(dc) - 1]
    for i in range(len(dc) - 2, -1, -1):
        dp = dp * z + dc[i]
    return p, dp


@njit(cache=True, nogil=True)
def green_potential(c, dc, d, z):
    """(G(z), dG/dz) of the basin of infinity; (0, 0) if no escape is seen."""
    w = z
    deriv = 1.0 + 0.0j
    df = float(d)
    for k in range(1, GREEN_MAX_ITER + 1):
        p, dp = _poly_val_pair(c, dc, w)
        deriv = dp * deriv
        w = p
        aw = abs(w)
        if aw > GREEN_ESCAPE:
            scale = df ** (-k)
            g = np.log(aw) * scale
            if not np.isfinite(deriv.real) or not np.isfinite(deriv.imag):
                return g, 0.0j
            gz = 0.5 * (deriv / w) * scale
            return g, gz
        if not np.isfinite(aw):
            return 0.0, 0.0j
    return 0.0, 0.0j


@njit(cache=True, nogil=True)
def project_to_tube(c, dc, d, z, g0):
    """Move z onto the {G ~= g0} level set; returns (point, ok)."""
    g, gz = green_potential(c, dc, d, z)
    if g <= 0.0:
        return z, False
    for _ in range(8):
        if 0.5 * g0 < g < 2.0 * g0:
            return z, True
        ag2 = gz.real * gz.real + gz.imag * gz.imag
        if ag2 == 0.0:
            return z, False
        zn = z - (g - g0) * np.conj(gz) / (2.0 * ag2)
        gn, gzn = green_potential(c, dc, d, zn)
        if gn <= 0.0:
            # overshot across J: bisect back toward the known-outside point
            lo = zn
            hi = z
            for _ in range(64):
                mid = 0.5 * (lo + hi)
                gm, gzm = green_potential(c, dc, d, mid)
                if gm <= 0.0:
                    lo = mid
                elif gm >= 2.0 * g0:
                    hi = mid
                    z, g, gz = mid, gm, gzm
                else:
                    return mid, True
            return hi, True
        z, g, gz = zn, gn, gzn
    return z, 0.25 * g0 < g < 4.0 * g0


@njit(cache=True, nogil=True)
def _tube_step(c, dc, d, z, g0):
    """One forward step followed by the Newton pull-back to the tube."""
    p, _dp = _poly_val_pair(c, dc, z)
    g, gz = green_potential(c, dc, d, p)
    if g > 0.0:
        ag2 = gz.real * gz.real + gz.imag * gz.imag
        if ag2 > 0.0:
            p = p - (g - g0) * np.conj(gz) / (2.0 * ag2)
    return p


@njit(cache=True, nogil=True)
def tube_recurrence_scan(c, dc, d, start, center, radii_desc, n_max, g0, count_entries):
    """First entry, entry count, and last entry time for each nested radius.

    radii_desc must be strictly decreasing; entries at step n mean
    |x_n - center| < r with x the tube-projected orbit of start.  With
    count_entries False the scan stops once every radius has a first entry.
    """
    nk = len(radii_desc)
    first = np.full(nk, -1, dtype=np.int64)
    count = np.zeros(nk, dtype=np.int64)
    last = np.zeros(nk, dtype=np.int64)
    r2 = radii_desc * radii_desc
    x = start
    n_found = 0
    for n in range(1, n_max + 1):
        x = _tube_step(c, dc, d, x, g0)
        dxr = x.real - center.real
        dxi = x.imag - center.imag
        dist2 = dxr * dxr + dxi * dxi
        j = 0
        while j < nk and dist2 < r2[j]:
            if first[j] < 0:
                first[j] = n
                n_found += 1
            count[j] += 1
            last[j] = n
            j += 1
        if not count_entries and n_found == nk:
            break
    return first, count, last


@njit(cache=True, nogil=True)
def direct_recurrence_scan(num, den, start, center, radii_desc, n_max, escape_radius, count_entries):
    """Direct-iteration variant; returns (first, count, last, stopped_at).

    stopped_at is the step at which the orbit escaped or hit a pole
    (0 when the full horizon was scanned).
    """
    nk = len(radii_desc)
    first = np.full(nk, -1, dtype=np.int64)
    count = np.zeros(nk, dtype=np.int64)
    last = np.zeros(nk, dtype=np.int64)
    r2 = radii_desc * radii_desc
    x = start
    n_found = 0
    for n in range(1, n_max + 1):
        pv = _poly_val(num, x)
        qv = _poly_val(den, x)
        if qv == 0:
            return first, count, last, n
        x = pv / qv
        ax = abs(x)
        if not np.isfinite(ax) or ax > escape_radius:
            return first, count, last, n
        dxr = x.real - center.real
        dxi = x.imag - center.imag
        dist2 = dxr * dxr + dxi * dxi
        j = 0
        while j < nk and dist2 < r2[j]:
            if first[j] < 0:
                first[j] = n
                n_found += 1
            count[j] += 1
            last[j] = n
            j += 1
        if not count_entries and n_found == nk:
            break
    return first, count, last, 0


@njit(cache=True, nogil=True)
def tube_orbit_fill(c, dc, d, start, out, g0):
    """Fill out[0..n-1] with the tube-projected forward orbit of start."""
    x = start
    out[0] = x
    for i in range(1, len(out)):
        x = _tube_step(c, dc, d, x, g0)
        out[i] = x


@njit(cache=True, nogil=True)
def direct_orbit_fill(num, den, start, out, escape_radius):
    """Direct forward orbit; returns number of points written (may stop early)."""
    x = start
    out[0] = x
    for i in range(1, len(out)):
        pv = _poly_val(num, x)
        qv = _poly_val(den, x)
        if qv == 0:
            return i
        x = pv / qv
        ax = abs(x)
        if not np.isfinite(ax) or ax > escape_radius:
            return i
        out[i] = x
    return len(out)


@njit(cache=True, nogil=True)
def exact_float_cycle(num, den, z0, max_period):
    """Period p <= max_period with T^p(z0) == z0 to the bit, else 0.

    Exact float cycles repeat forever under the deterministic float map, so
    a direct orbit fill of any length is valid for them; anything else on a
    repelling Julia set drifts off within ~50 steps (outward or inward).
    """
    x = z0
    for p in range(1, max_period + 1):
        pv = _poly_val(num, x)
        qv = _poly_val(den, x)
        if qv == 0:
            return 0
        x = pv / qv
        if x == z0:
            return p
        if not np.isfinite(x.real) or not np.isfinite(x.imag):
            return 0
    return 0


def _poly_arrays(map: RationalMap) -> tuple[np.ndarray, np.ndarray, int]:
    if not map.is_polynomial:
        raise ValueError("tube-projected orbits require a polynomial map")
    c = np.ascontiguousarray(map.numerator.coeffs / map.denominator.coeffs[0])
    dc = np.ascontiguousarray((map.numerator.derivative().coeffs / map.denominator.coeffs[0]))
    return c, dc, map.degree


def _rational_arrays(map: RationalMap) -> tuple[np.ndarray, np.ndarray]:
    return (
        np.ascontiguousarray(map.numerator.coeffs),
        np.ascontiguousarray(map.denominator.coeffs),
    )


def place_on_tube(map: RationalMap, z: complex, g0: float = TUBE_LEVEL, max_offset: float = 1e-6) -> complex:
    """Project a near-J point onto the potential tube {G ~= g0}.

    Tries the point itself, then tiny nudges in 8 directions (a point that
    rounded to the inner side of J has no outward potential signal).
    Raises ValueError when no placement within max_offset exists.
    """
    c, dc, d = _poly_arrays(map)
    z = complex(z)
    zp, ok = project_to_tube(c, dc, d, z, g0)
    if ok and abs(zp - z) <= max_offset:
        return complex(zp)
    for eps in (1e-10, 1e-8):
        for k in range(8):
            u = np.exp(2j * np.pi * (k + 0.5) / 8)
            zp, ok = project_to_tube(c, dc, d, z + eps * u, g0)
            if ok and abs(zp - z) <= max_offset:
                return complex(zp)
    raise ValueError(
        f"cannot place point {z!r} on the Julia-set potential tube "
        f"(is it within {max_offset:g} of the Julia set?)"
    )


def green_value(map: RationalMap, z: complex) -> float:
    """Basin-of-infinity potential G(z) (0 for points that never escape)."""
    c, dc, d = _poly_arrays(map)
    g, _gz = green_potential(c, dc, d, complex(z))
    return float(g)


def stabilized_orbit(map: RationalMap, z0: complex, n: int, g0: float = TUBE_LEVEL) -> np.ndarray:
    """Length-n tube-projected forward orbit starting next to z0."""
    c, dc, d = _poly_arrays(map)
    start = place_on_tube(map, z0, g0)
    out = np.empty(n, dtype=np.complex128)
    tube_orbit_fill(c, dc, d, start, out, g0)
    return out


def recurrence_scan(
    map: RationalMap,
    start: complex,
    center: complex,
    radii_desc: np.ndarray,
    n_max: int,
    stabilize: bool = True,
    count_entries: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Entry statistics of the orbit of `start` into balls around `center`.

    Returns (first, count, last, stopped_at); stabilize=True uses the tube
    projection (polynomial maps only), in which case stopped_at is 0.
    count_entries=False stops as soon as every radius has its first entry.
    """
    radii_desc = np.ascontiguousarray(radii_desc, dtype=np.float64)
    if np.any(np.diff(radii_desc) >= 0):
        raise ValueError("radii must be strictly decreasing")
    if stabilize and map.is_polynomial:
        c, dc, d = _poly_arrays(map)
        z = place_on_tube(map, start)
        first, count, last = tube_recurrence_scan(
            c, dc, d, complex(z), complex(center), radii_desc, n_max, TUBE_LEVEL, count_entries
        )
        return first, count, last, 0
    num, den = _rational_arrays(map)
    return direct_recurrence_scan(
        num, den, complex(start), complex(center), radii_desc, n_max, ESCAPE_RADIUS, count_entries
    )
