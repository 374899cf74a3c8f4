"""All-roots polynomial solver: Aberth-Ehrlich simultaneous iteration.

Coefficients are complex, lowest degree first.  Deflation chains are avoided
on purpose: periodic-point polynomials reach degrees in the thousands and a
simultaneous method keeps every root equally conditioned.
"""

from __future__ import annotations

import numpy as np

UPDATE_TOL = 1e-12
RESIDUAL_TOL = 1e-10
MAX_SWEEPS = 400
MAX_RESTARTS = 4

# Row block for the pairwise Aberth sums; bounds peak memory at
# _CHUNK * degree complex entries.
_CHUNK = 512


class RootFindingError(RuntimeError):
    """Raised when the simultaneous iteration fails to meet the residual bar."""


def trim_trailing_zeros(coeffs: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Drop (near-)zero leading coefficients so len(coeffs) == degree + 1."""
    c = np.asarray(coeffs, dtype=np.complex128)
    scale = np.max(np.abs(c)) if c.size else 0.0
    cut = c.size
    while cut > 1 and abs(c[cut - 1]) <= tol * scale:
        cut -= 1
    return np.ascontiguousarray(c[:cut])


def poly_eval(coeffs: np.ndarray, z):
    """Horner evaluation, lowest-degree-first coefficients, scalar or array z."""
    z = np.asarray(z, dtype=np.complex128)
    acc = np.full(z.shape, coeffs[-1], dtype=np.complex128)
    for k in range(len(coeffs) - 2, -1, -1):
        acc = acc * z + coeffs[k]
    return acc


def poly_derivative(coeffs: np.ndarray) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.complex128)
    if c.size <= 1:
        return np.zeros(1, dtype=np.complex128)
    return c[1:] * np.arange(1, c.size, dtype=np.float64)


def residual_scale(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Backward-error scale sum_i |c_i| |z|^i used in the stopping criterion."""
    az = np.abs(np.asarray(z, dtype=np.complex128))
    acc = np.full(az.shape, abs(coeffs[-1]), dtype=np.float64)
    for k in range(len(coeffs) - 2, -1, -1):
        acc = acc * az + abs(coeffs[k])
    return np.maximum(acc, 1.0)


def _aberth_sums_against(za: np.ndarray, z_all: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """S_i = sum_{j != i} 1/(za_i - z_all_j) for the active subset, in row blocks."""
    out = np.empty(za.size, dtype=np.complex128)
    for lo in range(0, za.size, _CHUNK):
        hi = min(lo + _CHUNK, za.size)
        diff = za[lo:hi, None] - z_all[None, :]
        for i in range(lo, hi):
            diff[i - lo, idx[i]] = np.inf  # self term -> 0 after reciprocal
        out[lo:hi] = (1.0 / diff).sum(axis=1)
    return out


def _initial_guesses(coeffs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = len(coeffs) - 1
    lead = abs(coeffs[-1])
    cauchy = 1.0 + max(abs(c) for c in coeffs[:-1]) / lead
    low = abs(coeffs[0]) / lead
    radius = low ** (1.0 / n) if low > 0 else 0.5
    radius = min(max(radius, 1e-3), cauchy)
    ang = 2.0 * np.pi * (np.arange(n) + 0.35) / n + 0.213
    guesses = radius * np.exp(1j * ang)
    # break symmetry; exact symmetric configurations can stall the iteration
    guesses *= 1.0 + 1e-3 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return guesses


def all_roots(
    coeffs,
    update_tol: float = UPDATE_TOL,
    residual_tol: float = RESIDUAL_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> np.ndarray:
    """Return all complex roots of the polynomial, with multiplicity.

    Raises RootFindingError when some residual stays above
    residual_tol * scale after the restart budget is exhausted.
    """
    c = trim_trailing_zeros(coeffs)
    if c.size == 1:
        if c[0] == 0:
            raise ValueError("zero polynomial has no well-defined root set")
        return np.empty(0, dtype=np.complex128)

    # factor out exact roots at the origin (z^m | p); cheap and exact,
    # and it turns z^(d^n) - z into the well-conditioned z^(d^n - 1) - 1
    m = 0
    while m < c.size - 1 and c[m] == 0:
        m += 1
    zeros_at_origin = np.zeros(m, dtype=np.complex128)
    c = np.ascontiguousarray(c[m:])
    if c.size == 1:
        return zeros_at_origin

    if c.size == 2:  # linear
        return np.concatenate([zeros_at_origin, [-c[0] / c[1]]])

    dc = poly_derivative(c)
    # fixed-key generator: identical inputs give identical roots
    rng = np.random.Generator(np.random.Philox(key=np.array([0x6A6C6162, 0], dtype=np.uint64)))
    z = _initial_guesses(c, rng)

    lead = abs(c[-1])
    cauchy = 2.0 * (1.0 + max(abs(x) for x in c[:-1]) / lead) if c.size > 1 else 2.0
    # beyond the evaluation-safe radius Horner overflows and no root can be
    # located in doubles anyway; wanderers get re-seeded on the start circle
    safe = 1.0
    while residual_scale(c, np.array([2.0 * safe + 0j]))[0] < 1e280 and safe < cauchy:
        safe *= 2.0
    root_bound = min(cauchy, 2.0 * safe)
    reset_radius = min(root_bound, 4.0 * float(np.median(np.abs(z))))

    for restart in range(MAX_RESTARTS + 1):
        active = np.ones(z.size, dtype=bool)
        for _ in range(max_sweeps):
            idx = np.nonzero(active)[0]
            za = z[idx]
            with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
                pv = poly_eval(c, za)
                dpv = poly_eval(dc, za)
                sums = _aberth_sums_against(za, z, idx)
                w = pv / dpv
                corr = w / (1.0 - w * sums)
            # non-finite corrections mean the iterate is numerically dead
            # (Horner under/overflow); reseed it on the start circle
            bad = ~np.isfinite(corr)
            corr[bad] = 0.0
            za = za - corr
            lost = bad | ~np.isfinite(za) | (np.abs(za) > root_bound)
            if lost.any():
                ang = 2.0 * np.pi * rng.random(int(lost.sum()))
                za[lost] = reset_radius * np.exp(1j * ang)
            z[idx] = za
            still = (np.abs(corr) > update_tol * np.maximum(1.0, np.abs(za))) | lost
            active[idx] = still
            if not active.any():
                break
        with np.errstate(over="ignore", invalid="ignore"):
            res = np.abs(poly_eval(c, z))
            ok = res <= residual_tol * residual_scale(c, z)
        if ok.all():
            return np.concatenate([zeros_at_origin, z])
        if restart < MAX_RESTARTS:
            # perturb the stragglers and go again
            n_bad = int((~ok).sum())
            jitter = 0.05 * (rng.standard_normal(n_bad) + 1j * rng.standard_normal(n_bad))
            z[~ok] = z[~ok] * (1.0 + jitter) + 0.01 * jitter

    worst = float(np.max(res / residual_scale(c, z)))
    raise RootFindingError(
        f"root finder did not converge: worst scaled residual {worst:.3e} "
        f"> {residual_tol:.1e} for degree {c.size - 1 + m}"
    )
