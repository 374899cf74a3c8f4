"""Julia-set sampling via backward random walks, expansion estimates, nets.

The inverse-iteration sampler runs independent backward walks with uniform
branch choice; walk endpoints equidistribute per the Lyubich measure (Haar
on the circle for z^d).  Branch bits come from a counter-based Philox
stream keyed per fixed-size chunk, so output is reproducible and
independent of any worker scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import orbits
from .rational_map import ESCAPE_RADIUS, RationalMap, preimages
from .roots import all_roots, poly_eval

SAMPLE_CHUNK = 1 << 16
DEFAULT_BURN_IN = 60  # backward contraction 2^-60 for quadratic maps: below 1 ulp
EXCEPTIONAL_TOL = 1e-9
_GENERAL_WALK_BUDGET = 200_000


@dataclass(frozen=True)
class JuliaSample:
    """Point cloud on (a 1e-12 potential neighborhood of) the Julia set."""

    points: np.ndarray
    map: RationalMap
    burn_in: int
    seed: int


@dataclass(frozen=True)
class ExpansionEstimate:
    """Fitted constants of the hyperbolicity bound |(T^n)'| >= C * lambda^n."""

    C_hat: float
    lambda_hat: float
    n_range: tuple[int, int]


def _binomial_form(map: RationalMap) -> tuple[complex, complex] | None:
    """(a, b) if T(z) = a z^d + b (denominator constant), else None."""
    if not map.is_polynomial:
        return None
    c = map.numerator.coeffs / map.denominator.coeffs[0]
    if np.any(c[1:-1] != 0):
        return None
    return complex(c[-1]), complex(c[0])


def _preimage_batch(map: RationalMap, w: np.ndarray, branch: np.ndarray) -> np.ndarray:
    """One uniformly chosen preimage per point, branch index in [0, d)."""
    d = map.degree
    form = _binomial_form(map)
    if form is not None:
        a, b = form
        root = np.power((w - b) / a, 1.0 / d)
        return root * np.exp(2j * np.pi * branch / d)
    if map.is_polynomial and d == 2:
        c = map.numerator.coeffs / map.denominator.coeffs[0]
        c2, c1, c0 = complex(c[2]), complex(c[1]), complex(c[0])
        disc = np.sqrt(c1 * c1 - 4.0 * c2 * (c0 - w))
        return np.where(branch == 0, (-c1 + disc), (-c1 - disc)) / (2.0 * c2)
    # general rational map: per-point all-roots solve, deterministic ordering
    out = np.empty(len(w), dtype=np.complex128)
    for i, wi in enumerate(w):
        roots = preimages(map, complex(wi))
        out[i] = roots[branch[i] % len(roots)]
    return out


def _default_start(map: RationalMap) -> complex:
    # any non-exceptional point works; backward walks contract onto J
    for candidate in (1.0 + 0.0j, 0.5 + 0.25j, -0.75 + 0.5j):
        pre = preimages(map, candidate)
        if not np.all(np.abs(pre - candidate) < EXCEPTIONAL_TOL):
            return candidate
    raise ValueError("could not find a non-exceptional starting point")


def inverse_iteration_sample(
    map: RationalMap,
    count: int,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = 0,
    start: complex | None = None,
    validate: bool = True,
) -> JuliaSample:
    """Sample `count` points of the Lyubich measure by backward random walks.

    Each walk starts at `start`, takes `burn_in` uniformly chosen preimage
    steps, and keeps its endpoint.  Walks are independent; the branch bits
    for walk i depend only on (seed, i), never on scheduling.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if burn_in < 1:
        raise ValueError("burn_in must be >= 1")
    if start is None:
        start = _default_start(map)
    start = complex(start)
    pre = preimages(map, start)
    if np.all(np.abs(pre - start) < EXCEPTIONAL_TOL):
        raise ValueError("exceptional starting point: preimage set is a singleton orbit")

    need_general = _binomial_form(map) is None and not (map.is_polynomial and map.degree == 2)
    if need_general and count * burn_in > _GENERAL_WALK_BUDGET:
        raise ValueError(
            "general rational maps use a per-point root solve for backward steps; "
            f"count * burn_in = {count * burn_in} exceeds the {_GENERAL_WALK_BUDGET} budget"
        )

    d = map.degree
    chunks = []
    for c0 in range(0, count, SAMPLE_CHUNK):
        c1 = min(c0 + SAMPLE_CHUNK, count)
        key = np.array([np.uint64(seed), np.uint64(c0 // SAMPLE_CHUNK)], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        branches = rng.integers(0, d, size=(c1 - c0, burn_in), dtype=np.int64)
        z = np.full(c1 - c0, start, dtype=np.complex128)
        for j in range(burn_in):
            z = _preimage_batch(map, z, branches[:, j])
        chunks.append(z)
    points = np.concatenate(chunks)

    if validate:
        _validate_sample(map, points)
    return JuliaSample(points=points, map=map, burn_in=burn_in, seed=seed)


def _validate_sample(map: RationalMap, points: np.ndarray) -> None:
    """Reject samples whose forward orbits would leave the dynamical plane.

    For polynomial maps the bounded-orbit certificate is a vanishing escape
    potential (direct 100-step float probes are meaningless on a repeller:
    transversal rounding grows like lambda^n).  Rational maps get a short
    direct probe within the float-validity horizon.
    """
    if map.is_polynomial:
        probe_idx = np.linspace(0, len(points) - 1, min(len(points), 512)).astype(int)
        for i in probe_idx:
            g = orbits.green_value(map, complex(points[i]))
            if g > 1e-9:
                raise ValueError(
                    f"sample point {points[i]!r} fails the bounded-orbit check (G = {g:.2e})"
                )
        return
    num = map.numerator.coeffs
    den = map.denominator.coeffs
    probe_idx = np.linspace(0, len(points) - 1, min(len(points), 128)).astype(int)
    z = points[probe_idx].copy()
    for _ in range(30):
        qv = poly_eval(den, z)
        if np.any(qv == 0):
            raise ValueError("sample point hits a pole within 30 steps")
        z = poly_eval(num, z) / qv
        if np.any(~np.isfinite(z)) or np.any(np.abs(z) > ESCAPE_RADIUS):
            raise ValueError("sample point escapes within 30 steps")


def hyperbolicity_estimate(
    map: RationalMap, sample: JuliaSample, n: int = 20, max_points: int = 8192
) -> ExpansionEstimate:
    """Fit C, lambda of the expansion bound from worst-case orbit derivatives.

    For k = 1..n the floor min_z log|(T^k)'(z)| over the sample is regressed
    against k; lambda_hat = exp(slope), C_hat = exp(intercept).
    """
    if n < 8:
        raise ValueError("need n >= 8 for the expansion fit")
    pts = sample.points
    if len(pts) == 0:
        raise ValueError("empty sample")
    stride = max(1, len(pts) // max_points)
    z = pts[::stride].astype(np.complex128).copy()

    num, den = map.numerator.coeffs, map.denominator.coeffs
    dnum, dden = map.numerator.derivative().coeffs, map.denominator.derivative().coeffs
    logsum = np.zeros(len(z))
    floors = np.empty(n)
    for k in range(1, n + 1):
        qv = poly_eval(den, z)
        if np.any(qv == 0):
            raise ValueError("orbit hit a pole during expansion estimation")
        pv = poly_eval(num, z)
        dv = (poly_eval(dnum, z) * qv - pv * poly_eval(dden, z)) / (qv * qv)
        with np.errstate(divide="ignore"):
            logsum += np.log(np.abs(dv))
        z = pv / qv
        if np.any(~np.isfinite(z)) or np.any(np.abs(z) > ESCAPE_RADIUS):
            raise ValueError("orbit escaped during expansion estimation")
        floors[k - 1] = logsum.min()

    ks = np.arange(1, n + 1, dtype=np.float64)
    fit = stats.linregress(ks, floors)
    lam = math.exp(fit.slope)
    if lam <= 1.01:
        raise ValueError(
            f"map not numerically hyperbolic on sample (lambda_hat = {lam:.4f})"
        )
    return ExpansionEstimate(C_hat=math.exp(fit.intercept), lambda_hat=lam, n_range=(1, n))


def maximal_separated_set(points, r: float) -> np.ndarray:
    """Greedy maximal r-separated subset in input order.

    Kept points are pairwise >= r apart and every input point lies within r
    of some kept point.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    pts = np.asarray(points, dtype=np.complex128)
    if pts.size == 0:
        return pts.copy()
    kept = np.empty(len(pts), dtype=np.complex128)
    nkept = 0
    for z in pts:
        if nkept == 0 or np.min(np.abs(kept[:nkept] - z)) >= r:
            kept[nkept] = z
            nkept += 1
    return kept[:nkept].copy()
