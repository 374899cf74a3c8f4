"""Thermodynamic formalism: pressure, Bowen root, covariance, decay rates.

Pressure of -s*log|T'| is approximated by sums over repelling period-n
points, P_n(s) = (1/n) log sum |(T^n)'|^{-s}; the variational supremum
itself is not computable, and for z^d the periodic-orbit sum is exact-
checkable in closed form.  The Bowen root of P_n then estimates the
Hausdorff dimension of the Julia set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from ._orbit_dispatch import forward_orbit
from .rational_map import RationalMap, periodic_points

REPELLING_MARGIN = 1e-9  # multiplier > 1 + margin: attracting/neutral points are off J
DEFAULT_PAIR_BUDGET = 10 ** 6


@dataclass(frozen=True)
class PressureCurve:
    n: int
    values: list[tuple[float, float]]  # (s, P_n(s))


def periodic_log_multipliers(map: RationalMap, n: int) -> np.ndarray:
    """log|(T^n)'(z)| over repelling period-n points (T^n z = z, |mult| > 1)."""
    pts = periodic_points(map, n)
    logs = [math.log(m) for _z, m in pts if m > 1.0 + REPELLING_MARGIN]
    if not logs:
        raise ValueError(f"no repelling periodic points of period {n} found")
    return np.array(logs, dtype=np.float64)


def pressure_from_log_multipliers(log_mults: np.ndarray, s: float, n: int) -> float:
    return float(logsumexp(-s * log_mults) / n)


def pressure_estimate(map: RationalMap, s: float, n: int) -> float:
    """P_n(s) = (1/n) log sum over repelling period-n points of |(T^n)'|^{-s}."""
    return pressure_from_log_multipliers(periodic_log_multipliers(map, n), s, n)


def pressure_curve(map: RationalMap, n: int, s_values) -> PressureCurve:
    logs = periodic_log_multipliers(map, n)
    vals = [(float(s), pressure_from_log_multipliers(logs, float(s), n)) for s in s_values]
    return PressureCurve(n=n, values=vals)


def hausdorff_dimension(
    map: RationalMap, n: int, tol: float = 1e-4, s_hi: float = 2.0
) -> float:
    """Bowen root: the unique s with P_n(-s log|T'|) = 0, by bisection.

    P_n is strictly decreasing in s (repelling multipliers exceed 1), so the
    root in [0, s_hi] is unique once the endpoints bracket it.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    logs = periodic_log_multipliers(map, n)
    lo, hi = 0.0, float(s_hi)
    p_lo = pressure_from_log_multipliers(logs, lo, n)
    p_hi = pressure_from_log_multipliers(logs, hi, n)
    if not (p_lo > 0 > p_hi):
        raise ValueError(
            f"bracket failure: P_{n}({lo}) = {p_lo:.6g}, P_{n}({hi}) = {p_hi:.6g}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pressure_from_log_multipliers(logs, mid, n) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lipschitz_norm(f, sample, max_pairs: int = DEFAULT_PAIR_BUDGET, seed: int = 0) -> float:
    """Lower bound on sup |f(z1)-f(z2)|/|z1-z2| over sampled pairs.

    All pairs when their number fits the budget, otherwise a Philox-seeded
    pair subsample; either way the result is deterministic.
    """
    pts = np.asarray(sample, dtype=np.complex128)
    if pts.size < 2:
        raise ValueError("need at least two sample points")
    vals = np.asarray(f(pts), dtype=np.float64)
    n = pts.size
    best = 0.0
    if n * (n - 1) // 2 <= max_pairs:
        for i in range(n - 1):
            dz = np.abs(pts[i + 1 :] - pts[i])
            df = np.abs(vals[i + 1 :] - vals[i])
            good = dz > 0
            if good.any():
                best = max(best, float((df[good] / dz[good]).max()))
        return best
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0x4C6970], dtype=np.uint64)))
    idx = rng.integers(0, n, size=(max_pairs, 2))
    dz = np.abs(pts[idx[:, 0]] - pts[idx[:, 1]])
    df = np.abs(vals[idx[:, 0]] - vals[idx[:, 1]])
    good = dz > 0
    return float((df[good] / dz[good]).max()) if good.any() else 0.0


def _forward_orbit(map: RationalMap, z0: complex, total: int) -> np.ndarray:
    return forward_orbit(map, z0, total)


@dataclass(frozen=True)
class CovarianceEntry:
    n: int
    cov: float
    stderr: float


def covariance_series(
    map: RationalMap,
    z0: complex,
    f,
    g,
    n_values,
    length: int,
    batches: int = 8,
) -> list[CovarianceEntry]:
    """Lag-n covariances (1/L) sum f(T^{n+j} z0) g(T^j z0) - avg_f avg_g.

    One orbit serves every lag; standard errors come from 8 contiguous
    batch means.  Ergodic time averages replace the integrals, which is
    what makes covariance measurable from a single typical orbit.
    """
    n_values = [int(n) for n in n_values]
    if length < 10 ** 4:
        raise ValueError("orbit length must be >= 1e4 for stable covariances")
    if min(n_values) < 0:
        raise ValueError("lags must be nonnegative")
    total = length + max(n_values)
    orbit_pts = _forward_orbit(map, z0, total)
    fvals = np.asarray(f(orbit_pts), dtype=np.float64)
    gvals = np.asarray(g(orbit_pts), dtype=np.float64)
    edges = np.linspace(0, length, batches + 1).astype(int)
    out = []
    for n in n_values:
        # centered product: identical point estimate, much smaller batch
        # variance than subtracting the mean product afterwards
        fc = fvals[n : n + length] - fvals[n : n + length].mean()
        gc = gvals[:length] - gvals[:length].mean()
        prod = fc * gc
        cov = float(prod.mean())
        batch_vals = [prod[a:b].mean() for a, b in zip(edges[:-1], edges[1:])]
        stderr = float(np.std(batch_vals, ddof=1) / math.sqrt(batches))
        out.append(CovarianceEntry(n=n, cov=cov, stderr=stderr))
    return out


def covariance_estimate(
    map: RationalMap, z0: complex, f, g, n: int, length: int
) -> float:
    """Single lag-n covariance along the orbit of z0 (see covariance_series)."""
    return covariance_series(map, z0, f, g, [n], length)[0].cov


@dataclass(frozen=True)
class DecaySequence:
    """Nonnegative decay bounds theta_n, starting at n = n_offset."""

    theta: np.ndarray
    n_offset: int = 1

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=np.float64)
        if t.ndim != 1 or not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValueError("theta must be a finite nonnegative 1-d sequence")
        object.__setattr__(self, "theta", t)


@dataclass(frozen=True)
class DecayClassification:
    """Outcome of the polynomial-vs-geometric model contest."""

    kind: str  # "polynomial" | "super-polynomial" | "inconclusive"
    p_hat: float | None = None
    geometric_rate: float | None = None
    rms_polynomial: float | None = None
    rms_geometric: float | None = None
    reason: str | None = None

    def __post_init__(self):
        if self.kind == "polynomial" and not (self.p_hat and self.p_hat > 0):
            raise ValueError("polynomial classification requires p_hat > 0")
        if self.kind == "super-polynomial" and not (
            self.geometric_rate and 0 < self.geometric_rate < 1
        ):
            raise ValueError("super-polynomial classification requires rate in (0, 1)")

    def to_jsonable(self) -> dict:
        return {
            "model": self.kind,
            "parameter": self.p_hat if self.kind == "polynomial" else self.geometric_rate,
            "residuals": {
                "polynomial_rms": self.rms_polynomial,
                "geometric_rms": self.rms_geometric,
            },
            "reason": self.reason,
        }


MODEL_MARGIN = 0.10
# log-space misfit above this means "fits neither"; 1/log(n+1) over n <= 12
# sneaks under 0.04 on the log-log model, so the gate sits below that
RMS_GATE = 0.02


def decay_fit(
    seq: DecaySequence,
    noise_floor: float = 0.0,
    margin: float = MODEL_MARGIN,
    rms_gate: float = RMS_GATE,
) -> DecayClassification:
    """Classify theta_n as polynomial (n^-p) or geometric (rho^n) decay.

    Both models are fit in log space on the usable entries (theta above the
    noise floor); the winner must beat the loser's RMS by `margin` and also
    fit absolutely well.  The absolute gate adapts to the noise implied by
    the floor (floor = 3 sigma), so measured sequences are not forced into
    "inconclusive" by measurement noise alone.
    """
    theta = seq.theta
    ns = np.arange(seq.n_offset, seq.n_offset + len(theta), dtype=np.float64)
    usable = theta > max(noise_floor, 0.0)
    usable &= theta > 0
    if usable.sum() < 8:
        return DecayClassification(
            kind="inconclusive",
            reason=f"only {int(usable.sum())} usable entries above the noise floor",
        )
    x_n = ns[usable]
    y = np.log(theta[usable])

    fit_poly = stats.linregress(np.log(x_n), y)
    fit_geo = stats.linregress(x_n, y)
    rms_p = float(np.sqrt(np.mean((y - (fit_poly.intercept + fit_poly.slope * np.log(x_n))) ** 2)))
    rms_g = float(np.sqrt(np.mean((y - (fit_geo.intercept + fit_geo.slope * x_n)) ** 2)))

    if noise_floor > 0:
        rel_sigma = (noise_floor / 3.0) / theta[usable]
        gate = max(rms_gate, 2.0 * float(np.sqrt(np.mean(rel_sigma ** 2))))
    else:
        gate = rms_gate

    p_hat = -float(fit_poly.slope)
    rate = math.exp(fit_geo.slope)
    if rms_p <= gate and rms_p < (1.0 - margin) * rms_g and p_hat > 0:
        return DecayClassification(
            kind="polynomial", p_hat=p_hat, rms_polynomial=rms_p, rms_geometric=rms_g
        )
    if rms_g <= gate and rms_g < (1.0 - margin) * rms_p and 0 < rate < 1:
        return DecayClassification(
            kind="super-polynomial",
            geometric_rate=rate,
            rms_polynomial=rms_p,
            rms_geometric=rms_g,
        )
    return DecayClassification(
        kind="inconclusive",
        rms_polynomial=rms_p,
        rms_geometric=rms_g,
        reason="neither model fits within the residual gate and margin",
    )


# observables for the CLI and the experiments; all pure and vectorized
def obs_re(z):
    return np.real(z)


def obs_im(z):
    return np.imag(z)


def obs_abs(z):
    return np.abs(z)


def obs_sawtooth(z):
    """Fractional angle in [0, 1): the circle coordinate of z."""
    return np.mod(np.angle(z) / (2.0 * np.pi), 1.0)


OBSERVABLES = {
    "re": obs_re,
    "im": obs_im,
    "abs": obs_abs,
    "sawtooth": obs_sawtooth,
}
