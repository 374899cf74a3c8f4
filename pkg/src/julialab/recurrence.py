"""Return times, recurrence rates, and the rate-vs-dimension comparison.

Everything here is deterministic: return times come from direct iteration
(the literal contract) or, for the long-horizon rate experiments on
polynomial maps, from the potential-tube orbit that realizes a typical
forward orbit without the float escape artifact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import stats

from . import orbits
from .empirical_measure import (
    DEFAULT_SCHEDULE,
    DimensionEstimate,
    EmpiricalMeasure,
    RadiusSchedule,
    local_dimension,
    _windowed_slopes,
)
from .rational_map import RationalMap, require_finite_complex

DEFAULT_N_MAX = 10 ** 7
MIN_REGRESSION_TAU = 10.0  # log tau resolution below this distorts slopes
PERIODIC_DETECTION_TOL = 1e-9
PERIODIC_PERIOD_CAP = 64


@dataclass(frozen=True)
class ReturnTime:
    """tau_r: first positive iterate entering the ball, or NotFound.

    NotFound stands for tau = infinity (an orbit that never enters);
    `escaped` marks orbits that left the dynamical plane before the horizon.
    """

    n: int | None
    n_max: int
    escaped: bool = False

    @classmethod
    def found(cls, n: int, n_max: int) -> "ReturnTime":
        if n < 1:
            raise ValueError("return times are positive integers")
        return cls(n=n, n_max=n_max)

    @classmethod
    def not_found(cls, n_max: int, escaped: bool = False) -> "ReturnTime":
        return cls(n=None, n_max=n_max, escaped=escaped)

    @property
    def is_finite(self) -> bool:
        return self.n is not None

    @property
    def value_or_inf(self) -> float:
        return float(self.n) if self.n is not None else math.inf

    def le(self, other: "ReturnTime") -> bool:
        """self <= other under the NotFound-is-infinity convention."""
        return self.value_or_inf <= other.value_or_inf


@dataclass(frozen=True)
class RecurrenceRecord:
    """Per-center table of (r, tau) rows, radii strictly decreasing."""

    center: complex
    rows: list[tuple[float, ReturnTime]]

    def __post_init__(self):
        radii = [r for r, _ in self.rows]
        if any(b >= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly decreasing")
        taus = [t.value_or_inf for _, t in self.rows]
        if any(b < a for a, b in zip(taus, taus[1:])):
            raise ValueError("tau must be non-increasing as r grows")


@dataclass(frozen=True)
class RateEstimate:
    """Recurrence rate: OLS slope of log tau against -log r, with windowed
    lower/upper surrogates; truncated marks dropped NotFound rows."""

    R_lower: float
    R_upper: float
    slope: float
    slope_stderr: float
    truncated: bool

    def __post_init__(self):
        if self.R_lower > self.R_upper + 1e-12:
            raise ValueError("R_lower must not exceed R_upper")


def return_time(
    map: RationalMap,
    w: complex,
    z: complex,
    r: float,
    n_max: int,
    escape_radius: float = orbits.ESCAPE_RADIUS,
) -> ReturnTime:
    """Least n in [1, n_max] with |T^n(w) - z| < r, by direct iteration."""
    if r <= 0:
        raise ValueError("r must be positive")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    w = require_finite_complex(w)
    z = require_finite_complex(z)
    num = np.ascontiguousarray(map.numerator.coeffs)
    den = np.ascontiguousarray(map.denominator.coeffs)
    radii = np.array([r], dtype=np.float64)
    first, _count, _last, stopped = orbits.direct_recurrence_scan(
        num, den, w, z, radii, n_max, escape_radius, False
    )
    if first[0] > 0:
        return ReturnTime.found(int(first[0]), n_max)
    return ReturnTime.not_found(n_max, escaped=stopped > 0)


def _scan(map, start, center, radii_desc, n_max, stabilize, count_entries=True):
    use_tube = stabilize and map.is_polynomial
    return orbits.recurrence_scan(
        map, start, center, radii_desc, n_max, stabilize=use_tube, count_entries=count_entries
    )


def return_time_table(
    map: RationalMap,
    z: complex,
    sched: RadiusSchedule = DEFAULT_SCHEDULE,
    n_max: int = DEFAULT_N_MAX,
    stabilize: bool = True,
) -> RecurrenceRecord:
    """First-return table tau_{r_k}(z) over the schedule, one orbit pass."""
    radii = sched.radii
    if detect_period(map, z) is not None:
        stabilize = False
    first, _count, _last, stopped = _scan(map, z, z, radii, n_max, stabilize, count_entries=False)
    rows = []
    for r, f in zip(radii, first):
        tau = ReturnTime.found(int(f), n_max) if f > 0 else ReturnTime.not_found(n_max, stopped > 0)
        rows.append((float(r), tau))
    return RecurrenceRecord(center=complex(z), rows=rows)


def recurrence_rate(
    map: RationalMap,
    z: complex,
    sched: RadiusSchedule = DEFAULT_SCHEDULE,
    n_max: int = DEFAULT_N_MAX,
    statistic: str = "mean-return",
    stabilize: bool = True,
) -> RateEstimate:
    """Estimate the recurrence rate exponent of tau_r(z) ~ r^-R.

    statistic="first-return" regresses the literal first returns;
    "mean-return" (default) regresses the mean gap between all observed
    entries of the orbit into each ball, which estimates the same exponent
    (Kac) with far less log-Exp(1) noise from single hitting times.
    """
    if statistic not in ("first-return", "mean-return"):
        raise ValueError(f"unknown statistic {statistic!r}")
    radii = sched.radii
    if detect_period(map, z) is not None:
        # a periodic center re-enters every ball within one period, for
        # every radius: tau_r is bounded, so the rate is exactly zero
        return RateEstimate(R_lower=0.0, R_upper=0.0, slope=0.0, slope_stderr=0.0, truncated=False)
    first, count, last, _stopped = _scan(
        map, z, z, radii, n_max, stabilize, count_entries=(statistic == "mean-return")
    )

    if statistic == "first-return":
        usable = first > 0
        tau = first.astype(np.float64)
    else:
        usable = count > 0
        tau = np.divide(last, count, out=np.zeros(len(radii)), where=count > 0)
    truncated = bool((~usable).any())
    if usable.sum() < 4:
        raise ValueError(
            f"insufficient recurrence data: {int(usable.sum())} usable radii"
        )
    # trim away tiny-tau rows unless that starves the regression
    big = usable & (tau >= MIN_REGRESSION_TAU)
    if big.sum() >= 4:
        usable = big
    ks = np.nonzero(usable)[0]
    x = -np.log(radii[ks])
    y = np.log(tau[ks])
    fit = stats.linregress(x, y)
    slopes = _windowed_slopes(x, y)
    if len(slopes) == 0:
        slopes = np.array([fit.slope])
    stderr = float(fit.stderr) if fit.stderr is not None and math.isfinite(fit.stderr) else 0.0
    return RateEstimate(
        R_lower=float(slopes.min()),
        R_upper=float(slopes.max()),
        slope=float(fit.slope),
        slope_stderr=stderr,
        truncated=truncated,
    )


@dataclass(frozen=True)
class MonotonicityCase:
    w: complex
    z: complex
    r: float
    k: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.r <= 0:
            raise ValueError("r must be positive")


@dataclass(frozen=True)
class MonotonicityRow:
    case: MonotonicityCase
    tau_r_center: ReturnTime
    tau_kr_center: ReturnTime
    tau_r_incidence: ReturnTime
    tau_kr_incidence: ReturnTime
    tau_r_over_k_center: ReturnTime
    eq9_ok: bool
    eq10_ok: bool
    eq11_left: bool
    eq11_right: bool
    w_in_ball: bool


@dataclass(frozen=True)
class MonotonicityReport:
    rows: list[MonotonicityRow]
    eq9_violations: int
    eq10_violations: int

    @property
    def total(self) -> int:
        return len(self.rows)


def verify_monotonicity(
    map: RationalMap,
    cases,
    n_max: int,
    stabilize: bool = True,
) -> MonotonicityReport:
    """Check the radius-monotonicity laws of return/incidence times.

    tau_{kr}(z) <= tau_r(z) and tau_{kr}(w,z) <= tau_r(w,z) are asserted
    (NotFound compares as infinity).  The printed sandwich
    tau_{kr}(z) <= tau_r(w,z) <= tau_{r/k}(z) is recorded per row but not
    asserted; as stated it appears inconsistent with the primary
    monotonicity direction, so outcomes are logged only.
    """
    rows = []
    v9 = v10 = 0
    for case in cases:
        if not isinstance(case, MonotonicityCase):
            case = MonotonicityCase(*case)
        r, k = case.r, case.k
        # one orbit pass per origin; nested radii share the pass exactly.
        # numerically periodic origins iterate directly (their recurrence is
        # the cycle itself, which the tube orbit would wander off)
        center_radii = np.unique(np.array([k * r, r, r / k], dtype=np.float64))[::-1]
        stab_z = stabilize and detect_period(map, case.z) is None
        first_c, _cc, _lc, stop_c = _scan(
            map, case.z, case.z, center_radii, n_max, stab_z, count_entries=False
        )
        incid_radii = np.unique(np.array([k * r, r], dtype=np.float64))[::-1]
        stab_w = stabilize and detect_period(map, case.w) is None
        first_w, _cw, _lw, stop_w = _scan(
            map, case.w, case.z, incid_radii, n_max, stab_w, count_entries=False
        )

        def tau_of(first, radii, target, stopped):
            idx = int(np.nonzero(radii == target)[0][0])
            f = first[idx]
            if f > 0:
                return ReturnTime.found(int(f), n_max)
            return ReturnTime.not_found(n_max, escaped=stopped > 0)

        t_r_c = tau_of(first_c, center_radii, r, stop_c)
        t_kr_c = tau_of(first_c, center_radii, k * r, stop_c)
        t_rk_c = tau_of(first_c, center_radii, r / k, stop_c)
        t_r_w = tau_of(first_w, incid_radii, r, stop_w)
        t_kr_w = tau_of(first_w, incid_radii, k * r, stop_w)

        eq9 = t_kr_c.le(t_r_c)
        eq10 = t_kr_w.le(t_r_w)
        eq11_left = t_kr_c.le(t_r_w)
        eq11_right = t_r_w.le(t_rk_c)
        v9 += not eq9
        v10 += not eq10
        rows.append(
            MonotonicityRow(
                case=case,
                tau_r_center=t_r_c,
                tau_kr_center=t_kr_c,
                tau_r_incidence=t_r_w,
                tau_kr_incidence=t_kr_w,
                tau_r_over_k_center=t_rk_c,
                eq9_ok=eq9,
                eq10_ok=eq10,
                eq11_left=eq11_left,
                eq11_right=eq11_right,
                w_in_ball=abs(case.w - case.z) < r,
            )
        )
    return MonotonicityReport(rows=rows, eq9_violations=v9, eq10_violations=v10)


def detect_period(map: RationalMap, z: complex, cap: int = PERIODIC_PERIOD_CAP,
                  tol: float = PERIODIC_DETECTION_TOL) -> int | None:
    """Smallest p <= cap with |T^p(z) - z| < tol, else None."""
    num = np.ascontiguousarray(map.numerator.coeffs)
    den = np.ascontiguousarray(map.denominator.coeffs)
    out = np.empty(cap + 1, dtype=np.complex128)
    written = orbits.direct_orbit_fill(num, den, complex(z), out, orbits.ESCAPE_RADIUS)
    for p in range(1, written):
        if abs(out[p] - z) < tol:
            return p
    return None


@dataclass(frozen=True)
class ComparisonRow:
    probe: complex
    status: str  # "ok", "periodic", or "error: ..."
    rate: RateEstimate | None = None
    dimension: DimensionEstimate | None = None
    pass_lower: bool | None = None
    pass_upper: bool | None = None


@dataclass(frozen=True)
class ComparisonReport:
    rows: list[ComparisonRow]
    tol: float
    pass_fraction_lower: float
    pass_fraction_upper: float
    n_periodic: int
    n_errors: int

    def to_jsonable(self) -> dict:
        def row_dict(row: ComparisonRow) -> dict:
            d = {
                "probe": [row.probe.real, row.probe.imag],
                "status": row.status,
            }
            if row.rate is not None:
                d.update(
                    R_lower=row.rate.R_lower,
                    R_upper=row.rate.R_upper,
                    R_slope=row.rate.slope,
                    R_stderr=row.rate.slope_stderr,
                    truncated=row.rate.truncated,
                )
            if row.status == "periodic":
                d.update(R_lower=0.0, R_upper=0.0, measure_zero_exception=True)
            if row.dimension is not None:
                d.update(
                    d_lower=row.dimension.d_lower,
                    d_upper=row.dimension.d_upper,
                    d_slope=row.dimension.slope,
                    d_stderr=row.dimension.slope_stderr,
                )
            if row.pass_lower is not None:
                d.update(pass_lower=row.pass_lower, pass_upper=row.pass_upper)
            return d

        return {
            "tol": self.tol,
            "rows": [row_dict(r) for r in self.rows],
            "pass_fraction_lower": self.pass_fraction_lower,
            "pass_fraction_upper": self.pass_fraction_upper,
            "n_periodic": self.n_periodic,
            "n_errors": self.n_errors,
        }


def compare_rate_dimension(
    map: RationalMap,
    mu: EmpiricalMeasure,
    probes,
    sched: RadiusSchedule = DEFAULT_SCHEDULE,
    n_max: int = DEFAULT_N_MAX,
    tol: float = 0.15,
    statistic: str = "mean-return",
    workers: int = 1,
) -> ComparisonReport:
    """Per-probe comparison of recurrence rate against pointwise dimension.

    Periodic probes have tau_r bounded, hence R = 0 exactly; the rate and
    dimension agree only almost everywhere, so periodic probes are flagged
    measure-zero exceptions and excluded from the pass fraction, as are
    probes whose estimators error.
    """
    probes = [complex(p) for p in probes]

    def evaluate(z: complex) -> ComparisonRow:
        period = detect_period(map, z)
        if period is not None:
            return ComparisonRow(probe=z, status="periodic")
        try:
            rate = recurrence_rate(map, z, sched, n_max, statistic=statistic)
            dim = local_dimension(mu, z, sched)
        except ValueError as exc:
            return ComparisonRow(probe=z, status=f"error: {exc}")
        return ComparisonRow(
            probe=z,
            status="ok",
            rate=rate,
            dimension=dim,
            pass_lower=abs(rate.R_lower - dim.d_lower) <= tol,
            pass_upper=abs(rate.R_upper - dim.d_upper) <= tol,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate, probes))  # ordered: determinism
    else:
        rows = [evaluate(z) for z in probes]

    scored = [r for r in rows if r.status == "ok"]
    n_periodic = sum(r.status == "periodic" for r in rows)
    n_errors = sum(r.status.startswith("error") for r in rows)
    frac_lo = (
        sum(bool(r.pass_lower) for r in scored) / len(scored) if scored else math.nan
    )
    frac_hi = (
        sum(bool(r.pass_upper) for r in scored) / len(scored) if scored else math.nan
    )
    return ComparisonReport(
        rows=rows,
        tol=tol,
        pass_fraction_lower=frac_lo,
        pass_fraction_upper=frac_hi,
        n_periodic=n_periodic,
        n_errors=n_errors,
    )
