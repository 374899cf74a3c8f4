import cmath
import math

import numpy as np
import pytest

from julialab.empirical_measure import EmpiricalMeasure, RadiusSchedule
from julialab.recurrence import (
    MonotonicityCase,
    RateEstimate,
    RecurrenceRecord,
    ReturnTime,
    compare_rate_dimension,
    detect_period,
    recurrence_rate,
    return_time,
    return_time_table,
    verify_monotonicity,
)


class TestReturnTimeType:
    def test_positive_integer_only(self):
        with pytest.raises(ValueError):
            ReturnTime.found(0, 10)

    def test_infinity_convention(self):
        fin = ReturnTime.found(5, 100)
        inf = ReturnTime.not_found(100)
        assert fin.le(inf)
        assert not inf.le(fin)
        assert inf.le(inf)
        assert inf.value_or_inf == math.inf

    def test_record_requires_decreasing_radii(self):
        rows = [(0.5, ReturnTime.found(2, 10)), (0.5, ReturnTime.found(3, 10))]
        with pytest.raises(ValueError, match="decreasing"):
            RecurrenceRecord(center=0j, rows=rows)

    def test_record_requires_tau_monotone(self):
        rows = [(0.5, ReturnTime.found(5, 10)), (0.25, ReturnTime.found(2, 10))]
        with pytest.raises(ValueError, match="non-increasing"):
            RecurrenceRecord(center=0j, rows=rows)


class TestReturnTime:
    def test_fixed_point_returns_immediately(self, z2):
        assert return_time(z2, 1.0, 1.0, 0.3, 100).n == 1

    def test_two_cycle(self, z2):
        z = cmath.exp(2j * cmath.pi / 3)
        # the period-1 image sits sqrt(3) away, far outside r = 0.1
        assert return_time(z2, z, z, 0.1, 100).n == 2

    def test_never_returns(self, z2):
        t = return_time(z2, 1.0, -1.0, 0.1, 10 ** 6)
        assert not t.is_finite

    def test_invalid_args(self, z2):
        with pytest.raises(ValueError):
            return_time(z2, 1.0, 1.0, -0.1, 10)
        with pytest.raises(ValueError):
            return_time(z2, 1.0, 1.0, 0.1, 0)


class TestRecurrenceRate:
    def test_periodic_center_rate_zero(self, z2):
        z = cmath.exp(2j * cmath.pi / 3)
        est = recurrence_rate(z2, z, RadiusSchedule(0.5, 10), 10 ** 5)
        assert est.R_lower == 0.0
        assert est.R_upper == 0.0

    def test_typical_circle_point_rate_one(self, z2):
        est = recurrence_rate(z2, cmath.exp(1.37j), RadiusSchedule(0.5, 10), 10 ** 6)
        assert est.slope == pytest.approx(1.0, abs=0.15)
        assert est.R_lower <= est.slope <= est.R_upper

    def test_single_radius_insufficient(self, z2):
        with pytest.raises(ValueError, match="insufficient recurrence data"):
            recurrence_rate(z2, cmath.exp(1.37j), RadiusSchedule(0.5, 1), 10 ** 4)

    def test_first_return_statistic(self, z2):
        est = recurrence_rate(
            z2, cmath.exp(0.71j), RadiusSchedule(0.5, 10), 10 ** 6, statistic="first-return"
        )
        assert isinstance(est, RateEstimate)
        # first returns are noisy; only the broad scale is pinned here
        assert 0.3 < est.slope < 1.7

    def test_unknown_statistic(self, z2):
        with pytest.raises(ValueError, match="statistic"):
            recurrence_rate(z2, 1j, RadiusSchedule(0.5, 8), 10 ** 4, statistic="median")


class TestReturnTimeTable:
    def test_rows_match_radii_and_monotone(self, z2):
        sched = RadiusSchedule(0.5, 8)
        rec = return_time_table(z2, cmath.exp(2.2j), sched, 10 ** 5)
        assert len(rec.rows) == 8
        taus = [t.value_or_inf for _, t in rec.rows]
        assert all(a <= b for a, b in zip(taus, taus[1:]))


class TestVerifyMonotonicity:
    def test_equalities_at_w_equals_z_k_one(self, z2):
        case = MonotonicityCase(w=cmath.exp(0.3j), z=cmath.exp(0.3j), r=0.2, k=1.0)
        report = verify_monotonicity(z2, [case], 10 ** 4)
        row = report.rows[0]
        assert row.eq9_ok and row.eq10_ok
        assert row.tau_r_center.n == row.tau_kr_center.n
        assert row.tau_r_incidence.n == row.tau_r_center.n

    def test_random_cases_no_violations(self, z2):
        rng = np.random.default_rng(40)
        cases = []
        for _ in range(300):
            cases.append(
                MonotonicityCase(
                    w=cmath.exp(2j * cmath.pi * rng.random()),
                    z=cmath.exp(2j * cmath.pi * rng.random()),
                    r=float(10 ** rng.uniform(-2, -0.5)),
                    k=float(rng.uniform(1.0, 4.0)),
                )
            )
        report = verify_monotonicity(z2, cases, 20_000)
        assert report.eq9_violations == 0
        assert report.eq10_violations == 0

    def test_notfound_consistent_with_eq9(self, z2):
        # tau_r NotFound while tau_kr finite is consistent (finite <= inf)
        case = MonotonicityCase(w=1.0, z=-1.0, r=0.5, k=5.0)
        report = verify_monotonicity(z2, [case], 10 ** 4)
        row = report.rows[0]
        assert row.tau_kr_incidence.is_finite  # kr = 2.5 ball around -1 contains 1's orbit
        assert not row.tau_r_incidence.is_finite
        assert row.eq10_ok

    def test_nonpositive_k_rejected(self):
        with pytest.raises(ValueError):
            MonotonicityCase(w=0j, z=0j, r=0.1, k=0.5)


class TestDetectPeriod:
    def test_fixed_point(self, z2):
        assert detect_period(z2, 1.0 + 0j) == 1

    def test_two_cycle(self, z2):
        assert detect_period(z2, cmath.exp(2j * cmath.pi / 3)) == 2

    def test_generic_point(self, z2):
        assert detect_period(z2, cmath.exp(1.23j)) is None


@pytest.fixture(scope="module")
def haar_mu(haar_sample_small):
    sched = RadiusSchedule(0.5, 10)
    return EmpiricalMeasure(haar_sample_small.points, cell_size=sched.r_min)


class TestCompareRateDimension:
    def test_haar_probes_pass(self, z2, haar_mu, circle_probes):
        sched = RadiusSchedule(0.5, 10)
        report = compare_rate_dimension(
            z2, haar_mu, circle_probes[:10], sched, 10 ** 6, tol=0.15
        )
        assert report.pass_fraction_lower >= 0.9
        assert report.n_errors == 0

    def test_periodic_probe_flagged_exactly_zero(self, z2, haar_mu):
        sched = RadiusSchedule(0.5, 10)
        report = compare_rate_dimension(
            z2, haar_mu, [1.0 + 0j], sched, 10 ** 5, tol=0.15
        )
        row = report.rows[0]
        assert row.status == "periodic"
        assert report.n_periodic == 1
        d = report.to_jsonable()["rows"][0]
        assert d["R_lower"] == 0.0 and d["R_upper"] == 0.0
        assert d["measure_zero_exception"] is True

    def test_negative_control_disk_measure(self, z2, circle_probes):
        """Deliberate mismatch: unit-disk mass (dimension 2) against circle
        rates (dimension 1) must fail the comparison."""
        rng = np.random.default_rng(41)
        n = 200_000
        disk = np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
        sched = RadiusSchedule(0.5, 8)
        mu = EmpiricalMeasure(disk, cell_size=sched.r_min)
        report = compare_rate_dimension(
            z2, mu, circle_probes[:6], sched, 10 ** 5, tol=0.15
        )
        assert report.pass_fraction_lower <= 0.5

    def test_worker_count_does_not_change_results(self, z2, haar_mu, circle_probes):
        sched = RadiusSchedule(0.5, 10)
        a = compare_rate_dimension(z2, haar_mu, circle_probes[:4], sched, 10 ** 5, workers=1)
        b = compare_rate_dimension(z2, haar_mu, circle_probes[:4], sched, 10 ** 5, workers=4)
        for ra, rb in zip(a.rows, b.rows):
            assert ra == rb
