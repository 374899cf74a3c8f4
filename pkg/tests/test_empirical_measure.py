import cmath
import math

import numpy as np
import pytest

from julialab.circle_oracle import arc_measure_of_chord
from julialab.empirical_measure import (
    EmpiricalMeasure,
    RadiusSchedule,
    ball_measure,
    birkhoff_measure,
    check_weak_diametric_regularity,
    find_regular_radius,
    local_dimension,
)


def brute_count(points, z, r):
    dx = points.real - z.real
    dy = points.imag - z.imag
    return int(np.count_nonzero(dx * dx + dy * dy < r * r))


class TestRadiusSchedule:
    def test_exact_halving(self):
        sched = RadiusSchedule(r0=0.5, count=14)
        radii = sched.radii
        assert np.all(radii[1:] / radii[:-1] == 0.5)  # exact in binary
        assert radii[0] == 0.5 and len(radii) == 14

    def test_validation(self):
        with pytest.raises(ValueError):
            RadiusSchedule(r0=-1.0)
        with pytest.raises(ValueError):
            RadiusSchedule(count=0)


class TestBallMeasure:
    def test_zero_radius_is_zero(self, haar_measure_small):
        assert ball_measure(haar_measure_small, 1.0 + 0j, 0.0) == 0.0

    def test_huge_radius_is_one(self, haar_measure_small):
        assert ball_measure(haar_measure_small, 0.3 + 0.1j, 5.0) == 1.0

    def test_haar_arc_value(self, haar_measure_small):
        # arc fraction of a Euclidean 0.2-ball at a circle point
        expected = arc_measure_of_chord(0.2)
        n = haar_measure_small.total
        sigma = math.sqrt(expected * (1 - expected) / n)
        got = ball_measure(haar_measure_small, cmath.exp(0.73j), 0.2)
        assert abs(got - expected) <= 3 * sigma

    def test_monotone_in_radius(self, haar_measure_small, circle_probes):
        radii = RadiusSchedule(r0=0.7, count=12).radii
        for z in circle_probes:
            counts = [haar_measure_small.ball_count(z, r) for r in radii]
            assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_grid_equals_brute_force(self, haar_measure_small):
        rng = np.random.default_rng(23)
        pts = haar_measure_small.points
        for _ in range(1000):
            z = complex(pts[int(rng.integers(0, len(pts)))]) + complex(
                *(1e-3 * rng.standard_normal(2))
            )
            r = float(10 ** rng.uniform(-4, 0.3))
            assert haar_measure_small.ball_count(z, r) == brute_count(pts, z, r)

    def test_grid_equals_brute_force_method(self, haar_measure_small):
        rng = np.random.default_rng(24)
        for _ in range(100):
            z = complex(*rng.uniform(-1.1, 1.1, 2))
            r = float(10 ** rng.uniform(-3, 0))
            assert haar_measure_small.ball_count(z, r) == haar_measure_small.ball_count_brute(z, r)


class TestBirkhoffMeasure:
    def test_circle_orbit_matches_haar(self, z2):
        """Orbit-average ball masses agree with exact Haar arcs; the error
        bar is a batch-means stderr since orbit samples are correlated."""
        n = 10 ** 6
        mu = birkhoff_measure(z2, cmath.exp(2.39996j), n, cell_size=1e-4)
        pts = mu.points
        for r, center in [(0.2, cmath.exp(0.4j)), (0.05, cmath.exp(2.0j)), (0.01, cmath.exp(4.4j))]:
            exact = arc_measure_of_chord(r)
            batches = np.array_split(pts, 16)
            vals = [brute_count(b, center, r) / len(b) for b in batches]
            stderr = np.std(vals, ddof=1) / math.sqrt(len(vals))
            got = ball_measure(mu, center, r)
            assert abs(got - exact) <= max(3 * stderr, 5e-4)

    def test_fixed_point_degenerate(self, z2):
        mu = birkhoff_measure(z2, 1.0 + 0j, 2000)
        assert mu.degenerate
        assert ball_measure(mu, 1.0 + 0j, 1e-9) == 1.0

    def test_deterministic(self, z2):
        a = birkhoff_measure(z2, cmath.exp(1.1j), 5000)
        b = birkhoff_measure(z2, cmath.exp(1.1j), 5000)
        assert np.array_equal(a.points, b.points)

    def test_rational_map_without_stabilizer_errors(self):
        from julialab.rational_map import RationalMap

        # (z^3 + 1)/z behaves like z^2 at infinity: orbits of large points escape
        m = RationalMap.from_coeffs([1.0, 0.0, 0.0, 1.0], [0.0, 1.0])
        with pytest.raises(ValueError, match="Julia neighborhood"):
            birkhoff_measure(m, 2.0 + 0j, 10 ** 5)


class TestLocalDimension:
    def test_circle_dimension_one(self, haar_measure_small, circle_probes):
        sched = RadiusSchedule(r0=0.5, count=10)
        for z in circle_probes[:8]:
            est = local_dimension(haar_measure_small, complex(z), sched)
            assert est.slope == pytest.approx(1.0, abs=0.1)
            assert est.d_lower <= est.slope <= est.d_upper

    def test_disk_dimension_two(self):
        rng = np.random.default_rng(31)
        n = 10 ** 6
        pts = np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
        sched = RadiusSchedule(r0=0.5, count=10)
        mu = EmpiricalMeasure(pts, cell_size=sched.r_min)
        est = local_dimension(mu, 0.05 + 0.02j, sched)
        assert est.slope == pytest.approx(2.0, abs=0.1)

    def test_atomic_sample_insufficient(self):
        pts = np.full(1000, 0.3 + 0.4j)
        mu = EmpiricalMeasure(pts, cell_size=1e-4)
        with pytest.raises(ValueError, match="insufficient resolution"):
            local_dimension(mu, 0.3 + 0.4j, RadiusSchedule(r0=0.5, count=10))

    def test_far_probe_insufficient(self, haar_measure_small):
        with pytest.raises(ValueError, match="insufficient resolution"):
            local_dimension(haar_measure_small, 50.0 + 0j, RadiusSchedule(r0=0.5, count=10))


class TestWeakDiametricRegularity:
    def test_haar_no_violations(self, haar_measure_small, circle_probes):
        report = check_weak_diametric_regularity(
            haar_measure_small, circle_probes[:8], n_range=(4, 10)
        )
        for n, frac in report.violation_fraction.items():
            if not math.isnan(frac):
                assert frac == 0.0
        # the doubling ratio itself hovers near 2, far below n^2
        for e in report.entries:
            if e.ok is not None and e.inner_count > 0:
                assert e.outer_count / e.inner_count < e.n * e.n

    def test_atom_violation_flagged(self):
        # all mass at one point 0.02 away from the probe: at n = 5 the outer
        # ball sees everything, the inner ball nothing
        pts = np.full(1000, 0.02 + 0j)
        mu = EmpiricalMeasure(pts, cell_size=1e-4)
        report = check_weak_diametric_regularity(mu, [0j], n_range=(5, 5))
        assert report.entries[0].ok is False
        assert report.violation_fraction[5] == 1.0

    def test_insufficient_data_masked(self, haar_measure_small):
        # a probe far from the support has empty outer balls
        report = check_weak_diametric_regularity(haar_measure_small, [10.0 + 0j], n_range=(2, 4))
        assert all(e.ok is None for e in report.entries)
        assert all(math.isnan(f) for f in report.violation_fraction.values())


class TestFindRegularRadius:
    def test_haar_annulus_bound_by_recount(self, haar_measure_small):
        z = cmath.exp(1.9j)
        r, depth = 0.1, 5
        rho = find_regular_radius(haar_measure_small, z, r, depth)
        assert r < rho < 2 * r
        half = r / 4 ** (depth + 1)
        annulus = haar_measure_small.ball_count(z, rho + half) - haar_measure_small.ball_count(
            z, rho - half
        )
        bound = haar_measure_small.ball_count(z, 2 * r) / 2 ** depth
        assert annulus <= bound

    def test_empty_support_returns_first_quarter_path(self, haar_measure_small):
        # measure lives on the unit circle, far from this probe's (r, 2r)
        r, depth = 0.01, 4
        rho = find_regular_radius(haar_measure_small, 0j, r, depth)
        assert rho == pytest.approx(r * (1 + 0.5 * 0.25 ** depth), rel=1e-12)

    def test_ring_of_atoms_avoided(self):
        r, depth = 0.1, 4
        ring = 1.5 * r * np.exp(2j * np.pi * np.arange(500) / 500)
        mu = EmpiricalMeasure(ring, cell_size=1e-3)
        rho = find_regular_radius(mu, 0j, r, depth)
        assert abs(rho - 1.5 * r) >= r / 4 ** (depth + 1)

    def test_validation(self, haar_measure_small):
        with pytest.raises(ValueError):
            find_regular_radius(haar_measure_small, 0j, 0.1, 0)
