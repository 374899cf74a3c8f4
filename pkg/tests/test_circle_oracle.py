import math
from fractions import Fraction

import numpy as np
import pytest

from julialab.circle_oracle import (
    Arc,
    RationalAngle,
    angle_to_complex,
    arc_measure_of_chord,
    chord_to_arc_halfwidth,
    circle_distance,
    oracle_arc_measure,
    oracle_orbit_cycle,
    oracle_return_time,
    oracle_step,
)
from julialab.empirical_measure import EmpiricalMeasure
from julialab.recurrence import return_time


class TestAngles:
    def test_reduction(self):
        a = RationalAngle(6, 9)
        assert (a.p, a.q) == (2, 3)

    def test_normalization_mod_one(self):
        assert RationalAngle(7, 3) == RationalAngle(1, 3)

    def test_step_examples(self):
        assert oracle_step(RationalAngle(1, 3), 2) == RationalAngle(2, 3)
        assert oracle_step(RationalAngle(2, 3), 2) == RationalAngle(1, 3)

    def test_one_seventh_period_three(self):
        a = RationalAngle(1, 7)
        seq = [a]
        for _ in range(3):
            seq.append(oracle_step(seq[-1], 2))
        assert [s.p for s in seq] == [1, 2, 4, 1]

    def test_denominator_never_grows(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            q = int(rng.integers(2, 10 ** 6))
            a = RationalAngle(int(rng.integers(0, q)), q)
            b = oracle_step(a, 3)
            assert a.q % b.q == 0

    def test_orbit_eventually_periodic(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            q = int(rng.integers(2, 5000))
            a = RationalAngle(int(rng.integers(0, q)), q)
            tail, cycle = oracle_orbit_cycle(a, 2)
            assert len(cycle) >= 1
            assert oracle_step(cycle[-1], 2) == cycle[0]


class TestReturnTimes:
    def test_third_returns_in_two(self):
        t = oracle_return_time(RationalAngle(1, 3), 2, Fraction(1, 100), 10)
        assert t.n == 2

    def test_fixed_angle(self):
        t = oracle_return_time(RationalAngle(0, 1), 2, Fraction(1, 100), 10)
        assert t.n == 1

    def test_period_three(self):
        t = oracle_return_time(RationalAngle(1, 7), 2, Fraction(1, 100), 10)
        assert t.n == 3

    def test_not_found(self):
        # orbit of 1/5 under doubling: 1/5, 2/5, 4/5, 3/5; never within 1/100 of 1/5 again before period
        t = oracle_return_time(RationalAngle(1, 5), 2, Fraction(1, 100), 3)
        assert not t.is_finite


class TestArcMeasure:
    def test_quarter(self):
        assert oracle_arc_measure(Arc(RationalAngle(0, 1), Fraction(1, 4))) == Fraction(1, 2)

    def test_near_half(self):
        eps = Fraction(1, 1000)
        assert oracle_arc_measure(Arc(0.0, Fraction(1, 2) - eps)) == 1 - 2 * eps

    def test_chord_conversion(self):
        assert arc_measure_of_chord(0.2) == pytest.approx((2 / math.pi) * math.asin(0.1), abs=1e-15)
        assert arc_measure_of_chord(0.2) == pytest.approx(0.06377, abs=5e-6)

    def test_halfwidth_bounds(self):
        with pytest.raises(ValueError):
            Arc(0.0, Fraction(1, 2))


class TestAgreementWithEuclideanDynamics:
    def test_return_times_agree_within_float_horizon(self, z2):
        """Euclidean return times match the exact oracle away from arc-edge
        grazing orbits; n_max stays inside the ~52-step float validity
        horizon of direct iteration."""
        rng = np.random.default_rng(20)
        r = 0.08
        hw = Fraction(chord_to_arc_halfwidth(r)).limit_denominator(10 ** 12)
        n_max = 40
        mismatches = 0
        considered = 0
        for _ in range(1000):
            q = int(rng.integers(10 ** 5, 10 ** 6))
            p = int(rng.integers(1, q))
            theta = RationalAngle(p, q)
            exact = oracle_return_time(theta, 2, hw, n_max)
            # grazing exclusion: exact orbit within 1e-4 of the arc edge
            cur, target, grazing = theta, theta.as_fraction(), False
            for _n in range(n_max):
                cur = oracle_step(cur, 2)
                if abs(float(circle_distance(cur.as_fraction(), target)) - float(hw)) < 1e-4:
                    grazing = True
                    break
            if grazing:
                continue
            considered += 1
            euclid = return_time(z2, angle_to_complex(theta), angle_to_complex(theta), r, n_max)
            mismatches += euclid.n != exact.n
        assert considered > 800
        assert mismatches / considered < 0.02

    def test_ball_measures_match_arc_measures(self, z2, haar_sample_small):
        """Sampled Haar ball masses sit within 3 binomial sigma of the exact
        arc measure (seeded sample, checked over 100 random arcs)."""
        mu = EmpiricalMeasure(haar_sample_small.points, cell_size=1e-3)
        rng = np.random.default_rng(25)
        n = mu.total
        for _ in range(100):
            center = float(rng.random())
            r = float(10 ** rng.uniform(-2.5, -0.5))
            exact = arc_measure_of_chord(r)
            count = mu.ball_count(angle_to_complex(center), r)
            sigma = math.sqrt(n * exact * (1 - exact))
            assert abs(count - n * exact) <= 3.0 * sigma
