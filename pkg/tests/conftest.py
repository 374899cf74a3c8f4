import numpy as np
import pytest

from julialab.empirical_measure import EmpiricalMeasure, RadiusSchedule
from julialab.julia_sampler import inverse_iteration_sample
from julialab.rational_map import power_map, quadratic_map


@pytest.fixture(scope="session")
def z2():
    return power_map(2)


@pytest.fixture(scope="session")
def z3():
    return power_map(3)


@pytest.fixture(scope="session")
def z2c():
    return quadratic_map(0.05)


@pytest.fixture(scope="session")
def haar_sample_small(z2):
    """10^5-point Haar sample on the circle, fixed seed."""
    return inverse_iteration_sample(z2, 100_000, burn_in=60, seed=101)


@pytest.fixture(scope="session")
def haar_measure_small(haar_sample_small):
    sched = RadiusSchedule(r0=0.5, count=10)
    return EmpiricalMeasure(haar_sample_small.points, cell_size=sched.r_min)


@pytest.fixture(scope="session")
def circle_probes(haar_sample_small):
    pts = haar_sample_small.points
    idx = (np.arange(16) * len(pts)) // 16 + len(pts) // 32
    return pts[idx]
