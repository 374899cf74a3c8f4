import numpy as np
import pytest

from julialab.roots import RootFindingError, all_roots, poly_eval, residual_scale


def poly_from_roots(roots):
    c = np.array([1.0 + 0.0j])
    for r in roots:
        c = np.convolve(c, np.array([-r, 1.0 + 0.0j]))
    return c


def test_quadratic():
    roots = np.sort_complex(all_roots([-4.0, 0.0, 1.0]))  # z^2 - 4
    assert np.allclose(roots, [-2.0, 2.0], atol=1e-10)


def test_constructed_random_roots():
    rng = np.random.default_rng(5)
    true = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    c = poly_from_roots(true)
    got = all_roots(c)
    # match by nearest: every true root found to small error
    for t in true:
        assert np.min(np.abs(got - t)) < 1e-8


def test_origin_multiplicity():
    got = np.sort_complex(all_roots([0.0, 0.0, 0.0, 1.0]))  # z^3
    assert len(got) == 3
    assert np.all(np.abs(got) == 0.0)


def test_roots_of_unity_large_degree():
    n = 1023
    c = np.zeros(n + 1, dtype=np.complex128)
    c[0] = -1.0
    c[n] = 1.0
    got = all_roots(c)
    assert len(got) == n
    assert np.max(np.abs(np.abs(got) - 1.0)) < 1e-10
    res = np.abs(poly_eval(c, got)) / residual_scale(c, got)
    assert res.max() <= 1e-10


def test_degenerate_inputs():
    assert all_roots([3.0]).size == 0  # nonzero constant
    with pytest.raises(ValueError):
        all_roots([0.0])
    assert np.allclose(all_roots([2.0, 1.0]), [-2.0])


def test_determinism():
    c = poly_from_roots(np.exp(2j * np.pi * np.arange(7) / 7))
    a = all_roots(c)
    b = all_roots(c)
    assert np.array_equal(a, b)
