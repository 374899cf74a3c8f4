"""Rational maps T = P/Q on the Riemann sphere.

Exact-as-floats representation of the dynamical system: evaluation with
chart switching at infinity, derivatives, orbits with cumulative
log-derivative sums, preimages, and periodic points of any period within
the degree budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .roots import (
    RootFindingError,
    all_roots,
    poly_derivative,
    poly_eval,
    residual_scale,
    trim_trailing_zeros,
)

ESCAPE_RADIUS = 1e6
COPRIMALITY_TOL = 1e-9
DEGREE_BUDGET = 2 ** 14
PERIODIC_RESIDUAL_TOL = 1e-8


class PoleError(ValueError):
    """Operation evaluated at a pole of the map."""


def require_finite_complex(z: complex, what: str = "point") -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"{what} must have finite real and imaginary parts, got {z!r}")
    return z


@dataclass(frozen=True)
class SpherePoint:
    """Point of the sphere: a finite complex value or the point at infinity."""

    value: complex | None

    @classmethod
    def finite(cls, z: complex) -> "SpherePoint":
        return cls(require_finite_complex(z))

    @classmethod
    def infinity(cls) -> "SpherePoint":
        return cls(None)

    @property
    def is_infinity(self) -> bool:
        return self.value is None

    def __repr__(self) -> str:
        return "SpherePoint(inf)" if self.value is None else f"SpherePoint({self.value!r})"


INFINITY = SpherePoint.infinity()


@dataclass(frozen=True)
class Polynomial:
    """Complex polynomial, coefficients lowest degree first, leading coeff nonzero."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=np.complex128))
        if not np.all(np.isfinite(c.view(np.float64))):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "coeffs", trim_trailing_zeros(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    def __call__(self, z):
        return poly_eval(self.coeffs, z)

    def derivative(self) -> "Polynomial":
        return Polynomial(poly_derivative(self.coeffs))

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(np.convolve(self.coeffs, other.coeffs))


def _sylvester_resultant(p: np.ndarray, q: np.ndarray) -> float:
    """|Res(P, Q)| via the Sylvester matrix (coefficients lowest first)."""
    m, n = len(p) - 1, len(q) - 1
    size = m + n
    if size == 0:
        return 1.0
    s = np.zeros((size, size), dtype=np.complex128)
    pr, qr = p[::-1], q[::-1]  # highest first for the standard layout
    for i in range(n):
        s[i, i : i + m + 1] = pr
    for i in range(m):
        s[n + i, i : i + n + 1] = qr
    return abs(np.linalg.det(s))


@dataclass(frozen=True)
class RationalMap:
    """T = P/Q with coprime P, Q and degree max(deg P, deg Q) >= 2."""

    numerator: Polynomial
    denominator: Polynomial
    degree: int = field(init=False)

    def __post_init__(self):
        p, q = self.numerator, self.denominator
        if p.is_zero or q.is_zero:
            raise ValueError("numerator and denominator must be nonzero polynomials")
        deg = max(p.degree, q.degree)
        if deg < 2:
            raise ValueError(f"rational map must have degree >= 2, got {deg}")
        if p.degree >= 1 and q.degree >= 1:
            res = _sylvester_resultant(p.coeffs, q.coeffs)
            scale = (
                np.linalg.norm(p.coeffs) ** q.degree * np.linalg.norm(q.coeffs) ** p.degree
            )
            if res <= COPRIMALITY_TOL * scale:
                raise ValueError(
                    "numerator and denominator are not numerically coprime "
                    f"(|resultant| = {res:.3e} <= {COPRIMALITY_TOL:.0e} * scale)"
                )
        object.__setattr__(self, "degree", deg)

    @property
    def is_polynomial(self) -> bool:
        return self.denominator.degree == 0

    @classmethod
    def from_coeffs(cls, numerator, denominator=(1.0,)) -> "RationalMap":
        return cls(Polynomial(np.asarray(numerator)), Polynomial(np.asarray(denominator)))

    @classmethod
    def from_json_dict(cls, spec: dict) -> "RationalMap":
        """Build from the CLI wire format {"numerator": [[re,im],...], ...}."""

        def parse(pairs, name):
            arr = np.asarray(pairs, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValueError(f"{name} must be a list of [re, im] pairs")
            return arr[:, 0] + 1j * arr[:, 1]

        num = parse(spec["numerator"], "numerator")
        den = parse(spec.get("denominator", [[1.0, 0.0]]), "denominator")
        return cls.from_coeffs(num, den)

    def to_json_dict(self) -> dict:
        return {
            "numerator": [[float(c.real), float(c.imag)] for c in self.numerator.coeffs],
            "denominator": [[float(c.real), float(c.imag)] for c in self.denominator.coeffs],
        }


def polynomial_map(coeffs) -> RationalMap:
    """Convenience constructor for polynomial maps (denominator 1)."""
    return RationalMap.from_coeffs(coeffs)


def power_map(d: int) -> RationalMap:
    """T(z) = z^d; Julia set is the unit circle."""
    c = np.zeros(d + 1, dtype=np.complex128)
    c[d] = 1.0
    return polynomial_map(c)


def quadratic_map(c: complex) -> RationalMap:
    """T(z) = z^2 + c."""
    return polynomial_map([c, 0.0, 1.0])


def evaluate(map: RationalMap, z) -> SpherePoint:
    """Apply T once with chart switching at infinity and at poles."""
    if isinstance(z, SpherePoint):
        if z.is_infinity:
            p, q = map.numerator, map.denominator
            if p.degree > q.degree:
                return INFINITY
            if p.degree < q.degree:
                return SpherePoint.finite(0.0)
            return SpherePoint.finite(p.coeffs[-1] / q.coeffs[-1])
        z = z.value
    z = require_finite_complex(z)
    pv = complex(map.numerator(z))
    qv = complex(map.denominator(z))
    if qv == 0:
        if pv == 0:
            raise AssertionError(
                "0/0 after coprimality reduction: internal invariant violation"
            )
        return INFINITY
    w = pv / qv
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        return INFINITY  # overflowed division: treat as the infinity chart
    return SpherePoint.finite(w)


def derivative_modulus(map: RationalMap, z: complex) -> float:
    """|T'(z)| = |(P'Q - PQ')/Q^2| at a finite non-pole point."""
    z = require_finite_complex(z)
    qv = complex(map.denominator(z))
    if qv == 0:
        raise PoleError("derivative undefined at pole")
    pv = complex(map.numerator(z))
    dpv = complex(map.numerator.derivative()(z))
    dqv = complex(map.denominator.derivative()(z))
    return abs((dpv * qv - pv * dqv) / (qv * qv))


@dataclass(frozen=True)
class OrbitTrace:
    """Forward orbit with cumulative sums of log|T'| along the way.

    derivative_log_sums[k] = sum_{j<k} log|T'(points[j])|, so entry 0 is 0
    and exp(derivative_log_sums[k]) = |(T^k)'(start)| by the chain rule.
    """

    start: complex
    points: np.ndarray
    derivative_log_sums: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        if len(self.points) != len(self.derivative_log_sums):
            raise ValueError("points and derivative_log_sums must have equal length")


def orbit(map: RationalMap, z0: complex, n: int, escape_radius: float = ESCAPE_RADIUS) -> OrbitTrace:
    """Iterate T for n steps; truncate (with a flag) at poles or escape."""
    if n < 0:
        raise ValueError("orbit length must be nonnegative")
    z = require_finite_complex(z0)
    pts = [z]
    logs = [0.0]
    truncated = False
    for _ in range(n):
        qv = complex(map.denominator(z))
        if qv == 0:
            truncated = True
            break
        dmod = derivative_modulus(map, z)
        dlog = math.log(dmod) if dmod > 0 else -math.inf
        w = complex(map.numerator(z)) / qv
        if not (math.isfinite(w.real) and math.isfinite(w.imag)) or abs(w) > escape_radius:
            truncated = True
            break
        logs.append(logs[-1] + dlog)
        z = w
        pts.append(z)
    return OrbitTrace(
        start=complex(z0),
        points=np.array(pts, dtype=np.complex128),
        derivative_log_sums=np.array(logs, dtype=np.float64),
        truncated=truncated,
    )


def preimages(map: RationalMap, w: complex) -> np.ndarray:
    """All finite solutions of T(z) = w, with multiplicity, sorted by (re, im)."""
    w = require_finite_complex(w)
    p = map.numerator.coeffs
    q = map.denominator.coeffs
    size = max(len(p), len(q))
    c = np.zeros(size, dtype=np.complex128)
    c[: len(p)] += p
    c[: len(q)] -= w * q
    roots = all_roots(c)
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def _iterated_map_pair(map: RationalMap, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient arrays (A, B) with T^n = A/B, rescaled to limit overflow."""
    d = map.degree
    p = map.numerator.coeffs
    q = np.zeros(d + 1, dtype=np.complex128)
    q[: len(map.denominator.coeffs)] = map.denominator.coeffs
    pfull = np.zeros(d + 1, dtype=np.complex128)
    pfull[: len(p)] = p

    a = np.array([0.0, 1.0], dtype=np.complex128)  # z
    b = np.array([1.0], dtype=np.complex128)
    for _ in range(n):
        # powers a^i b^(d-i) shared between numerator and denominator sums
        apow = [np.array([1.0], dtype=np.complex128)]
        bpow = [np.array([1.0], dtype=np.complex128)]
        for _k in range(d):
            apow.append(np.convolve(apow[-1], a))
            bpow.append(np.convolve(bpow[-1], b))
        deg_target = max(len(np.convolve(apow[i], bpow[d - i])) for i in range(d + 1))
        na = np.zeros(deg_target, dtype=np.complex128)
        nb = np.zeros(deg_target, dtype=np.complex128)
        for i in range(d + 1):
            term = np.convolve(apow[i], bpow[d - i])
            if pfull[i] != 0:
                na[: len(term)] += pfull[i] * term
            if q[i] != 0:
                nb[: len(term)] += q[i] * term
        scale = max(np.max(np.abs(na)), np.max(np.abs(nb)))
        a = trim_trailing_zeros(na / scale)
        b = trim_trailing_zeros(nb / scale)
    return a, b


def _orbit_multiplier(map: RationalMap, z: complex, n: int) -> tuple[complex, complex, float]:
    """(T^n(z), (T^n)'(z), log|multiplier|) by chain rule; raises PoleError on poles."""
    w = z
    deriv = complex(1.0)
    log_mod = 0.0
    num, den = map.numerator, map.denominator
    dnum, dden = num.derivative(), den.derivative()
    for _ in range(n):
        qv = complex(den(w))
        if qv == 0:
            raise PoleError("orbit hit a pole")
        pv = complex(num(w))
        dv = (complex(dnum(w)) * qv - pv * complex(dden(w))) / (qv * qv)
        deriv *= dv
        log_mod += math.log(abs(dv)) if dv != 0 else -math.inf
        w = pv / qv
    return w, deriv, log_mod


def _binomial_coefficient(map: RationalMap) -> complex | None:
    """c when T(z) = z^d + c (denominator constant), else None."""
    if not map.is_polynomial:
        return None
    coeffs = map.numerator.coeffs / map.denominator.coeffs[0]
    if coeffs[-1] != 1.0 or np.any(coeffs[1:-1] != 0):
        return None
    return complex(coeffs[0])


def _vector_orbit_fixpoint(map: RationalMap, z: np.ndarray, n: int):
    """(T^n(z), (T^n)'(z), sum log|T'|) over a vector of points; poles/escapes
    leave nan entries."""
    num, den = map.numerator.coeffs, map.denominator.coeffs
    dnum = map.numerator.derivative().coeffs
    dden = map.denominator.derivative().coeffs
    w = z.astype(np.complex128).copy()
    deriv = np.ones(len(z), dtype=np.complex128)
    logmod = np.zeros(len(z), dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(n):
            qv = poly_eval(den, w)
            pv = poly_eval(num, w)
            dv = (poly_eval(dnum, w) * qv - pv * poly_eval(dden, w)) / (qv * qv)
            deriv = deriv * dv
            admod = np.abs(dv)
            logmod = logmod + np.where(admod > 0, np.log(admod), -np.inf)
            w = pv / qv
    return w, deriv, logmod


def _polish_fixed_points(
    map: RationalMap, seeds: np.ndarray, n: int, iters: int = 40, clamp: float = 0.25
) -> np.ndarray:
    """Newton on z -> T^n(z) - z, vectorized over all seeds.

    Steps are clamped so Newton cannot hop between distinct roots; pass a
    clamp on the order of the root spacing when the roots are dense.
    """
    z = seeds.astype(np.complex128).copy()
    for _ in range(iters):
        w, deriv, _lm = _vector_orbit_fixpoint(map, z, n)
        f = w - z
        fp = deriv - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / fp
        step = np.where(np.isfinite(step), step, 0.0)
        big = np.abs(step) > clamp
        step[big] *= clamp / np.abs(step[big])
        done = np.abs(f) <= 1e-13 * np.maximum(1.0, np.abs(z))
        step[done] = 0.0
        if done.all():
            break
        z = z - step
    return z


def _periodic_seeds_by_homotopy(map: RationalMap, c: complex, n: int) -> np.ndarray:
    """Period-n seeds for T = z^d + c by continuation from c = 0.

    At c = 0 the solutions of T^n(z) = z are 0 and the (d^n - 1)-th roots
    of unity; the whole set is tracked to the target c in small steps.
    This sidesteps the expanded polynomial, whose coefficients are
    hopelessly ill-conditioned for large d^n when c != 0.
    """
    d = map.degree
    m = d ** n - 1
    seeds = np.concatenate([[0.0 + 0.0j], np.exp(2j * np.pi * np.arange(m) / m)])
    # roots move about n*dc per parameter step dc while neighboring roots sit
    # ~ 2 pi / d^n apart, so dc must stay well under spacing / n or seeds hop
    # into the wrong Newton basin (often the attracting fixed point's)
    spacing = 2.0 * np.pi / (m + 1)
    clamp = max(1e-5, 0.45 * spacing)
    dc = 0.3 * spacing / n
    steps = max(1, int(math.ceil(abs(c) / dc)))

    def map_at(ct: complex) -> RationalMap:
        return polynomial_map(
            np.concatenate([[ct], np.zeros(d - 1, dtype=np.complex128), [1.0]])
        )

    t = 0.0
    dt = 1.0 / steps
    while t < 1.0 - 1e-12:
        t_next = min(1.0, t + dt)
        candidate = _polish_fixed_points(map_at(c * t_next), seeds, n, clamp=clamp)
        moved = np.abs(candidate - seeds)
        w, _deriv, _lm = _vector_orbit_fixpoint(map_at(c * t_next), candidate, n)
        res = np.abs(w - candidate)
        if moved.max() < 0.45 * spacing and np.nanmax(res) <= 1e-10:
            seeds = candidate
            t = t_next
            dt = min(dt * 2.0, 1.0 / steps * 8.0)
        else:
            dt *= 0.5
            if dt < 1e-7:
                raise RootFindingError(
                    f"periodic-point continuation stalled at c*t = {c * t:.4g}"
                )
    return seeds


def periodic_points(map: RationalMap, n: int, budget: int = DEGREE_BUDGET) -> list[tuple[complex, float]]:
    """Finite solutions of T^n(z) = z with |(T^n)'(z)| attached, multiplicity-aware.

    For the z^d + c family, roots come from homotopy continuation off the
    exactly solvable c = 0 case.  Otherwise they come from the expanded
    polynomial A_n(z) - z B_n(z) (T^n = A_n/B_n); either way every root is
    polished by Newton on the orbit-evaluated fixed-point equation, which
    stays well conditioned for hyperbolic maps even when the expanded
    coefficients do not.
    """
    if n < 1:
        raise ValueError("period must be >= 1")
    if map.degree ** n > budget:
        raise ValueError(
            f"degree budget exceeded: d^n = {map.degree ** n} > {budget}"
        )
    c_binom = _binomial_coefficient(map)
    if c_binom is not None:
        roots = _periodic_seeds_by_homotopy(map, c_binom, n)
    else:
        a, b = _iterated_map_pair(map, n)
        size = max(len(a), len(b) + 1)
        c = np.zeros(size, dtype=np.complex128)
        c[: len(a)] += a
        c[1 : len(b) + 1] -= b
        roots = all_roots(c)

    z = _polish_fixed_points(map, np.asarray(roots, dtype=np.complex128), n)
    w, _deriv, logmod = _vector_orbit_fixpoint(map, z, n)
    residual = np.abs(w - z) / np.maximum(1.0, np.abs(z))
    if np.any(~np.isfinite(residual)) or residual.max() > PERIODIC_RESIDUAL_TOL:
        worst = float(np.nanmax(residual))
        raise RootFindingError(
            f"periodic point polish failed: worst |T^{n}(z) - z| = {worst:.3e}"
        )
    if c_binom is not None:
        # continuation must be injective: a collision means a missed root
        rounded = np.round(z / 1e-8) * 1e-8
        if len(np.unique(rounded)) != len(z):
            raise RootFindingError(
                "periodic-point continuation produced colliding roots"
            )
    mults = np.where(logmod > -np.inf, np.exp(logmod), 0.0)
    order = np.lexsort((z.imag, z.real))
    return [(complex(z[i]), float(mults[i])) for i in order]


def is_repelling(map: RationalMap, z: complex, p: int) -> bool:
    """True iff z is a period-p point with multiplier modulus > 1."""
    w, _deriv, log_mod = _orbit_multiplier(map, z, p)
    if abs(w - z) > 1e-9 * max(1.0, abs(z)):
        raise ValueError(f"point is not periodic with period {p}: |T^p(z) - z| = {abs(w - z):.3e}")
    return log_mod > 0.0
