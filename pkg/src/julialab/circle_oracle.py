"""Exact ground truth for T(z) = z^d on the unit circle.

The circle dynamics is the angle map theta -> d*theta mod 1 on rational
angles, done entirely in integer arithmetic: exact orbits, exact arc
measures, exact return times.  Every circle-case derived value in the test
suite is checked against this module.

Chord/arc dictionary: a Euclidean ball of radius r around a circle point
cuts the arc of angular half-width 2*asin(r/2), i.e. asin(r/2)/pi in turns;
its Haar measure is 2*asin(r/2)/pi.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

from .recurrence import ReturnTime


@dataclass(frozen=True)
class RationalAngle:
    """Angle p/q of a full turn, reduced, 0 <= p < q."""

    p: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("denominator must be positive")
        g = math.gcd(self.p % self.q, self.q)
        object.__setattr__(self, "p", (self.p % self.q) // g)
        object.__setattr__(self, "q", self.q // g)

    def as_fraction(self) -> Fraction:
        return Fraction(self.p, self.q)

    def as_float(self) -> float:
        return self.p / self.q


@dataclass(frozen=True)
class Arc:
    """Arc around `center` with angular half-width in turns, in (0, 1/2)."""

    center: RationalAngle | float
    halfwidth: Fraction | float

    def __post_init__(self):
        if not (0 < self.halfwidth < Fraction(1, 2)):
            raise ValueError("halfwidth must lie in (0, 1/2)")


def oracle_step(theta: RationalAngle, d: int) -> RationalAngle:
    """theta -> d*theta mod 1, exactly.  The denominator never grows."""
    if d < 2:
        raise ValueError("degree must be >= 2")
    return RationalAngle(d * theta.p, theta.q)


def oracle_orbit_cycle(theta: RationalAngle, d: int) -> tuple[list[RationalAngle], list[RationalAngle]]:
    """(preperiodic tail, cycle) of the exact orbit; always terminates since
    rational angles have at most q distinct iterates."""
    seen: dict[RationalAngle, int] = {}
    seq: list[RationalAngle] = []
    cur = theta
    while cur not in seen:
        seen[cur] = len(seq)
        seq.append(cur)
        cur = oracle_step(cur, d)
    split = seen[cur]
    return seq[:split], seq[split:]


def circle_distance(a: Fraction, b: Fraction) -> Fraction:
    """Exact distance on the circle of unit circumference."""
    diff = (a - b) % 1
    return min(diff, 1 - diff)


def oracle_return_time(
    theta: RationalAngle, d: int, arc_halfwidth: Fraction, n_max: int
) -> ReturnTime:
    """Least n >= 1 with circle-distance(d^n theta, theta) < halfwidth, exact."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    target = theta.as_fraction()
    hw = Fraction(arc_halfwidth)
    cur = theta
    for n in range(1, n_max + 1):
        cur = oracle_step(cur, d)
        if circle_distance(cur.as_fraction(), target) < hw:
            return ReturnTime.found(n, n_max)
    return ReturnTime.not_found(n_max)


def oracle_incidence_time(
    theta: RationalAngle, center: Fraction, d: int, arc_halfwidth: Fraction, n_max: int
) -> ReturnTime:
    """Incidence variant: first entry of the orbit of theta into the arc."""
    hw = Fraction(arc_halfwidth)
    cur = theta
    for n in range(1, n_max + 1):
        cur = oracle_step(cur, d)
        if circle_distance(cur.as_fraction(), Fraction(center)) < hw:
            return ReturnTime.found(n, n_max)
    return ReturnTime.not_found(n_max)


def oracle_arc_measure(arc: Arc) -> Fraction | float:
    """Haar measure of the arc: twice the half-width."""
    return 2 * arc.halfwidth


def chord_to_arc_halfwidth(r: float) -> float:
    """Angular half-width (in turns) of the arc cut by a Euclidean r-ball."""
    if not 0 < r < 2:
        raise ValueError("chord radius must lie in (0, 2)")
    return math.asin(r / 2.0) / math.pi


def arc_measure_of_chord(r: float) -> float:
    """Haar measure of the circle piece inside a Euclidean r-ball."""
    return 2.0 * math.asin(r / 2.0) / math.pi


def angle_to_complex(theta: RationalAngle | float) -> complex:
    t = theta.as_float() if isinstance(theta, RationalAngle) else float(theta)
    return cmath.exp(2j * math.pi * t)
