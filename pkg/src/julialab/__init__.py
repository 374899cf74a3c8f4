"""julialab: recurrence rates and pointwise dimensions on Julia sets.

Construct hyperbolic rational-map dynamics on Julia sets, sample the
Lyubich measure, estimate pointwise dimensions and Poincare recurrence
rates, and verify numerically that the two agree almost everywhere, with
thermodynamic-formalism dimension estimates and covariance-decay
classification on the side.
"""

__version__ = "0.1.0"
