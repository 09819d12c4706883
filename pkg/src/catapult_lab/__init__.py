"""Deterministic laboratory for heavy-ball catapult dynamics.

Subpackages:

* ``models``      analytic losses, derivatives, synthetic data
* ``optim``       gradient-descent / heavy-ball stepping and schedules
* ``spectral``    sharpness (leading Hessian eigenvalue) estimation
* ``theory``      stabilization quantities, energy bounds, gradient flow
* ``trajectory``  run records and catapult detection
* ``experiments`` scenario comparisons and sweeps
* ``baselines``   minimum-norm interpolating solutions
* ``verify``      the invariant/bound check suite
* ``cli``         the catapult-lab command line tool
"""

__version__ = "0.1.0"
