"""Numerical laboratory for a mean-conserving semilinear heat equation.

Subpackages cover the spectral Neumann discretization (``domain``), the
heat-kernel constants and semigroup estimates (``kernel``), the adaptive
time integrator with blow-up detection and runtime monitors (``solver``),
the constrained phase-field minimization (``minimizer``), and the
config-driven experiment front end (``config``, ``experiments``, ``cli``).
"""

__version__ = "0.1.0"
