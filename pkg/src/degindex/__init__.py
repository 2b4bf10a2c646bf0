"""Degree-theoretic solvability analysis for 1-D quasilinear Dirichlet problems.

Modules: ``exprlang`` (coefficient expressions), ``numerics`` (dense linear
algebra), ``degree`` (Brouwer degree engines), ``reduction`` (spectral
structure and index formulas), ``fem1d`` (P1 Galerkin discretization),
``verdicts`` (decision procedures), ``oracle`` (independent solution search)
and ``cli``.
"""

__version__ = "0.1.0"
